#pragma once

#include <string>
#include <vector>

#include "crowdroute/geo.hpp"
#include "crowdroute/model.hpp"

namespace fixture {

inline crowdroute::CandidateSet candidates(const std::vector<std::vector<std::string>>& sequences) {
  std::vector<crowdroute::CandidateSet::Entry> entries;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    entries.push_back({"r" + std::to_string(i), crowdroute::LandmarkRoute(sequences[i])});
  }
  return crowdroute::CandidateSet(std::move(entries));
}

inline crowdroute::LandmarkSet ids(std::initializer_list<const char*> list) {
  crowdroute::LandmarkSet out;
  for (const char* s : list) out.insert(s);
  return out;
}

// rows x cols lattice with the given spacing, ids "g<r>_<c>".
inline std::vector<crowdroute::Landmark> grid(std::size_t rows, std::size_t cols, double spacing_km,
                                              crowdroute::GeoPoint origin = {31.23, 121.47}) {
  std::vector<crowdroute::Landmark> out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      crowdroute::Landmark l;
      l.id = "g" + std::to_string(r) + "_" + std::to_string(c);
      l.name = l.id;
      l.location = crowdroute::offset_km(origin, static_cast<double>(r) * spacing_km, static_cast<double>(c) * spacing_km);
      l.significance = 0.5;
      out.push_back(l);
    }
  }
  return out;
}

}  // namespace fixture

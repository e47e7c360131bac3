#pragma once

#include <string>
#include <utility>
#include <vector>

#include "crowdroute/model.hpp"
#include "crowdroute/significance.hpp"
#include "crowdroute/worker_model.hpp"

// Tab-separated record files (one record per line, '#' starts a comment
// line) plus JSON for workers, factors and matrices. See docs/data-formats.md.
namespace crowdroute::io {

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

// id, name, lat, lon[, raw significance]. Raw significances are min-max
// normalized over the file; rows without one count as 0.
std::vector<Landmark> parse_landmarks(const std::string& text);
std::string format_landmarks(const std::vector<Landmark>& landmarks);

// traveller, landmark, timestamp[, weight]
std::vector<VisitEvent> parse_checkins(const std::string& text);

// landmark, significance
SignificanceMap parse_significance(const std::string& text);
std::string format_significance(const SignificanceMap& scores);

// source tag, landmark ids separated by spaces
std::vector<CandidateSet::Entry> parse_landmark_routes(const std::string& text);
std::string format_landmark_routes(const std::vector<CandidateSet::Entry>& routes);

// source tag, "lat,lon" pairs separated by spaces
std::vector<std::pair<std::string, RawRoute>> parse_raw_routes(const std::string& text);

// One JSON object per line.
std::vector<WorkerProfile> parse_workers(const std::string& text);
std::string format_workers(const std::vector<WorkerProfile>& workers);

std::string format_factors(const LatentFactors& factors);
LatentFactors parse_factors(const std::string& text);

std::string format_matrix(const ScoreMatrix& matrix);
AccumulatedMatrix parse_accumulated(const std::string& text);

}  // namespace crowdroute::io

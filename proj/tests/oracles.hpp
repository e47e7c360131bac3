#pragma once

// Independent reference computations for the tests. Deliberately written
// with plain std containers and none of the library's internals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Ids = std::set<std::string>;
using Routes = std::vector<Ids>;

inline bool discriminative(const Ids& selected, const Routes& routes) {
  for (std::size_t a = 0; a < routes.size(); ++a) {
    for (std::size_t b = a + 1; b < routes.size(); ++b) {
      Ids ja, jb;
      for (const auto& l : selected) {
        if (routes[a].count(l)) ja.insert(l);
        if (routes[b].count(l)) jb.insert(l);
      }
      if (ja == jb) return false;
    }
  }
  return true;
}

inline bool simplest(const Ids& selected, const Routes& routes) {
  if (!discriminative(selected, routes)) return false;
  for (const auto& l : selected) {
    Ids smaller = selected;
    smaller.erase(l);
    if (discriminative(smaller, routes)) return false;
  }
  return true;
}

inline Ids beneficial(const Routes& routes) {
  Ids all, common = routes.front();
  for (const auto& r : routes) {
    all.insert(r.begin(), r.end());
    Ids keep;
    for (const auto& l : common) {
      if (r.count(l)) keep.insert(l);
    }
    common = keep;
  }
  Ids out;
  for (const auto& l : all) {
    if (!common.count(l)) out.insert(l);
  }
  return out;
}

inline std::vector<Ids> power_set(const Ids& universe) {
  std::vector<std::string> items(universe.begin(), universe.end());
  std::vector<Ids> out{{}};
  for (const auto& item : items) {
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      Ids with = out[i];
      with.insert(item);
      out.push_back(with);
    }
  }
  return out;
}

inline std::size_t ceil_log2(std::size_t n) {
  std::size_t k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

struct Choice {
  double value = -1.0;
  Ids chosen;
};

// Recursive include/exclude enumeration over the beneficial landmarks with
// the size window [lo, hi]; ties: value (1e-12), smaller size, then ids.
inline Choice best_selection(const Routes& routes, const std::map<std::string, double>& sig, std::size_t lo,
                             std::size_t hi) {
  const auto b = beneficial(routes);
  const std::vector<std::string> items(b.begin(), b.end());
  Choice best;
  Ids current;
  std::function<void(std::size_t)> walk = [&](std::size_t i) {
    if (i == items.size()) {
      if (current.empty() || current.size() < lo || current.size() > hi) return;
      if (!discriminative(current, routes)) return;
      double sum = 0.0;
      for (const auto& l : current) sum += sig.at(l);
      const double v = sum / static_cast<double>(current.size());
      bool better = best.value < 0.0 || v > best.value + 1e-12;
      if (!better && std::abs(v - best.value) <= 1e-12) {
        better = current.size() < best.chosen.size() ||
                 (current.size() == best.chosen.size() &&
                  std::vector<std::string>(current.begin(), current.end()) <
                      std::vector<std::string>(best.chosen.begin(), best.chosen.end()));
      }
      if (better) best = {v, current};
      return;
    }
    walk(i + 1);
    current.insert(items[i]);
    walk(i + 1);
    current.erase(items[i]);
  };
  walk(0);
  return best;
}

// Number of feasible discriminative sets whose value ties the optimum.
inline std::size_t optimal_count(const Routes& routes, const std::map<std::string, double>& sig, std::size_t lo,
                                 std::size_t hi, double best) {
  std::size_t count = 0;
  for (const auto& sub : power_set(beneficial(routes))) {
    if (sub.empty() || sub.size() < lo || sub.size() > hi || !discriminative(sub, routes)) continue;
    double sum = 0.0;
    for (const auto& l : sub) sum += sig.at(l);
    if (std::abs(sum / static_cast<double>(sub.size()) - best) <= 1e-12) ++count;
  }
  return count;
}

// Random candidate routes over a landmark pool: every route passes "src" and
// "dst" plus a random subset of the pool; memberships are pairwise distinct.
struct Instance {
  std::vector<std::vector<std::string>> sequences;
  Routes memberships;
  std::map<std::string, double> significance;
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t pool, bool dyadic = true) {
  Instance inst;
  std::uniform_int_distribution<int> q(0, 64);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t j = 0; j < pool; ++j) {
    inst.significance["p" + std::string(j < 10 ? "0" : "") + std::to_string(j)] = dyadic ? q(rng) / 64.0 : u(rng);
  }
  inst.significance["src"] = 1.0;
  inst.significance["dst"] = 1.0;
  std::bernoulli_distribution keep(0.5);
  for (int guard = 0; inst.memberships.size() < n && guard < 10'000; ++guard) {
    std::vector<std::string> seq{"src"};
    for (std::size_t j = 0; j < pool; ++j) {
      if (keep(rng)) seq.push_back("p" + std::string(j < 10 ? "0" : "") + std::to_string(j));
    }
    seq.push_back("dst");
    Ids m(seq.begin(), seq.end());
    if (std::find(inst.memberships.begin(), inst.memberships.end(), m) != inst.memberships.end()) continue;
    inst.memberships.push_back(m);
    inst.sequences.push_back(seq);
  }
  return inst;
}

inline double log2_or_zero(double n) { return n <= 0.0 ? 0.0 : std::log2(n); }

// s * (log2|S| - |S+|/|S| log2|S+| - |S-|/|S| log2|S-|)
inline double information_strength(double yes, double no, double s) {
  const double total = yes + no;
  return s * (log2_or_zero(total) - yes / total * log2_or_zero(yes) - no / total * log2_or_zero(no));
}

inline double gaussian_pdf(double x, double sigma) {
  return std::exp(-0.5 * (x / sigma) * (x / sigma)) / (std::sqrt(2.0 * std::numbers::pi) * sigma);
}

inline double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double r = 6371.0088;
  const double rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * rad, dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2 * r * std::asin(std::min(1.0, std::sqrt(a)));
}

}  // namespace oracle

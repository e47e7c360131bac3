#include "crowdroute/landmark_select.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <utility>

#include "crowdroute/error.hpp"

namespace crowdroute {

using Mask = SelectionProblem::Mask;

std::string_view to_string(SelectionAlgorithm algorithm) noexcept {
  switch (algorithm) {
    case SelectionAlgorithm::kBruteForce: return "brute";
    case SelectionAlgorithm::kIncremental: return "ils";
    case SelectionAlgorithm::kGreedy: return "greedy";
  }
  return "unknown";
}

SelectionAlgorithm parse_selection_algorithm(std::string_view name) {
  if (name == "brute") return SelectionAlgorithm::kBruteForce;
  if (name == "ils") return SelectionAlgorithm::kIncremental;
  if (name == "greedy") return SelectionAlgorithm::kGreedy;
  throw Error(ErrorCode::kInvalidArgument, "unknown selection algorithm '" + std::string(name) + "'");
}

namespace {

constexpr double kValueTolerance = 1e-12;
constexpr std::size_t kBruteForceGuard = 20;

std::size_t ceil_log2(std::size_t n) {
  std::size_t k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

Mask bit(std::size_t pos) { return Mask{1} << pos; }

std::size_t popcount(Mask m) { return static_cast<std::size_t>(std::popcount(m)); }

// Highest set position, i.e. the least significant landmark in the set.
std::size_t last_position(Mask m) { return 63 - static_cast<std::size_t>(std::countl_zero(m)); }

// Running best with the shared tie-break: higher value, then fewer
// landmarks, then lexicographically smaller sorted ids.
class Best {
 public:
  explicit Best(const SelectionProblem& problem) : problem_(problem) {}

  void offer(Mask candidate, double value) {
    if (!found_) {
      take(candidate, value);
      return;
    }
    if (value > value_ + kValueTolerance) {
      take(candidate, value);
      return;
    }
    if (value < value_ - kValueTolerance) return;
    const std::size_t a = popcount(candidate);
    const std::size_t b = popcount(mask_);
    if (a != b) {
      if (a < b) take(candidate, value);
      return;
    }
    if (candidate != mask_ && problem_.ids(candidate) < problem_.ids(mask_)) take(candidate, value);
  }

  bool found() const noexcept { return found_; }

  SelectionResult result(SelectionAlgorithm algorithm, const SelectionStats& stats) const {
    SelectionResult r;
    r.algorithm = algorithm;
    r.stats = stats;
    if (found_) {
      r.chosen = problem_.ids(mask_);
      r.value = value_;
    }
    return r;
  }

 private:
  void take(Mask candidate, double value) {
    found_ = true;
    mask_ = candidate;
    value_ = value;
  }

  const SelectionProblem& problem_;
  bool found_ = false;
  Mask mask_ = 0;
  double value_ = 0.0;
};

// GetMaxSet for every feasible size k >= |base|: add the most significant
// landmarks outside base one at a time and offer each prefix.
void offer_fills(const SelectionProblem& problem, Mask base, Best& best) {
  const std::size_t base_size = popcount(base);
  if (base_size > problem.max_size()) return;
  Mask filled = base;
  std::size_t size = base_size;
  auto offer_current = [&] {
    if (size >= problem.min_size()) best.offer(filled, problem.value(filled));
  };
  offer_current();
  for (std::size_t pos = 0; pos < problem.beneficial_count() && size < problem.max_size(); ++pos) {
    if (filled & bit(pos)) continue;
    filled |= bit(pos);
    ++size;
    offer_current();
  }
}

SelectionResult trivial_result(SelectionAlgorithm algorithm) {
  SelectionResult r;
  r.algorithm = algorithm;
  return r;
}

}  // namespace

SelectionProblem::SelectionProblem(const CandidateSet& routes, const SignificanceMap& significance,
                                   SelectionOptions options) {
  if (routes.size() == 0) throw Error(ErrorCode::kInvalidArgument, "selection needs at least one route");
  const LandmarkSet beneficial = beneficial_landmarks(routes);
  if (beneficial.size() > kMaxBeneficial) {
    throw Error(ErrorCode::kTooLarge, "selection supports at most 64 beneficial landmarks, got " +
                                          std::to_string(beneficial.size()));
  }
  std::vector<std::pair<double, LandmarkId>> order;
  for (const auto& id : beneficial) {
    auto it = significance.find(id);
    if (it == significance.end()) throw Error(ErrorCode::kUnknownLandmark, "no significance for " + id);
    order.emplace_back(it->second, id);
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (auto& [s, id] : order) {
    significance_.push_back(s);
    beneficial_.push_back(std::move(id));
  }
  route_masks_.resize(routes.size(), 0);
  for (std::size_t r = 0; r < routes.size(); ++r) {
    for (std::size_t pos = 0; pos < beneficial_.size(); ++pos) {
      if (routes.membership(r).count(beneficial_[pos])) route_masks_[r] |= bit(pos);
    }
  }
  const std::size_t n = routes.size();
  min_size_ = options.relax_min_size ? 1 : std::max<std::size_t>(1, ceil_log2(n));
  max_size_ = std::min(n, beneficial_.size());
}

bool SelectionProblem::discriminates(Mask selected) const {
  std::vector<Mask> joint;
  joint.reserve(route_masks_.size());
  for (Mask m : route_masks_) joint.push_back(m & selected);
  std::sort(joint.begin(), joint.end());
  return std::adjacent_find(joint.begin(), joint.end()) == joint.end();
}

double SelectionProblem::value(Mask selected) const {
  if (selected == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t pos = 0; pos < beneficial_.size(); ++pos) {
    if (selected & bit(pos)) sum += significance_[pos];
  }
  return sum / static_cast<double>(popcount(selected));
}

std::vector<LandmarkId> SelectionProblem::ids(Mask selected) const {
  std::vector<LandmarkId> out;
  for (std::size_t pos = 0; pos < beneficial_.size(); ++pos) {
    if (selected & bit(pos)) out.push_back(beneficial_[pos]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Mask SelectionProblem::mask_of(const LandmarkSet& ids) const {
  Mask m = 0;
  for (const auto& id : ids) {
    auto it = std::find(beneficial_.begin(), beneficial_.end(), id);
    if (it == beneficial_.end()) throw Error(ErrorCode::kInvalidArgument, id + " is not a beneficial landmark");
    m |= bit(static_cast<std::size_t>(it - beneficial_.begin()));
  }
  return m;
}

SelectionResult brute_force_select(const SelectionProblem& problem) {
  if (problem.route_count() < 2) return trivial_result(SelectionAlgorithm::kBruteForce);
  const std::size_t b = problem.beneficial_count();
  if (b > kBruteForceGuard) {
    throw Error(ErrorCode::kTooLarge, "brute force is limited to 20 beneficial landmarks");
  }
  SelectionStats stats;
  Best best(problem);
  const Mask end = bit(b);
  for (Mask m = 1; m < end; ++m) {
    ++stats.sets_tested;
    const std::size_t size = popcount(m);
    if (size < problem.min_size() || size > problem.max_size()) continue;
    if (problem.discriminates(m)) best.offer(m, problem.value(m));
  }
  if (!best.found()) throw Error(ErrorCode::kInfeasible, "no discriminative landmark set exists");
  return best.result(SelectionAlgorithm::kBruteForce, stats);
}

namespace {

std::map<std::size_t, std::vector<Mask>> simplest_masks(const SelectionProblem& problem, SelectionStats& stats) {
  std::map<std::size_t, std::vector<Mask>> out;
  const std::size_t b = problem.beneficial_count();
  if (problem.route_count() < 2 || b == 0) return out;

  auto is_simplest = [&](Mask m) {
    for (Mask rest = m; rest != 0; rest &= rest - 1) {
      if (problem.discriminates(m & ~(rest & (~rest + 1)))) return false;
    }
    return true;
  };

  std::vector<Mask> level;
  for (std::size_t pos = 0; pos < b; ++pos) level.push_back(bit(pos));
  for (std::size_t k = 1; !level.empty(); ++k) {
    std::vector<Mask> undecided;
    for (Mask s : level) {
      ++stats.sets_tested;
      if (problem.discriminates(s)) {
        if (is_simplest(s)) out[k].push_back(s);
      } else {
        undecided.push_back(s);
      }
    }
    if (k == b) break;
    std::vector<Mask> next;
    for (Mask s : undecided) {
      ++stats.nodes_expanded;
      for (std::size_t pos = last_position(s) + 1; pos < b; ++pos) next.push_back(s | bit(pos));
    }
    level.swap(next);
  }
  return out;
}

}  // namespace

SimplestSets enumerate_simplest_sets(const SelectionProblem& problem, SelectionStats* stats) {
  SelectionStats local;
  SimplestSets out;
  for (const auto& [k, masks] : simplest_masks(problem, local)) {
    auto& bucket = out[k];
    for (Mask m : masks) bucket.push_back(problem.ids(m));
  }
  if (stats != nullptr) *stats = local;
  return out;
}

SelectionResult ils_select(const SelectionProblem& problem) {
  if (problem.route_count() < 2) return trivial_result(SelectionAlgorithm::kIncremental);
  SelectionStats stats;
  Best best(problem);
  for (const auto& [size, masks] : simplest_masks(problem, stats)) {
    for (Mask s : masks) offer_fills(problem, s, best);
  }
  if (!best.found()) throw Error(ErrorCode::kInfeasible, "no discriminative landmark set exists");
  return best.result(SelectionAlgorithm::kIncremental, stats);
}

namespace {

void expand(const SelectionProblem& problem, Mask s, Best& best, SelectionStats& stats) {
  ++stats.nodes_expanded;
  if (popcount(s) >= problem.max_size()) return;
  const std::size_t start = s == 0 ? 0 : last_position(s) + 1;
  for (std::size_t pos = start; pos < problem.beneficial_count(); ++pos) {
    const Mask next = s | bit(pos);
    ++stats.sets_tested;
    if (problem.discriminates(next)) {
      offer_fills(problem, next, best);
    } else {
      expand(problem, next, best, stats);
    }
  }
}

}  // namespace

SelectionResult greedy_select(const SelectionProblem& problem) {
  if (problem.route_count() < 2) return trivial_result(SelectionAlgorithm::kGreedy);
  SelectionStats stats;
  Best best(problem);
  expand(problem, 0, best, stats);
  if (!best.found()) throw Error(ErrorCode::kInfeasible, "no discriminative landmark set exists");
  return best.result(SelectionAlgorithm::kGreedy, stats);
}

SelectionResult select_landmarks(const SelectionProblem& problem, SelectionAlgorithm algorithm) {
  switch (algorithm) {
    case SelectionAlgorithm::kBruteForce: return brute_force_select(problem);
    case SelectionAlgorithm::kIncremental: return ils_select(problem);
    case SelectionAlgorithm::kGreedy: return greedy_select(problem);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown selection algorithm");
}

}  // namespace crowdroute

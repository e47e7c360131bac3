#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "crowdroute/model.hpp"

namespace crowdroute {

enum class SelectionAlgorithm { kBruteForce, kIncremental, kGreedy };

std::string_view to_string(SelectionAlgorithm algorithm) noexcept;
SelectionAlgorithm parse_selection_algorithm(std::string_view name);  // brute | ils | greedy

struct SelectionOptions {
  // Drop the ceil(log2 n) lower bound on the set size.
  bool relax_min_size = false;
};

// The search space shared by every selector: beneficial landmarks sorted by
// significance (descending, ties by id) and each route's membership as a
// bitmask over that order. Bit i is the i-th most significant landmark.
class SelectionProblem {
 public:
  using Mask = std::uint64_t;
  static constexpr std::size_t kMaxBeneficial = 64;

  SelectionProblem(const CandidateSet& routes, const SignificanceMap& significance,
                   SelectionOptions options = {});

  std::size_t route_count() const noexcept { return route_masks_.size(); }
  std::size_t beneficial_count() const noexcept { return beneficial_.size(); }
  const std::vector<LandmarkId>& beneficial() const noexcept { return beneficial_; }
  double significance_at(std::size_t pos) const { return significance_.at(pos); }
  const std::vector<Mask>& route_masks() const noexcept { return route_masks_; }

  // Feasible set sizes: [ceil(log2 n) or 1, min(n, |beneficial|)].
  std::size_t min_size() const noexcept { return min_size_; }
  std::size_t max_size() const noexcept { return max_size_; }

  bool discriminates(Mask selected) const;
  double value(Mask selected) const;  // mean significance; 0 for the empty mask
  std::vector<LandmarkId> ids(Mask selected) const;  // sorted by id
  Mask mask_of(const LandmarkSet& ids) const;  // throws kInvalidArgument on non-beneficial ids

 private:
  std::vector<LandmarkId> beneficial_;
  std::vector<double> significance_;
  std::vector<Mask> route_masks_;
  std::size_t min_size_ = 0;
  std::size_t max_size_ = 0;
};

struct SelectionStats {
  std::uint64_t nodes_expanded = 0;
  std::uint64_t sets_tested = 0;
};

struct SelectionResult {
  std::vector<LandmarkId> chosen;  // sorted by id
  double value = 0.0;
  SelectionAlgorithm algorithm = SelectionAlgorithm::kGreedy;
  SelectionStats stats;
};

using SimplestSets = std::map<std::size_t, std::vector<std::vector<LandmarkId>>>;

// Exhaustive search over every non-empty subset of the beneficial landmarks.
// Guarded to 20 beneficial landmarks (kTooLarge beyond).
SelectionResult brute_force_select(const SelectionProblem& problem);

// Bottom-up enumeration of every simplest discriminative set, keyed by size.
SimplestSets enumerate_simplest_sets(const SelectionProblem& problem, SelectionStats* stats = nullptr);

// Incremental selection: fill every simplest set with the most significant
// remaining landmarks for each feasible size and keep the best.
SelectionResult ils_select(const SelectionProblem& problem);

// Depth-first expansion in descending significance order; a discriminative
// node is scored with its best fills and its subtree is pruned.
SelectionResult greedy_select(const SelectionProblem& problem);

SelectionResult select_landmarks(const SelectionProblem& problem, SelectionAlgorithm algorithm);

}  // namespace crowdroute

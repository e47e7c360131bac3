#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdroute/model.hpp"

namespace crowdroute {

struct Answer {
  LandmarkId landmark;
  bool yes = false;

  friend bool operator==(const Answer&, const Answer&) = default;
};

using AnswerTrace = std::vector<Answer>;

// Significance times the information gain (bits) of splitting `total` routes
// into yes/no parts under a uniform route distribution.
double information_strength(std::size_t yes_count, std::size_t no_count, double significance);

// Same, counting how many routes of `subset` contain the landmark.
double information_strength(const LandmarkId& landmark, const CandidateSet& routes,
                            std::span<const std::size_t> subset, double significance);

// Result of walking a tree with a trace: either the next landmark to ask
// about or the route index of the reached leaf.
struct NextStep {
  bool resolved = false;
  LandmarkId landmark;
  std::size_t route = 0;
  std::size_t depth = 0;  // questions already answered
};

class QuestionTree {
 public:
  struct Node {
    bool leaf = false;
    LandmarkId landmark;  // internal nodes
    std::size_t yes = 0;
    std::size_t no = 0;
    std::size_t route = 0;  // leaves
  };

  QuestionTree() = default;

  std::span<const Node> nodes() const noexcept { return nodes_; }
  std::size_t root() const noexcept { return root_; }
  bool empty() const noexcept { return nodes_.empty(); }

  std::size_t leaf_count() const;
  std::size_t depth() const;
  std::size_t depth_of(std::size_t route) const;  // questions on the path to that leaf
  AnswerTrace path_to(std::size_t route) const;   // throws kNotFound
  double expected_questions() const;              // uniform over leaves

  NextStep next(std::span<const Answer> trace) const;  // throws kInvalidTrace

  std::string to_json() const;
  static QuestionTree from_json(const std::string& text);

  friend bool operator==(const QuestionTree& a, const QuestionTree& b);

 private:
  friend QuestionTree build_tree(const LandmarkSet&, const CandidateSet&, const SignificanceMap&);
  friend class TreeCodec;

  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

// ID3 over the selected landmarks: each node asks the unused landmark with the
// largest information strength on its surviving routes (ties: higher
// significance, then smaller id). Throws kNotDiscriminative when some subset
// can no longer be split.
QuestionTree build_tree(const LandmarkSet& selected, const CandidateSet& routes,
                        const SignificanceMap& significance);

inline NextStep next_question(const QuestionTree& tree, std::span<const Answer> trace) {
  return tree.next(trace);
}

}  // namespace crowdroute

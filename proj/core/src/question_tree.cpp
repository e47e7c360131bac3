#include "crowdroute/question_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "crowdroute/error.hpp"
#include "json.hpp"

namespace crowdroute {

namespace {

double entropy_term(std::size_t part, std::size_t total) {
  if (part == 0) return 0.0;
  return static_cast<double>(part) / static_cast<double>(total) * std::log2(static_cast<double>(part));
}

}  // namespace

double information_strength(std::size_t yes_count, std::size_t no_count, double significance) {
  const std::size_t total = yes_count + no_count;
  if (total == 0) throw Error(ErrorCode::kInvalidArgument, "information strength of an empty subset");
  const double gain = std::log2(static_cast<double>(total)) - entropy_term(yes_count, total) -
                      entropy_term(no_count, total);
  return significance * std::max(0.0, gain);
}

double information_strength(const LandmarkId& landmark, const CandidateSet& routes,
                            std::span<const std::size_t> subset, double significance) {
  std::size_t yes = 0;
  for (std::size_t r : subset) yes += routes.membership(r).count(landmark);
  return information_strength(yes, subset.size() - yes, significance);
}

QuestionTree build_tree(const LandmarkSet& selected, const CandidateSet& routes,
                        const SignificanceMap& significance) {
  QuestionTree tree;
  std::vector<LandmarkId> pool(selected.begin(), selected.end());
  auto sig = [&](const LandmarkId& id) {
    auto it = significance.find(id);
    if (it == significance.end()) throw Error(ErrorCode::kUnknownLandmark, "no significance for " + id);
    return it->second;
  };

  std::function<std::size_t(const std::vector<std::size_t>&, std::vector<bool>&)> grow =
      [&](const std::vector<std::size_t>& subset, std::vector<bool>& used) -> std::size_t {
    if (subset.size() == 1) {
      tree.nodes_.push_back({.leaf = true, .landmark = {}, .yes = 0, .no = 0, .route = subset.front()});
      return tree.nodes_.size() - 1;
    }
    // Only landmarks that actually split the subset qualify; a zero-significance
    // splitter still beats a non-splitting landmark.
    std::size_t pick = pool.size();
    double pick_is = 0.0;
    double pick_sig = 0.0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      std::size_t yes = 0;
      for (std::size_t r : subset) yes += routes.membership(r).count(pool[i]);
      if (yes == 0 || yes == subset.size()) continue;
      const double s = sig(pool[i]);
      const double is = information_strength(yes, subset.size() - yes, s);
      // pool is id-sorted, so keeping the earlier one resolves the final tie
      if (pick == pool.size() || is > pick_is || (is == pick_is && s > pick_sig)) {
        pick = i;
        pick_is = is;
        pick_sig = s;
      }
    }
    if (pick == pool.size()) {
      throw Error(ErrorCode::kNotDiscriminative, "selected landmarks cannot separate all candidate routes");
    }
    std::vector<std::size_t> yes_part, no_part;
    for (std::size_t r : subset) {
      (routes.membership(r).count(pool[pick]) ? yes_part : no_part).push_back(r);
    }
    used[pick] = true;
    const std::size_t yes_node = grow(yes_part, used);
    const std::size_t no_node = grow(no_part, used);
    used[pick] = false;
    tree.nodes_.push_back({.leaf = false, .landmark = pool[pick], .yes = yes_node, .no = no_node});
    return tree.nodes_.size() - 1;
  };

  if (routes.size() == 0) throw Error(ErrorCode::kInvalidArgument, "tree over an empty candidate set");
  std::vector<std::size_t> all(routes.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<bool> used(pool.size(), false);
  tree.root_ = grow(all, used);
  return tree;
}

std::size_t QuestionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.leaf; }));
}

std::size_t QuestionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::function<std::size_t(std::size_t)> walk = [&](std::size_t i) -> std::size_t {
    const Node& n = nodes_[i];
    return n.leaf ? 0 : 1 + std::max(walk(n.yes), walk(n.no));
  };
  return walk(root_);
}

AnswerTrace QuestionTree::path_to(std::size_t route) const {
  AnswerTrace path;
  std::function<bool(std::size_t)> walk = [&](std::size_t i) -> bool {
    const Node& n = nodes_[i];
    if (n.leaf) return n.route == route;
    path.push_back({n.landmark, true});
    if (walk(n.yes)) return true;
    path.back().yes = false;
    if (walk(n.no)) return true;
    path.pop_back();
    return false;
  };
  if (nodes_.empty() || !walk(root_)) {
    throw Error(ErrorCode::kNotFound, "route " + std::to_string(route) + " is not a leaf of the tree");
  }
  return path;
}

std::size_t QuestionTree::depth_of(std::size_t route) const { return path_to(route).size(); }

double QuestionTree::expected_questions() const {
  double total = 0.0;
  std::size_t leaves = 0;
  for (const Node& n : nodes_) {
    if (!n.leaf) continue;
    total += static_cast<double>(depth_of(n.route));
    ++leaves;
  }
  return leaves == 0 ? 0.0 : total / static_cast<double>(leaves);
}

NextStep QuestionTree::next(std::span<const Answer> trace) const {
  if (nodes_.empty()) throw Error(ErrorCode::kInvalidTrace, "empty question tree");
  std::size_t at = root_;
  for (const Answer& a : trace) {
    const Node& n = nodes_[at];
    if (n.leaf) throw Error(ErrorCode::kInvalidTrace, "trace continues past a leaf");
    if (n.landmark != a.landmark) {
      throw Error(ErrorCode::kInvalidTrace, "trace asks " + a.landmark + " where the tree asks " + n.landmark);
    }
    at = a.yes ? n.yes : n.no;
  }
  const Node& n = nodes_[at];
  NextStep step;
  step.depth = trace.size();
  step.resolved = n.leaf;
  if (n.leaf) {
    step.route = n.route;
  } else {
    step.landmark = n.landmark;
  }
  return step;
}

namespace {

nlohmann::json node_json(std::span<const QuestionTree::Node> nodes, std::size_t i) {
  const auto& n = nodes[i];
  if (n.leaf) return {{"kind", "leaf"}, {"route", n.route}};
  return {{"kind", "question"},
          {"landmark", n.landmark},
          {"yes", node_json(nodes, n.yes)},
          {"no", node_json(nodes, n.no)}};
}

}  // namespace

class TreeCodec {
 public:
  static std::size_t read(QuestionTree& tree, const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "leaf") {
      tree.nodes_.push_back({.leaf = true, .landmark = {}, .yes = 0, .no = 0, .route = j.at("route").get<std::size_t>()});
    } else if (kind == "question") {
      const std::size_t yes = read(tree, j.at("yes"));
      const std::size_t no = read(tree, j.at("no"));
      tree.nodes_.push_back({.leaf = false, .landmark = j.at("landmark").get<std::string>(), .yes = yes, .no = no});
    } else {
      throw Error(ErrorCode::kParse, "unknown tree node kind '" + kind + "'");
    }
    return tree.nodes_.size() - 1;
  }
};

std::string QuestionTree::to_json() const {
  if (nodes_.empty()) return "null";
  return node_json(nodes_, root_).dump();
}

QuestionTree QuestionTree::from_json(const std::string& text) {
  QuestionTree tree;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.is_null()) return tree;
    tree.root_ = TreeCodec::read(tree, j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad question tree: ") + e.what());
  }
  return tree;
}

bool operator==(const QuestionTree& a, const QuestionTree& b) { return a.to_json() == b.to_json(); }

}  // namespace crowdroute

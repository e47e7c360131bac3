#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crowdroute/model.hpp"

namespace crowdroute {

using WorkerId = std::string;

struct AnswerHistory {
  std::uint32_t correct = 0;
  std::uint32_t wrong = 0;

  friend bool operator==(const AnswerHistory&, const AnswerHistory&) = default;
};

struct WorkerProfile {
  WorkerId id;
  GeoPoint home;
  GeoPoint work;
  GeoPoint frequented;
  std::map<LandmarkId, AnswerHistory> history;
  std::vector<double> response_hours;
  std::uint32_t outstanding_tasks = 0;

  friend bool operator==(const WorkerProfile&, const WorkerProfile&) = default;
};

struct FamiliarityConfig {
  double alpha = 0.5;
  double beta = 0.3;
  double eta_dis_km = 3.0;
  // Use kilometers directly in the exponential instead of d / eta_dis.
  bool raw_distance = false;
};

// alpha * exp(-(d_home + d_work + d_fr)) + (1 - alpha) * (#correct + beta * #wrong)
// where any anchor farther than eta_dis counts as an infinite distance.
double profile_familiarity(const WorkerProfile& worker, const Landmark& landmark,
                           const FamiliarityConfig& config);

// Row-sparse worker x landmark score matrix. Only non-zero entries are stored,
// so "stored" doubles as the observation indicator.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::vector<WorkerId> workers, std::vector<LandmarkId> landmarks);

  std::size_t rows() const noexcept { return workers_.size(); }
  std::size_t cols() const noexcept { return landmarks_.size(); }
  const std::vector<WorkerId>& workers() const noexcept { return workers_; }
  const std::vector<LandmarkId>& landmarks() const noexcept { return landmarks_; }

  std::size_t row_of(const WorkerId& id) const;    // throws kUnknownWorker
  std::size_t col_of(const LandmarkId& id) const;  // throws kUnknownLandmark
  bool has_row(const WorkerId& id) const { return row_index_.count(id) != 0; }
  bool has_col(const LandmarkId& id) const { return col_index_.count(id) != 0; }

  double get(std::size_t i, std::size_t j) const;
  double get(const WorkerId& w, const LandmarkId& l) const;
  bool observed(std::size_t i, std::size_t j) const { return get(i, j) != 0.0; }
  void set(std::size_t i, std::size_t j, double value);  // 0 erases

  const std::map<std::size_t, double>& row(std::size_t i) const { return entries_.at(i); }
  std::size_t nnz() const;
  Eigen::MatrixXd dense() const;

  friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;

 private:
  std::vector<WorkerId> workers_;
  std::vector<LandmarkId> landmarks_;
  std::map<WorkerId, std::size_t> row_index_;
  std::map<LandmarkId, std::size_t> col_index_;
  std::vector<std::map<std::size_t, double>> entries_;
};

// M (and the completed M'): raw familiarity scores.
struct FamiliarityMatrix : ScoreMatrix {
  using ScoreMatrix::ScoreMatrix;
};

// M*: spatially accumulated familiarity.
struct AccumulatedMatrix : ScoreMatrix {
  using ScoreMatrix::ScoreMatrix;
};

FamiliarityMatrix build_matrix(std::span<const WorkerProfile> workers, const LandmarkIndex& landmarks,
                               const FamiliarityConfig& config);

struct PmfConfig {
  std::size_t latent_dim = 8;
  double lambda_w = 0.05;
  double lambda_l = 0.05;
  double learning_rate = 0.005;
  std::size_t max_iters = 5000;
  double tol = 1e-8;
  std::uint64_t seed = 42;
};

struct LatentFactors {
  Eigen::MatrixXd w;  // d x n workers
  Eigen::MatrixXd l;  // d x m landmarks
  PmfConfig config;
  std::vector<WorkerId> workers;
  std::vector<LandmarkId> landmarks;
  std::size_t iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  double final_learning_rate = 0.0;
  std::size_t effective_rank = 0;
};

struct PmfGradient {
  Eigen::MatrixXd w;
  Eigen::MatrixXd l;
};

double pmf_objective(const ScoreMatrix& m, const Eigen::MatrixXd& w, const Eigen::MatrixXd& l,
                     double lambda_w, double lambda_l);
PmfGradient pmf_gradient(const ScoreMatrix& m, const Eigen::MatrixXd& w, const Eigen::MatrixXd& l,
                         double lambda_w, double lambda_l);

// Full-batch gradient descent from seeded N(0, 0.1^2) factors. A step that
// raises the objective is rejected and the learning rate halved.
LatentFactors train_pmf(const ScoreMatrix& m, const PmfConfig& config);

// Fills unobserved cells with max(0, w_i . l_j); observed cells are copied.
FamiliarityMatrix predict_matrix(const LatentFactors& factors, const ScoreMatrix& observed);

// F_ij = sum over landmarks l within eta_dis of l_j (l_j included) of
// N(d(l, l_j); 0, (eta_dis / 3)^2) * f_il.
AccumulatedMatrix accumulate(const ScoreMatrix& predicted, const LandmarkIndex& landmarks, double eta_dis_km);

// Number of singular values of w^T l above the threshold.
std::size_t effective_rank(const Eigen::MatrixXd& w, const Eigen::MatrixXd& l, double threshold = 1e-6);

}  // namespace crowdroute

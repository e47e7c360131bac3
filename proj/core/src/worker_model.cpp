#include "crowdroute/worker_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "crowdroute/error.hpp"

namespace crowdroute {

double profile_familiarity(const WorkerProfile& worker, const Landmark& landmark,
                           const FamiliarityConfig& config) {
  if (config.alpha < 0.0 || config.alpha > 1.0 || config.beta < 0.0 || config.beta >= 1.0 ||
      !(config.eta_dis_km > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "familiarity needs alpha in [0,1], beta in [0,1), eta_dis > 0");
  }
  double exponent = 0.0;
  for (const GeoPoint* anchor : {&worker.home, &worker.work, &worker.frequented}) {
    const double d = distance_km(landmark.location, *anchor);
    if (d > config.eta_dis_km) {
      exponent = std::numeric_limits<double>::infinity();
      break;
    }
    exponent += config.raw_distance ? d : d / config.eta_dis_km;
  }
  double history = 0.0;
  if (auto it = worker.history.find(landmark.id); it != worker.history.end()) {
    history = static_cast<double>(it->second.correct) + config.beta * static_cast<double>(it->second.wrong);
  }
  return config.alpha * std::exp(-exponent) + (1.0 - config.alpha) * history;
}

ScoreMatrix::ScoreMatrix(std::vector<WorkerId> workers, std::vector<LandmarkId> landmarks)
    : workers_(std::move(workers)), landmarks_(std::move(landmarks)), entries_(workers_.size()) {
  for (std::size_t i = 0; i < workers_.size(); ++i) {
    if (!row_index_.emplace(workers_[i], i).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate worker id " + workers_[i]);
    }
  }
  for (std::size_t j = 0; j < landmarks_.size(); ++j) {
    if (!col_index_.emplace(landmarks_[j], j).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate landmark id " + landmarks_[j]);
    }
  }
}

std::size_t ScoreMatrix::row_of(const WorkerId& id) const {
  auto it = row_index_.find(id);
  if (it == row_index_.end()) throw Error(ErrorCode::kUnknownWorker, "unknown worker " + id);
  return it->second;
}

std::size_t ScoreMatrix::col_of(const LandmarkId& id) const {
  auto it = col_index_.find(id);
  if (it == col_index_.end()) throw Error(ErrorCode::kUnknownLandmark, "unknown landmark " + id);
  return it->second;
}

double ScoreMatrix::get(std::size_t i, std::size_t j) const {
  const auto& row = entries_.at(i);
  auto it = row.find(j);
  return it == row.end() ? 0.0 : it->second;
}

double ScoreMatrix::get(const WorkerId& w, const LandmarkId& l) const { return get(row_of(w), col_of(l)); }

void ScoreMatrix::set(std::size_t i, std::size_t j, double value) {
  if (j >= landmarks_.size()) throw Error(ErrorCode::kDimensionMismatch, "column out of range");
  if (!std::isfinite(value)) throw Error(ErrorCode::kInvalidArgument, "non-finite matrix entry");
  auto& row = entries_.at(i);
  if (value == 0.0) {
    row.erase(j);
  } else {
    row[j] = value;
  }
}

std::size_t ScoreMatrix::nnz() const {
  std::size_t n = 0;
  for (const auto& row : entries_) n += row.size();
  return n;
}

Eigen::MatrixXd ScoreMatrix::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (const auto& [j, v] : entries_[i]) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
  }
  return out;
}

FamiliarityMatrix build_matrix(std::span<const WorkerProfile> workers, const LandmarkIndex& landmarks,
                               const FamiliarityConfig& config) {
  std::vector<WorkerId> worker_ids;
  for (const auto& w : workers) worker_ids.push_back(w.id);
  std::vector<LandmarkId> landmark_ids;
  for (const auto& l : landmarks.landmarks()) landmark_ids.push_back(l.id);
  FamiliarityMatrix m(std::move(worker_ids), std::move(landmark_ids));
  for (std::size_t i = 0; i < workers.size(); ++i) {
    for (std::size_t j = 0; j < landmarks.size(); ++j) {
      const double f = profile_familiarity(workers[i], landmarks.landmarks()[j], config);
      if (f > 0.0) m.set(i, j, f);
    }
  }
  return m;
}

namespace {

void check_dims(const ScoreMatrix& m, const Eigen::MatrixXd& w, const Eigen::MatrixXd& l) {
  if (w.rows() != l.rows() || static_cast<std::size_t>(w.cols()) != m.rows() ||
      static_cast<std::size_t>(l.cols()) != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "factor shapes do not match the familiarity matrix");
  }
}

}  // namespace

double pmf_objective(const ScoreMatrix& m, const Eigen::MatrixXd& w, const Eigen::MatrixXd& l,
                     double lambda_w, double lambda_l) {
  check_dims(m, w, l);
  double loss = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto wi = w.col(static_cast<Eigen::Index>(i));
    for (const auto& [j, v] : m.row(i)) {
      const double r = v - wi.dot(l.col(static_cast<Eigen::Index>(j)));
      loss += r * r;
    }
  }
  return loss + lambda_w * w.squaredNorm() + lambda_l * l.squaredNorm();
}

PmfGradient pmf_gradient(const ScoreMatrix& m, const Eigen::MatrixXd& w, const Eigen::MatrixXd& l,
                         double lambda_w, double lambda_l) {
  check_dims(m, w, l);
  PmfGradient g{2.0 * lambda_w * w, 2.0 * lambda_l * l};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (const auto& [j, v] : m.row(i)) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double r = v - w.col(ii).dot(l.col(jj));
      g.w.col(ii) -= 2.0 * r * l.col(jj);
      g.l.col(jj) -= 2.0 * r * w.col(ii);
    }
  }
  return g;
}

std::size_t effective_rank(const Eigen::MatrixXd& w, const Eigen::MatrixXd& l, double threshold) {
  if (w.size() == 0 || l.size() == 0) return 0;
  const Eigen::MatrixXd product = w.transpose() * l;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(product);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > threshold;
  return rank;
}

LatentFactors train_pmf(const ScoreMatrix& m, const PmfConfig& config) {
  if (config.latent_dim < 1) throw Error(ErrorCode::kInvalidArgument, "latent dimension must be >= 1");
  if (!(config.learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  if (config.lambda_w < 0.0 || config.lambda_l < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "regularization weights must be non-negative");
  }

  const auto d = static_cast<Eigen::Index>(config.latent_dim);
  LatentFactors f;
  f.config = config;
  f.workers = m.workers();
  f.landmarks = m.landmarks();
  f.w.resize(d, static_cast<Eigen::Index>(m.rows()));
  f.l.resize(d, static_cast<Eigen::Index>(m.cols()));

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (Eigen::Index c = 0; c < f.w.cols(); ++c) {
    for (Eigen::Index r = 0; r < d; ++r) f.w(r, c) = noise(rng);
  }
  for (Eigen::Index c = 0; c < f.l.cols(); ++c) {
    for (Eigen::Index r = 0; r < d; ++r) f.l(r, c) = noise(rng);
  }

  double lr = config.learning_rate;
  double objective = pmf_objective(m, f.w, f.l, config.lambda_w, config.lambda_l);
  if (!std::isfinite(objective)) throw Error(ErrorCode::kDivergence, "initial PMF objective is not finite");
  PmfGradient grad = pmf_gradient(m, f.w, f.l, config.lambda_w, config.lambda_l);

  std::size_t it = 0;
  while (it < config.max_iters) {
    ++it;
    Eigen::MatrixXd w_next = f.w - lr * grad.w;
    Eigen::MatrixXd l_next = f.l - lr * grad.l;
    const double next = pmf_objective(m, w_next, l_next, config.lambda_w, config.lambda_l);
    if (!std::isfinite(next) || next > objective) {
      lr *= 0.5;
      if (lr < 1e-300) break;
      continue;
    }
    const double decrease = objective - next;
    f.w = std::move(w_next);
    f.l = std::move(l_next);
    const double previous = objective;
    objective = next;
    grad = pmf_gradient(m, f.w, f.l, config.lambda_w, config.lambda_l);
    if (!grad.w.allFinite() || !grad.l.allFinite()) {
      throw Error(ErrorCode::kDivergence, "PMF gradient became non-finite");
    }
    if (previous == 0.0 || decrease / previous < config.tol) break;
  }

  f.iterations = it;
  f.objective = objective;
  f.gradient_norm = std::sqrt(grad.w.squaredNorm() + grad.l.squaredNorm());
  f.final_learning_rate = lr;
  f.effective_rank = effective_rank(f.w, f.l);
  if (!f.w.allFinite() || !f.l.allFinite()) throw Error(ErrorCode::kDivergence, "PMF factors are not finite");
  return f;
}

FamiliarityMatrix predict_matrix(const LatentFactors& factors, const ScoreMatrix& observed) {
  if (static_cast<std::size_t>(factors.w.cols()) != observed.rows() ||
      static_cast<std::size_t>(factors.l.cols()) != observed.cols() || factors.w.rows() != factors.l.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "factors do not match the observed matrix");
  }
  FamiliarityMatrix out(observed.workers(), observed.landmarks());
  for (std::size_t i = 0; i < observed.rows(); ++i) {
    const auto wi = factors.w.col(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < observed.cols(); ++j) {
      const double seen = observed.get(i, j);
      if (seen != 0.0) {
        out.set(i, j, seen);
      } else {
        out.set(i, j, std::max(0.0, wi.dot(factors.l.col(static_cast<Eigen::Index>(j)))));
      }
    }
  }
  return out;
}

AccumulatedMatrix accumulate(const ScoreMatrix& predicted, const LandmarkIndex& landmarks, double eta_dis_km) {
  if (!(eta_dis_km > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eta_dis must be positive");
  const double sigma = eta_dis_km / 3.0;
  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);

  // neighbour weights per column, in matrix column space
  std::vector<std::vector<std::pair<std::size_t, double>>> kernel(predicted.cols());
  for (std::size_t j = 0; j < predicted.cols(); ++j) {
    const Landmark& center = landmarks.at(predicted.landmarks()[j]);
    for (const Landmark* near : landmarks.within(center.location, eta_dis_km)) {
      if (!predicted.has_col(near->id)) continue;
      const double d = near->id == center.id ? 0.0 : distance_km(center.location, near->location);
      kernel[j].emplace_back(predicted.col_of(near->id), norm * std::exp(-0.5 * (d / sigma) * (d / sigma)));
    }
  }

  AccumulatedMatrix out(predicted.workers(), predicted.landmarks());
  for (std::size_t i = 0; i < predicted.rows(); ++i) {
    const auto& row = predicted.row(i);
    if (row.empty()) continue;
    for (std::size_t j = 0; j < predicted.cols(); ++j) {
      double total = 0.0;
      for (const auto& [col, weight] : kernel[j]) {
        auto it = row.find(col);
        if (it != row.end()) total += weight * it->second;
      }
      out.set(i, j, total);
    }
  }
  return out;
}

}  // namespace crowdroute

#include "crowdroute/config.hpp"

#include <fstream>
#include <sstream>

#include "crowdroute/error.hpp"
#include "json.hpp"

namespace crowdroute {

namespace {

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

std::string config_to_json(const EngineConfig& c) {
  nlohmann::json j = {
      {"alpha", c.familiarity.alpha},
      {"beta", c.familiarity.beta},
      {"eta_dis_km", c.familiarity.eta_dis_km},
      {"raw_distance", c.familiarity.raw_distance},
      {"d", c.pmf.latent_dim},
      {"lambda_w", c.pmf.lambda_w},
      {"lambda_l", c.pmf.lambda_l},
      {"lr", c.pmf.learning_rate},
      {"pmf_max_iters", c.pmf.max_iters},
      {"pmf_tol", c.pmf.tol},
      {"pmf_seed", c.pmf.seed},
      {"eta_time", c.eligibility.eta_time},
      {"eta_q", c.eligibility.max_outstanding},
      {"k", c.eligibility.k},
      {"default_lambda", c.eligibility.default_lambda},
      {"hits_max_iters", c.hits.max_iters},
      {"hits_tol", c.hits.tol},
      {"selection", std::string(to_string(c.selection))},
      {"relax_min_size", c.relax_min_size},
      {"snap_radius_km", c.snap_radius_km},
      {"eta", c.eta_confidence},
      {"tau_agree", c.tau_agree},
      {"eta_stop", c.eta_stop},
      {"min_votes", c.min_votes},
      {"cell_km", c.cell_km},
      {"truth_ttl_s", c.truth_ttl_s},
      {"retry_backoff_s", c.retry_backoff_s},
      {"seed", c.seed},
  };
  return j.dump(2);
}

EngineConfig config_from_json(const std::string& text) {
  EngineConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::kParse, "config must be a JSON object");
    read(j, "alpha", c.familiarity.alpha);
    read(j, "beta", c.familiarity.beta);
    read(j, "eta_dis_km", c.familiarity.eta_dis_km);
    read(j, "raw_distance", c.familiarity.raw_distance);
    read(j, "d", c.pmf.latent_dim);
    read(j, "lambda_w", c.pmf.lambda_w);
    read(j, "lambda_l", c.pmf.lambda_l);
    read(j, "lr", c.pmf.learning_rate);
    read(j, "pmf_max_iters", c.pmf.max_iters);
    read(j, "pmf_tol", c.pmf.tol);
    read(j, "pmf_seed", c.pmf.seed);
    read(j, "eta_time", c.eligibility.eta_time);
    read(j, "eta_q", c.eligibility.max_outstanding);
    read(j, "k", c.eligibility.k);
    read(j, "default_lambda", c.eligibility.default_lambda);
    read(j, "hits_max_iters", c.hits.max_iters);
    read(j, "hits_tol", c.hits.tol);
    if (auto it = j.find("selection"); it != j.end()) c.selection = parse_selection_algorithm(it->get<std::string>());
    read(j, "relax_min_size", c.relax_min_size);
    read(j, "snap_radius_km", c.snap_radius_km);
    read(j, "eta", c.eta_confidence);
    read(j, "tau_agree", c.tau_agree);
    read(j, "eta_stop", c.eta_stop);
    read(j, "min_votes", c.min_votes);
    read(j, "cell_km", c.cell_km);
    read(j, "truth_ttl_s", c.truth_ttl_s);
    read(j, "retry_backoff_s", c.retry_backoff_s);
    read(j, "seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad config: ") + e.what());
  }
  validate(c);
  return c;
}

EngineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void validate(const EngineConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + what);
  };
  require(c.familiarity.alpha >= 0.0 && c.familiarity.alpha <= 1.0, "alpha must be in [0,1]");
  require(c.familiarity.beta >= 0.0 && c.familiarity.beta < 1.0, "beta must be in [0,1)");
  require(c.familiarity.eta_dis_km > 0.0, "eta_dis_km must be positive");
  require(c.pmf.latent_dim >= 1, "d must be >= 1");
  require(c.pmf.learning_rate > 0.0, "lr must be positive");
  require(c.eligibility.eta_time > 0.0 && c.eligibility.eta_time < 1.0, "eta_time must be in (0,1)");
  require(c.eligibility.max_outstanding >= 1, "eta_q must be >= 1");
  require(c.eligibility.k >= 1, "k must be >= 1");
  require(c.hits.max_iters >= 1 && c.hits.tol > 0.0, "hits parameters");
  require(c.snap_radius_km > 0.0, "snap_radius_km must be positive");
  require(c.eta_confidence >= 0.0 && c.eta_confidence <= 1.0, "eta must be in [0,1]");
  require(c.tau_agree >= 0.0 && c.tau_agree <= 1.0, "tau_agree must be in [0,1]");
  require(c.eta_stop > 0.0 && c.eta_stop <= 1.0, "eta_stop must be in (0,1]");
  require(c.cell_km > 0.0, "cell_km must be positive");
  require(c.truth_ttl_s > 0, "truth_ttl_s must be positive");
  require(c.retry_backoff_s > 0, "retry_backoff_s must be positive");
}

}  // namespace crowdroute

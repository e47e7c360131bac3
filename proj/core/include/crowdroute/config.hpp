#pragma once

#include <cstdint>
#include <string>

#include "crowdroute/landmark_select.hpp"
#include "crowdroute/significance.hpp"
#include "crowdroute/worker_model.hpp"
#include "crowdroute/worker_select.hpp"

namespace crowdroute {

// Every threshold and seed the engine uses. Serialized as a flat JSON object;
// missing keys keep their defaults.
struct EngineConfig {
  FamiliarityConfig familiarity;
  PmfConfig pmf;
  EligibilityConfig eligibility;
  HitsOptions hits;

  SelectionAlgorithm selection = SelectionAlgorithm::kGreedy;
  bool relax_min_size = false;
  double snap_radius_km = 0.3;

  double eta_confidence = 0.8;  // auto-evaluation confidence threshold
  double tau_agree = 0.8;       // pairwise Jaccard for candidate agreement
  double eta_stop = 0.6;        // early-stop vote share
  std::uint32_t min_votes = 3;  // early-stop floor

  double cell_km = 0.5;  // truth matching grid
  std::int64_t truth_ttl_s = 30LL * 24 * 3600;
  std::int64_t retry_backoff_s = 600;
  std::uint64_t seed = 42;
};

std::string config_to_json(const EngineConfig& config);
EngineConfig config_from_json(const std::string& text);
EngineConfig load_config(const std::string& path);
void validate(const EngineConfig& config);

}  // namespace crowdroute

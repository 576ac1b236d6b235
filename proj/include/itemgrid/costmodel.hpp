#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "itemgrid/simnet.hpp"

namespace itemgrid::costmodel {

/// LogP network parameters: latency bound L, per-message overhead o, gap
/// per itemset unit g, and node count P.
struct LogPParams {
  double latency = 0;
  double overhead = 0;
  double gap = 1;
  std::uint32_t processors = 1;

  void validate() const;
};

/// Communication cost of the level-wise scheme:
///   sum over levels of 2P * sum_{i=1}^{P-1} (payload[l][i]*g + L^2 + o).
/// Evaluated exactly as written: the inner sum covers the first P-1 node
/// entries and the latency enters squared.
double c_fdm(const LogPParams &params,
             const std::vector<std::vector<double>> &payload_per_level, std::uint32_t k);

/// Communication cost of the two-phase scheme: one mandatory collection
/// pass over `first_payload`, plus one term per refinement pass covering
/// levels k-1 down to x (so `refinement_payloads` must have k - x rows;
/// x == k means no refinement passes).
double c_gfm(const LogPParams &params, const std::vector<double> &first_payload,
             const std::vector<std::vector<double>> &refinement_payloads, std::uint32_t k,
             std::uint32_t x);

/// Per-node work upper bound: sum_l (items[l] - l) / (l + 1) * successes[l],
/// evaluated over the supplied arrays starting at index l = 0. Index
/// semantics are the caller's: by convention entry 0 carries
/// successes[0] = items[0] = the number of frequent 1-itemsets.
double work_bound(std::span<const double> items_involved, std::span<const double> successes);

/// Same sum with per-level shrink factors applied:
///   sum_l (p_items[l]*items[l] - l) / (l + 1) * p_success[l] * successes[l].
double work_bound_factored(std::span<const double> items_involved,
                           std::span<const double> successes,
                           std::span<const double> p_success,
                           std::span<const double> p_items);

/// Per-level factors comparing the two schemes, estimated from traces.
struct FactorReport {
  std::vector<double> p_success;     // clamped successes ratio, 1 when undefined
  std::vector<double> p_items;       // clamped items-involved ratio
  std::vector<double> success_rate;  // level-wise scheme's per-level success rate
  std::uint32_t critical_level = 0;  // first level where the rate halves or worse
  std::uint32_t lowest_pass_level = 0;  // x: k minus the refinement pass count
  double gain_factor = 0;               // 1 - C_gfm / C_fdm (0 when both are 0)
};

/// Estimates factors from one run of each scheme over the same inputs.
/// `params` feeds only the gain factor; defaults to unit gap, zero latency
/// and overhead (pure payload-volume comparison).
FactorReport estimate_factors(const simnet::RunTrace &fdm_trace,
                              const simnet::RunTrace &gfm_trace,
                              const LogPParams *params = nullptr);

struct OverallCost {
  double fdm_total = 0;  // factored work bound + measured remote ops + comm cost
  double gfm_total = 0;  // plain work bound + measured remote ops + comm cost
  double comm_fdm = 0;
  double comm_gfm = 0;
};

/// Overall cost of both schemes from their traces: per-node work bounds over
/// the local-generation arrays (factored for the level-wise scheme), plus
/// measured remote counting work, plus the communication cost.
OverallCost overall_cost(const simnet::RunTrace &fdm_trace, const simnet::RunTrace &gfm_trace,
                         const LogPParams &params);

/// Communication cost of a single trace under `params` (payload arrays are
/// taken from the trace).
double comm_cost_of(const simnet::RunTrace &trace, const LogPParams &params);

nlohmann::json to_json(const FactorReport &report);
nlohmann::json to_json(const LogPParams &params);

}  // namespace itemgrid::costmodel

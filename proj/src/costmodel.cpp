#include "itemgrid/costmodel.hpp"

#include <algorithm>
#include <cmath>

namespace itemgrid::costmodel {

using simnet::Protocol;
using simnet::RunTrace;

void LogPParams::validate() const {
  if (latency < 0 || overhead < 0 || gap < 0)
    throw InvalidInput("LogP parameters must be non-negative");
  if (processors < 1) throw InvalidInput("LogP processor count must be >= 1");
}

namespace {

double exchange_term(const LogPParams &p, std::span<const double> payload) {
  if (payload.size() + 1 < p.processors)
    throw InvalidInput("payload array needs at least P-1 node entries");
  double inner = 0;
  for (std::uint32_t i = 0; i + 1 < p.processors; ++i)
    inner += payload[i] * p.gap + p.latency * p.latency + p.overhead;
  return 2.0 * p.processors * inner;
}

}  // namespace

double c_fdm(const LogPParams &params,
             const std::vector<std::vector<double>> &payload_per_level, std::uint32_t k) {
  params.validate();
  if (payload_per_level.size() != k)
    throw InvalidInput("c_fdm needs exactly one payload row per level");
  double total = 0;
  for (const auto &row : payload_per_level) total += exchange_term(params, row);
  return total;
}

double c_gfm(const LogPParams &params, const std::vector<double> &first_payload,
             const std::vector<std::vector<double>> &refinement_payloads, std::uint32_t k,
             std::uint32_t x) {
  params.validate();
  if (x > k) throw InvalidInput("c_gfm needs x <= k");
  if (refinement_payloads.size() != k - x)
    throw InvalidInput("c_gfm needs k - x refinement payload rows");
  double total = exchange_term(params, first_payload);
  for (const auto &row : refinement_payloads) total += exchange_term(params, row);
  return total;
}

double work_bound(std::span<const double> items_involved, std::span<const double> successes) {
  if (items_involved.size() != successes.size())
    throw InvalidInput("work_bound arrays must be aligned");
  double total = 0;
  for (std::size_t l = 0; l < successes.size(); ++l)
    total += (items_involved[l] - static_cast<double>(l)) / (static_cast<double>(l) + 1.0) *
             successes[l];
  return total;
}

double work_bound_factored(std::span<const double> items_involved,
                           std::span<const double> successes,
                           std::span<const double> p_success,
                           std::span<const double> p_items) {
  if (items_involved.size() != successes.size() || p_success.size() != successes.size() ||
      p_items.size() != successes.size())
    throw InvalidInput("work_bound_factored arrays must be aligned");
  double total = 0;
  for (std::size_t l = 0; l < successes.size(); ++l) {
    total += (p_items[l] * items_involved[l] - static_cast<double>(l)) /
             (static_cast<double>(l) + 1.0) * p_success[l] * successes[l];
  }
  return total;
}

namespace {

std::size_t max_levels(const RunTrace &trace) {
  std::size_t levels = 0;
  for (const auto &node : trace.node_levels) levels = std::max(levels, node.size());
  return levels;
}

std::uint64_t sum_at_level(const RunTrace &trace, std::size_t level_idx,
                           std::uint64_t simnet::NodeLevelStats::*field) {
  std::uint64_t total = 0;
  for (const auto &node : trace.node_levels)
    if (level_idx < node.size()) total += node[level_idx].*field;
  return total;
}

std::uint64_t sum_items_at_level(const RunTrace &trace, std::size_t level_idx,
                                 std::uint32_t simnet::NodeLevelStats::*field) {
  std::uint64_t total = 0;
  for (const auto &node : trace.node_levels)
    if (level_idx < node.size()) total += node[level_idx].*field;
  return total;
}

double clamped_ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return 1.0;
  return std::min(1.0, static_cast<double>(num) / static_cast<double>(den));
}

void require_comparable(const RunTrace &fdm_trace, const RunTrace &gfm_trace) {
  if (fdm_trace.config.protocol != Protocol::fdm || gfm_trace.config.protocol != Protocol::gfm)
    throw InvalidInput("expected one fdm trace and one gfm trace");
  const auto &a = fdm_trace.config;
  const auto &b = gfm_trace.config;
  if (a.support != b.support || a.max_level != b.max_level || a.nodes != b.nodes ||
      a.universe != b.universe || a.partition_counts != b.partition_counts ||
      a.partitions_digest != b.partitions_digest)
    throw InvalidInput("traces come from different configurations");
}

std::uint32_t gfm_lowest_pass_level(const RunTrace &gfm_trace) {
  const std::uint32_t k = gfm_trace.config.max_level;
  if (gfm_trace.passes <= 1) return k;
  const std::uint32_t refinements = static_cast<std::uint32_t>(gfm_trace.passes - 1);
  return refinements >= k ? 0 : k - refinements;
}

std::vector<std::vector<double>> fdm_payloads(const RunTrace &trace) {
  std::vector<std::vector<double>> rows(max_levels(trace));
  for (std::size_t l = 0; l < rows.size(); ++l) {
    rows[l].resize(trace.config.nodes, 0.0);
    for (std::size_t i = 0; i < trace.node_levels.size(); ++i)
      if (l < trace.node_levels[i].size())
        rows[l][i] = static_cast<double>(trace.node_levels[i][l].candidates);
  }
  return rows;
}

std::vector<double> pass_row(const RunTrace &trace, std::size_t pass_idx) {
  std::vector<double> row(trace.config.nodes, 0.0);
  if (pass_idx < trace.pass_sent_units.size()) {
    // Units were sent to each of the M-1 peers; the formula's payload is the
    // per-peer itemset count.
    const double peers = trace.config.nodes > 1 ? trace.config.nodes - 1 : 1;
    for (std::size_t i = 0; i < row.size(); ++i)
      row[i] = static_cast<double>(trace.pass_sent_units[pass_idx][i]) / peers;
  }
  return row;
}

}  // namespace

double comm_cost_of(const RunTrace &trace, const LogPParams &params) {
  if (trace.config.protocol == Protocol::fdm) {
    const auto rows = fdm_payloads(trace);
    return c_fdm(params, rows, static_cast<std::uint32_t>(rows.size()));
  }
  if (trace.config.protocol == Protocol::gfm) {
    const std::uint32_t k = trace.config.max_level;
    const std::uint32_t x = gfm_lowest_pass_level(trace);
    std::vector<std::vector<double>> refinements;
    for (int p = 1; p < trace.passes; ++p) refinements.push_back(pass_row(trace, p));
    return c_gfm(params, pass_row(trace, 0), refinements, k, x);
  }
  return 0;
}

FactorReport estimate_factors(const RunTrace &fdm_trace, const RunTrace &gfm_trace,
                              const LogPParams *params) {
  require_comparable(fdm_trace, gfm_trace);
  FactorReport report;
  const std::size_t levels = std::max(max_levels(fdm_trace), max_levels(gfm_trace));
  for (std::size_t l = 0; l < levels; ++l) {
    const std::uint64_t fdm_successes =
        sum_at_level(fdm_trace, l, &simnet::NodeLevelStats::successes);
    const std::uint64_t gfm_successes =
        sum_at_level(gfm_trace, l, &simnet::NodeLevelStats::successes);
    report.p_success.push_back(clamped_ratio(fdm_successes, gfm_successes));

    const std::uint64_t fdm_items =
        sum_items_at_level(fdm_trace, l, &simnet::NodeLevelStats::items_in_frequent);
    const std::uint64_t gfm_items =
        sum_items_at_level(gfm_trace, l, &simnet::NodeLevelStats::items_in_frequent);
    report.p_items.push_back(clamped_ratio(fdm_items, gfm_items));

    const std::uint64_t candidates =
        sum_at_level(fdm_trace, l, &simnet::NodeLevelStats::candidates);
    report.success_rate.push_back(
        candidates == 0 ? 0.0
                        : static_cast<double>(fdm_successes) / static_cast<double>(candidates));
  }

  report.critical_level = static_cast<std::uint32_t>(levels);
  for (std::size_t l = 1; l < report.success_rate.size(); ++l) {
    if (report.success_rate[l] < 0.5 * report.success_rate[l - 1]) {
      report.critical_level = static_cast<std::uint32_t>(l + 1);
      break;
    }
  }

  report.lowest_pass_level = gfm_lowest_pass_level(gfm_trace);

  LogPParams gain_params{0, 0, 1, fdm_trace.config.nodes};
  if (params != nullptr) gain_params = *params;
  const double fdm_comm = comm_cost_of(fdm_trace, gain_params);
  const double gfm_comm = comm_cost_of(gfm_trace, gain_params);
  report.gain_factor = fdm_comm > 0 ? 1.0 - gfm_comm / fdm_comm : 0.0;
  return report;
}

OverallCost overall_cost(const RunTrace &fdm_trace, const RunTrace &gfm_trace,
                         const LogPParams &params) {
  require_comparable(fdm_trace, gfm_trace);
  params.validate();
  const FactorReport factors = estimate_factors(fdm_trace, gfm_trace, &params);

  OverallCost cost;
  for (std::size_t i = 0; i < gfm_trace.node_levels.size(); ++i) {
    const auto &levels = gfm_trace.node_levels[i];
    // Arrays indexed from "level 0" by convention: entry 0 carries the count
    // of frequent 1-itemsets; entry l >= 1 the level-l successes and items.
    std::vector<double> items{0.0}, successes{0.0}, p_success{1.0}, p_items{1.0};
    if (!levels.empty()) {
      items[0] = static_cast<double>(levels[0].successes);
      successes[0] = static_cast<double>(levels[0].successes);
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
      items.push_back(static_cast<double>(levels[l].items_in_frequent));
      successes.push_back(static_cast<double>(levels[l].successes));
      p_success.push_back(l < factors.p_success.size() ? factors.p_success[l] : 1.0);
      p_items.push_back(l < factors.p_items.size() ? factors.p_items[l] : 1.0);
    }
    cost.gfm_total += work_bound(items, successes);
    cost.fdm_total += work_bound_factored(items, successes, p_success, p_items);
  }

  for (const auto &node : fdm_trace.node_levels)
    for (const auto &level : node)
      cost.fdm_total += static_cast<double>(level.remote_count_ops);
  for (const auto &node : gfm_trace.node_levels)
    for (const auto &level : node)
      cost.gfm_total += static_cast<double>(level.remote_count_ops);

  cost.comm_fdm = comm_cost_of(fdm_trace, params);
  cost.comm_gfm = comm_cost_of(gfm_trace, params);
  cost.fdm_total += cost.comm_fdm;
  cost.gfm_total += cost.comm_gfm;
  return cost;
}

nlohmann::json to_json(const FactorReport &report) {
  return {{"p_success", report.p_success},
          {"p_items", report.p_items},
          {"success_rate", report.success_rate},
          {"critical_level", report.critical_level},
          {"lowest_pass_level", report.lowest_pass_level},
          {"gain_factor", report.gain_factor}};
}

nlohmann::json to_json(const LogPParams &params) {
  return {{"latency", params.latency},
          {"overhead", params.overhead},
          {"gap", params.gap},
          {"processors", params.processors}};
}

}  // namespace itemgrid::costmodel

#include "itemgrid/report.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace itemgrid::report {

using simnet::Protocol;
using simnet::RunTrace;

unsigned thread_cap() {
  const char *env = std::getenv("ITEMSET_GRID_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  char *end = nullptr;
  const long value = std::strtol(env, &end, 10);
  if (end == nullptr || *end != '\0' || value < 0) return 0;
  return static_cast<unsigned>(value);
}

namespace {

std::string verify_equal(const RunTrace &fdm_trace, const RunTrace &gfm_trace) {
  std::vector<Itemset> fdm_sets, gfm_sets;
  for (const auto &e : fdm_trace.frequent) fdm_sets.push_back(e.itemset);
  for (const auto &e : gfm_trace.frequent) gfm_sets.push_back(e.itemset);
  if (fdm_sets != gfm_sets) return "protocols produced different frequent itemset collections";

  for (std::size_t i = 0; i < fdm_trace.frequent.size(); ++i) {
    const auto &exact = fdm_trace.frequent[i];
    const auto &other = gfm_trace.frequent[i];
    if (other.exact && other.count != exact.count)
      return "protocols disagree on an exact support count";
    if (!other.exact && other.count > exact.count)
      return "a support lower bound exceeds the exact count";
  }
  return "";
}

std::string format_units(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

ComparisonReport compare_protocols(const CompareRequest &request) {
  if (!request.partitions || request.partitions->empty())
    throw InvalidInput("comparison needs partitions");
  const SupportThreshold threshold(request.support);

  ComparisonReport report;
  report.request = request;

  const unsigned cap = thread_cap();
  if (cap == 1) {
    report.fdm_trace = simnet::run(Protocol::fdm, request.partitions, threshold,
                                   request.max_level);
    report.gfm_trace = simnet::run(Protocol::gfm, request.partitions, threshold,
                                   request.max_level);
  } else {
    // The two simulations are independent; run them side by side.
    std::thread fdm_worker([&] {
      report.fdm_trace =
          simnet::run(Protocol::fdm, request.partitions, threshold, request.max_level);
    });
    report.gfm_trace =
        simnet::run(Protocol::gfm, request.partitions, threshold, request.max_level);
    fdm_worker.join();
  }

  report.verify_error = verify_equal(report.fdm_trace, report.gfm_trace);
  report.verified = report.verify_error.empty();

  costmodel::LogPParams params = request.logp;
  params.processors = report.fdm_trace.config.nodes;
  report.costs = costmodel::overall_cost(report.fdm_trace, report.gfm_trace, params);
  report.factors = costmodel::estimate_factors(report.fdm_trace, report.gfm_trace, &params);
  report.factor =
      report.costs.fdm_total > 0 ? 1.0 - report.costs.gfm_total / report.costs.fdm_total : 0.0;
  return report;
}

nlohmann::json ComparisonReport::to_json() const {
  nlohmann::json j;
  j["dataset"] = request.dataset_label;
  j["partition"] = {{"nodes", fdm_trace.config.nodes},
                    {"ratio", request.ratio_label},
                    {"seed", request.partition_seed},
                    {"counts", fdm_trace.config.partition_counts}};
  j["support"] = request.support;
  j["max_level"] = request.max_level;
  j["logp"] = costmodel::to_json(costmodel::LogPParams{
      request.logp.latency, request.logp.overhead, request.logp.gap, fdm_trace.config.nodes});
  j["verified"] = verified;
  if (!verified) j["status"] = "FAILED: " + verify_error;

  const auto protocol_block = [](const RunTrace &trace) {
    return nlohmann::json{{"passes", trace.passes},
                          {"rounds", trace.rounds},
                          {"messages", trace.total_messages()},
                          {"itemset_units", trace.total_units()},
                          {"level_sizes", trace.level_sizes}};
  };
  j["fdm"] = protocol_block(fdm_trace);
  j["fdm"]["comm_cost_model_units"] = costs.comm_fdm;
  j["fdm"]["total_cost_model_units"] = costs.fdm_total;
  j["gfm"] = protocol_block(gfm_trace);
  j["gfm"]["comm_cost_model_units"] = costs.comm_gfm;
  j["gfm"]["total_cost_model_units"] = costs.gfm_total;

  j["factors"] = costmodel::to_json(factors);
  j["factor_pct"] = factor * 100.0;
  return j;
}

std::string ComparisonReport::csv_header() {
  return "support_pct,ratio,size_transactions,fdm_model_units,gfm_model_units,factor_pct";
}

std::string ComparisonReport::csv_row() const {
  std::uint64_t total = 0;
  for (std::uint64_t c : fdm_trace.config.partition_counts) total += c;
  std::ostringstream out;
  out << format_units(request.support * 100.0) << ',' << request.ratio_label << ',' << total
      << ',' << format_units(costs.fdm_total) << ',' << format_units(costs.gfm_total) << ','
      << format_units(factor * 100.0);
  return out.str();
}

}  // namespace itemgrid::report

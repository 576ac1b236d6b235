#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "itemgrid/costmodel.hpp"
#include "itemgrid/simnet.hpp"

namespace itemgrid::report {

struct CompareRequest {
  std::shared_ptr<const std::vector<TransactionDB>> partitions;
  std::string dataset_label;  // path or generator descriptor
  std::string ratio_label;    // e.g. "1:5"
  std::uint64_t partition_seed = 0;
  double support = 0;
  std::uint32_t max_level = 0;
  costmodel::LogPParams logp;
};

/// One row of a protocol comparison: both schemes run on identical inputs,
/// results are checked for set equality, and the analytical costs are
/// evaluated from the traces. Cost columns are model units, never seconds.
struct ComparisonReport {
  CompareRequest request;
  bool verified = false;
  std::string verify_error;

  simnet::RunTrace fdm_trace;
  simnet::RunTrace gfm_trace;
  costmodel::OverallCost costs;
  costmodel::FactorReport factors;
  double factor = 0;  // 1 - gfm_total / fdm_total

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Effective worker cap from ITEMSET_GRID_THREADS (0 or unset = auto).
unsigned thread_cap();

/// Runs both protocols (concurrently when the thread cap allows), verifies
/// result equality and assembles the report.
ComparisonReport compare_protocols(const CompareRequest &request);

}  // namespace itemgrid::report

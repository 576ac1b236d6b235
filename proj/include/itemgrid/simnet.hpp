#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "itemgrid/itemsets.hpp"

namespace itemgrid::simnet {

using NodeId = std::uint32_t;

enum class Protocol { centralized, fdm, gfm };
std::string_view name(Protocol p);
Protocol protocol_from(std::string_view s);

enum class MsgKind { candidate_set, count_request, count_response, frequent_broadcast };
std::string_view name(MsgKind k);

struct Message {
  NodeId from = 0;
  NodeId to = 0;
  int round = 0;  // emission round; delivered the round after
  MsgKind kind = MsgKind::candidate_set;
  std::vector<SupportCount> payload;  // count is 0 and unused on request kinds

  std::uint64_t payload_units() const { return payload.size(); }
  std::uint64_t payload_bytes_estimate() const;
};

struct RunConfig {
  Protocol protocol = Protocol::centralized;
  double support = 0;
  std::uint32_t max_level = 0;
  std::uint32_t nodes = 0;
  std::uint32_t universe = 0;
  std::vector<std::uint64_t> partition_counts;
  std::uint64_t partitions_digest = 0;  // content hash of the input partitions

  bool operator==(const RunConfig &) const = default;
};

/// FNV-1a content hash over the partition contents.
std::uint64_t digest_partitions(const std::vector<TransactionDB> &partitions);

/// Per-node, per-level tallies recorded during a run. For the level-wise
/// protocol `candidates` counts the broadcast candidate sets; for the
/// two-phase protocol it counts the local generation candidates.
struct NodeLevelStats {
  std::uint64_t candidates = 0;
  std::uint64_t successes = 0;
  std::uint64_t failures = 0;
  std::uint64_t locally_frequent = 0;
  std::uint64_t resent = 0;            // itemsets re-sent in refinement passes
  std::uint64_t remote_count_ops = 0;  // remote-originated itemsets counted here
  std::uint32_t items_in_candidates = 0;
  std::uint32_t items_in_frequent = 0;
};

struct TrafficRow {
  NodeId node = 0;
  int round = 0;
  int pass = 0;
  MsgKind kind = MsgKind::candidate_set;
  std::uint64_t messages = 0;
  std::uint64_t itemset_units = 0;
  std::uint64_t bytes_estimate = 0;
};

struct FrequentEntry {
  Itemset itemset;
  std::uint64_t count = 0;  // exact support, or a proven lower bound
  bool exact = true;

  auto operator<=>(const FrequentEntry &) const = default;
};

/// Complete record of one protocol execution.
struct RunTrace {
  RunConfig config;
  int rounds = 0;
  int passes = 0;
  std::vector<int> pass_start_rounds;
  std::vector<std::vector<NodeLevelStats>> node_levels;  // [node][level-1]
  std::vector<TrafficRow> traffic;                       // sorted (round, node, kind)
  std::vector<std::vector<std::uint64_t>> pass_sent_units;  // [pass][node], request payloads
  std::vector<FrequentEntry> frequent;                   // sorted lexicographically
  std::vector<std::uint64_t> level_sizes;                // frequent itemsets per level

  // Retained inputs for replay; not serialized.
  std::shared_ptr<const std::vector<TransactionDB>> inputs;

  nlohmann::json to_json() const;
  std::string traffic_csv() const;

  std::uint64_t total_messages() const;
  std::uint64_t total_units() const;
};

/// Executes the protocol over the partitions in deterministic lockstep
/// rounds: each round every node consumes the messages addressed to it from
/// the previous round and emits new ones. Node order is ascending id;
/// delivery order is (sender, kind, payload).
RunTrace run(Protocol protocol, std::shared_ptr<const std::vector<TransactionDB>> partitions,
             SupportThreshold threshold, std::uint32_t max_level);
RunTrace run(Protocol protocol, std::vector<TransactionDB> partitions,
             SupportThreshold threshold, std::uint32_t max_level);

struct ReplayResult {
  bool ok = false;
  std::string divergence;  // empty when ok
};

/// Structural comparison of two traces. Throws InvalidInput if the traces
/// were produced from different configurations.
ReplayResult diff_traces(const RunTrace &a, const RunTrace &b);

/// Re-executes the trace's configuration on its retained inputs and checks
/// for a bit-identical trace.
ReplayResult replay_check(const RunTrace &trace);

}  // namespace itemgrid::simnet

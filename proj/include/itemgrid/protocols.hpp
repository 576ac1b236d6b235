#pragma once

#include <memory>
#include <span>
#include <vector>

#include "itemgrid/simnet.hpp"

namespace itemgrid::protocols {

struct StepResult {
  std::vector<simnet::Message> messages;
  bool began_pass = false;  // this step opened a new communication pass
};

/// One node's state machine, stepped once per simulator round.
class NodeProgram {
 public:
  virtual ~NodeProgram() = default;

  virtual StepResult step(int round, std::span<const simnet::Message> inbox) = 0;

  /// True once the node has no pending work of its own. A finished node
  /// still answers incoming count requests.
  virtual bool finished() const = 0;

  virtual const std::vector<simnet::NodeLevelStats> &level_stats() const = 0;

  /// The node's view of the globally frequent itemsets it resolved.
  virtual std::vector<simnet::FrequentEntry> resolved() const = 0;
};

std::unique_ptr<NodeProgram> make_program(simnet::Protocol protocol, simnet::NodeId id,
                                          const std::vector<TransactionDB> &partitions,
                                          SupportThreshold threshold,
                                          std::uint32_t max_level);

/// Number of node programs a protocol runs over M partitions.
std::uint32_t program_count(simnet::Protocol protocol, std::uint32_t partitions);

/// Combines per-node results into the final globally frequent collection:
/// identical per-node views for the level-wise protocol (verified), the
/// subset-closed union of per-node resolutions for the two-phase protocol.
std::vector<simnet::FrequentEntry> finalize(
    simnet::Protocol protocol, std::span<const std::unique_ptr<NodeProgram>> nodes);

}  // namespace itemgrid::protocols

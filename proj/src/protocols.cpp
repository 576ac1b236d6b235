#include "itemgrid/protocols.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <stdexcept>

namespace itemgrid::protocols {

using simnet::FrequentEntry;
using simnet::Message;
using simnet::MsgKind;
using simnet::NodeId;
using simnet::NodeLevelStats;
using simnet::Protocol;

namespace {

void ensure_level(std::vector<NodeLevelStats> &stats, std::size_t level) {
  if (stats.size() < level) stats.resize(level);
}

std::vector<NodeLevelStats> stats_from_mining(const MiningResult &result) {
  std::vector<NodeLevelStats> out(result.stats.size());
  for (std::size_t i = 0; i < result.stats.size(); ++i) {
    const LevelCounters &c = result.stats[i];
    out[i].candidates = c.candidates;
    out[i].successes = c.successes;
    out[i].failures = c.failures;
    out[i].locally_frequent = c.successes;
    out[i].items_in_candidates = c.items_in_candidates;
    out[i].items_in_frequent = c.items_in_frequent;
  }
  return out;
}

std::vector<SupportCount> request_payload(const std::vector<Itemset> &sets) {
  std::vector<SupportCount> payload;
  payload.reserve(sets.size());
  for (const auto &x : sets) payload.push_back({x, 0});
  return payload;
}

class CentralizedProgram final : public NodeProgram {
 public:
  CentralizedProgram(const std::vector<TransactionDB> &partitions,
                     SupportThreshold threshold, std::uint32_t max_level) {
    std::vector<Transaction> all;
    for (const auto &part : partitions)
      all.insert(all.end(), part.transactions().begin(), part.transactions().end());
    TransactionDB whole(std::move(all), partitions.front().universe_size());
    MiningResult result = mine_apriori(whole, threshold, max_level);
    stats_ = stats_from_mining(result);
    for (const auto &sc : result.flatten())
      resolved_.push_back({sc.itemset, sc.count, true});
  }

  StepResult step(int, std::span<const Message>) override {
    done_ = true;
    return {};
  }
  bool finished() const override { return done_; }
  const std::vector<NodeLevelStats> &level_stats() const override { return stats_; }
  std::vector<FrequentEntry> resolved() const override { return resolved_; }

 private:
  bool done_ = false;
  std::vector<NodeLevelStats> stats_;
  std::vector<FrequentEntry> resolved_;
};

// Level-wise scheme: per level, every node keeps the locally frequent part
// of the candidates generated from the globally frequent previous level,
// broadcasts it, collects remote counts, and all nodes converge on the
// level's globally frequent itemsets before moving on.
class FdmProgram final : public NodeProgram {
 public:
  FdmProgram(NodeId id, const std::vector<TransactionDB> &partitions,
             SupportThreshold threshold, std::uint32_t max_level)
      : id_(id),
        nodes_(static_cast<std::uint32_t>(partitions.size())),
        part_(partitions[id]),
        engine_(part_),
        max_level_(max_level) {
    std::uint64_t total = 0;
    for (const auto &p : partitions) total += p.count();
    local_need_ = threshold.absolute(part_);
    global_need_ = threshold.absolute_count(total);
  }

  StepResult step(int, std::span<const Message> inbox) override {
    switch (phase_) {
      case Phase::generate:
        return generate(inbox);
      case Phase::count_remote:
        return count_remote(inbox);
      case Phase::resolve:
        return resolve(inbox);
      case Phase::halted:
        return {};
    }
    return {};
  }

  bool finished() const override { return phase_ == Phase::halted; }
  const std::vector<NodeLevelStats> &level_stats() const override { return stats_; }

  std::vector<FrequentEntry> resolved() const override {
    std::vector<FrequentEntry> out;
    for (const auto &level : global_levels_)
      for (const auto &sc : level) out.push_back({sc.itemset, sc.count, true});
    return out;
  }

 private:
  enum class Phase { generate, count_remote, resolve, halted };

  StepResult generate(std::span<const Message> inbox) {
    if (level_ > 1) {
      std::vector<SupportCount> merged = admitted_;
      for (const auto &msg : inbox) {
        if (msg.kind != MsgKind::frequent_broadcast) continue;
        merged.insert(merged.end(), msg.payload.begin(), msg.payload.end());
      }
      std::sort(merged.begin(), merged.end());
      merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
      for (std::size_t i = 1; i < merged.size(); ++i) {
        if (merged[i - 1].itemset == merged[i].itemset)
          throw std::logic_error("conflicting global counts for one itemset");
      }
      global_levels_.push_back(merged);
      if (merged.empty() || level_ - 1 == max_level_) {
        phase_ = Phase::halted;
        return {};
      }
    }

    std::vector<Itemset> pool;
    if (level_ == 1) {
      for (Item item = 0; item < part_.universe_size(); ++item)
        pool.push_back(Itemset({item}));
    } else {
      std::vector<Itemset> prev;
      prev.reserve(global_levels_.back().size());
      for (const auto &sc : global_levels_.back()) prev.push_back(sc.itemset);
      pool = apriori_gen(prev);
    }
    if (pool.empty()) {
      phase_ = Phase::halted;
      return {};
    }

    StepResult result;
    result.began_pass = true;  // a level with candidates is one exchange pass

    const std::vector<std::uint64_t> counts = engine_.count_batch(pool);
    candidates_.clear();
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (counts[i] >= local_need_) candidates_.push_back({pool[i], counts[i]});
    remote_sums_.assign(candidates_.size(), 0);

    ensure_level(stats_, level_);
    NodeLevelStats &s = stats_[level_ - 1];
    s.candidates = candidates_.size();
    s.locally_frequent = candidates_.size();
    s.items_in_candidates = distinct_item_count(candidates_, part_.universe_size());

    if (!candidates_.empty()) {
      for (NodeId j = 0; j < nodes_; ++j) {
        if (j == id_) continue;
        result.messages.push_back(
            {id_, j, 0, MsgKind::candidate_set, request_payload(itemsets(candidates_))});
      }
    }
    phase_ = Phase::count_remote;
    return result;
  }

  StepResult count_remote(std::span<const Message> inbox) {
    StepResult result;
    for (const auto &msg : inbox) {
      if (msg.kind != MsgKind::candidate_set) continue;
      std::vector<SupportCount> reply;
      reply.reserve(msg.payload.size());
      for (const auto &sc : msg.payload)
        reply.push_back({sc.itemset, engine_.count(sc.itemset)});
      stats_[level_ - 1].remote_count_ops += msg.payload.size();
      result.messages.push_back({id_, msg.from, 0, MsgKind::count_response, std::move(reply)});
    }
    phase_ = Phase::resolve;
    return result;
  }

  StepResult resolve(std::span<const Message> inbox) {
    for (const auto &msg : inbox) {
      if (msg.kind != MsgKind::count_response) continue;
      if (msg.payload.size() != candidates_.size())
        throw std::logic_error("count response does not match the candidate set");
      for (std::size_t i = 0; i < candidates_.size(); ++i) {
        if (msg.payload[i].itemset != candidates_[i].itemset)
          throw std::logic_error("count response out of order");
        remote_sums_[i] += msg.payload[i].count;
      }
    }
    admitted_.clear();
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
      const std::uint64_t total = candidates_[i].count + remote_sums_[i];
      if (total >= global_need_) admitted_.push_back({candidates_[i].itemset, total});
    }
    NodeLevelStats &s = stats_[level_ - 1];
    s.successes = admitted_.size();
    s.failures = candidates_.size() - admitted_.size();
    s.items_in_frequent = distinct_item_count(admitted_, part_.universe_size());

    StepResult result;
    if (!admitted_.empty()) {
      for (NodeId j = 0; j < nodes_; ++j) {
        if (j == id_) continue;
        result.messages.push_back({id_, j, 0, MsgKind::frequent_broadcast, admitted_});
      }
    }
    ++level_;
    phase_ = Phase::generate;
    return result;
  }

  static std::vector<Itemset> itemsets(const std::vector<SupportCount> &entries) {
    std::vector<Itemset> out;
    out.reserve(entries.size());
    for (const auto &e : entries) out.push_back(e.itemset);
    return out;
  }

  NodeId id_;
  std::uint32_t nodes_;
  const TransactionDB &part_;
  CountingEngine engine_;
  std::uint32_t max_level_;
  std::uint64_t local_need_ = 0, global_need_ = 0;

  Phase phase_ = Phase::generate;
  std::uint32_t level_ = 1;
  std::vector<SupportCount> candidates_;  // locally frequent, with local counts
  std::vector<std::uint64_t> remote_sums_;
  std::vector<SupportCount> admitted_;  // globally frequent, with global counts
  std::vector<std::vector<SupportCount>> global_levels_;
  std::vector<NodeLevelStats> stats_;
};

// Two-phase scheme: mine locally to depth k with purely local pruning, then
// resolve the locally maximal frequent itemsets top-down: exchange the
// pending itemsets, sum exact counts, and on a global failure push the
// immediate subsets into the next pass unless they are already decided or
// their summed per-node lower bounds prove them frequent.
class GfmProgram final : public NodeProgram {
 public:
  GfmProgram(NodeId id, const std::vector<TransactionDB> &partitions,
             SupportThreshold threshold, std::uint32_t max_level)
      : id_(id),
        nodes_(static_cast<std::uint32_t>(partitions.size())),
        part_(partitions[id]),
        engine_(part_),
        threshold_(threshold),
        max_level_(max_level) {
    std::uint64_t total = 0;
    for (const auto &p : partitions) total += p.count();
    global_need_ = threshold.absolute_count(total);
  }

  StepResult step(int round, std::span<const Message> inbox) override {
    if (round == 0) return local_phase();
    if (round % 2 == 1) return respond(inbox);
    return resolve_phase(inbox);
  }

  bool finished() const override { return finished_; }
  const std::vector<NodeLevelStats> &level_stats() const override { return stats_; }

  std::vector<FrequentEntry> resolved() const override {
    std::vector<FrequentEntry> out;
    for (const auto &[itemset, decision] : decided_) {
      if (decision.status == Status::failed) continue;
      out.push_back({itemset, decision.value, decision.status == Status::frequent_exact});
    }
    return out;
  }

 private:
  enum class Status { frequent_exact, frequent_bound, failed };
  struct Decision {
    Status status;
    std::uint64_t value;
  };

  StepResult local_phase() {
    MiningResult local = mine_apriori(part_, threshold_, max_level_, &engine_);
    stats_ = stats_from_mining(local);
    for (const auto &sc : maximal(local.levels)) pending_[sc.itemset] = sc.count;

    StepResult result;
    if (pending_.empty()) {
      finished_ = true;
      return result;
    }
    result.began_pass = true;
    if (nodes_ == 1) {
      // No remote counts to wait for; local thresholds equal global ones.
      while (!pending_.empty()) resolve({});
      finished_ = true;
      return result;
    }
    send_requests(result);
    return result;
  }

  StepResult respond(std::span<const Message> inbox) {
    StepResult result;
    for (const auto &msg : inbox) {
      if (msg.kind != MsgKind::count_request) continue;
      std::vector<SupportCount> reply;
      reply.reserve(msg.payload.size());
      for (const auto &sc : msg.payload) {
        reply.push_back({sc.itemset, engine_.count(sc.itemset)});
        ensure_level(stats_, sc.itemset.size());
        stats_[sc.itemset.size() - 1].remote_count_ops += 1;
      }
      result.messages.push_back({id_, msg.from, 0, MsgKind::count_response, std::move(reply)});
    }
    return result;
  }

  StepResult resolve_phase(std::span<const Message> inbox) {
    StepResult result;
    if (!awaiting_) return result;
    awaiting_ = false;
    resolve(inbox);
    if (pending_.empty()) {
      finished_ = true;
      return result;
    }
    result.began_pass = true;
    for (const auto &[itemset, count] : pending_) {
      ensure_level(stats_, itemset.size());
      stats_[itemset.size() - 1].resent += 1;
    }
    send_requests(result);
    return result;
  }

  void send_requests(StepResult &result) {
    std::vector<Itemset> sets;
    sets.reserve(pending_.size());
    for (const auto &[itemset, count] : pending_) sets.push_back(itemset);
    for (NodeId j = 0; j < nodes_; ++j) {
      if (j == id_) continue;
      result.messages.push_back({id_, j, 0, MsgKind::count_request, request_payload(sets)});
    }
    awaiting_ = true;
  }

  void resolve(std::span<const Message> inbox) {
    std::map<NodeId, const Message *> responses;
    for (const auto &msg : inbox)
      if (msg.kind == MsgKind::count_response) responses[msg.from] = &msg;

    std::map<Itemset, std::uint64_t> next_pending;
    std::size_t idx = 0;
    for (const auto &[itemset, local_count] : pending_) {
      std::vector<std::uint64_t> per_node(nodes_, 0);
      per_node[id_] = local_count;
      std::uint64_t total = local_count;
      for (const auto &[from, msg] : responses) {
        if (idx >= msg->payload.size() || msg->payload[idx].itemset != itemset)
          throw std::logic_error("count response does not match the request");
        per_node[from] = msg->payload[idx].count;
        total += msg->payload[idx].count;
      }
      counted_[itemset] = per_node;

      if (total >= global_need_) {
        decided_[itemset] = {Status::frequent_exact, total};
        mark_subsets_frequent(itemset, total);
      } else {
        decided_[itemset] = {Status::failed, total};
        expand_failed(itemset, next_pending);
      }
      ++idx;
    }
    pending_ = std::move(next_pending);
  }

  void expand_failed(const Itemset &failed, std::map<Itemset, std::uint64_t> &next_pending) {
    for (const Itemset &sub : immediate_subsets(failed)) {
      if (decided_.contains(sub) || next_pending.contains(sub)) continue;
      const std::uint64_t local = engine_.count(sub);
      // Per-node lower bounds: the best already-counted superset at each
      // remote node; summing several supersets at one node would overcount.
      std::vector<std::uint64_t> best(nodes_, 0);
      for (const auto &[superset, per_node] : counted_) {
        if (superset.size() <= sub.size() || !is_subset(sub, superset)) continue;
        for (NodeId j = 0; j < nodes_; ++j) best[j] = std::max(best[j], per_node[j]);
      }
      std::uint64_t bound = local;
      for (NodeId j = 0; j < nodes_; ++j)
        if (j != id_) bound += best[j];
      if (bound >= global_need_) {
        decided_[sub] = {Status::frequent_bound, bound};
        mark_subsets_frequent(sub, bound);
      } else {
        next_pending[sub] = local;
      }
    }
  }

  void mark_subsets_frequent(const Itemset &x, std::uint64_t value) {
    const auto &ids = x.items();
    const std::size_t m = ids.size();
    if (m < 2) return;
    if (m > 20) throw std::logic_error("itemset too large for subset closure");
    for (std::uint32_t mask = 1; mask + 1 < (std::uint32_t{1} << m); ++mask) {
      std::vector<Item> sub;
      for (std::size_t i = 0; i < m; ++i)
        if (mask & (std::uint32_t{1} << i)) sub.push_back(ids[i]);
      Itemset subset(std::move(sub));
      auto it = decided_.find(subset);
      if (it == decided_.end()) {
        decided_[std::move(subset)] = {Status::frequent_bound, value};
      } else if (it->second.status == Status::failed) {
        throw std::logic_error("subset of a frequent itemset was counted infrequent");
      } else if (it->second.status == Status::frequent_bound) {
        it->second.value = std::max(it->second.value, value);
      }
    }
  }

  NodeId id_;
  std::uint32_t nodes_;
  const TransactionDB &part_;
  CountingEngine engine_;
  SupportThreshold threshold_;
  std::uint32_t max_level_;
  std::uint64_t global_need_ = 0;

  bool finished_ = false;
  bool awaiting_ = false;
  std::map<Itemset, std::uint64_t> pending_;                   // awaiting global resolution
  std::map<Itemset, std::vector<std::uint64_t>> counted_;      // exact per-node counts
  std::map<Itemset, Decision> decided_;
  std::vector<NodeLevelStats> stats_;
};

}  // namespace

std::uint32_t program_count(Protocol protocol, std::uint32_t partitions) {
  return protocol == Protocol::centralized ? 1 : partitions;
}

std::unique_ptr<NodeProgram> make_program(Protocol protocol, NodeId id,
                                          const std::vector<TransactionDB> &partitions,
                                          SupportThreshold threshold,
                                          std::uint32_t max_level) {
  switch (protocol) {
    case Protocol::centralized:
      return std::make_unique<CentralizedProgram>(partitions, threshold, max_level);
    case Protocol::fdm:
      return std::make_unique<FdmProgram>(id, partitions, threshold, max_level);
    case Protocol::gfm:
      return std::make_unique<GfmProgram>(id, partitions, threshold, max_level);
  }
  throw InvalidInput("unknown protocol");
}

namespace {

std::vector<FrequentEntry> sorted_entries(std::vector<FrequentEntry> entries) {
  std::sort(entries.begin(), entries.end());
  return entries;
}

std::vector<FrequentEntry> gfm_union_closure(
    std::span<const std::unique_ptr<NodeProgram>> nodes) {
  std::map<Itemset, FrequentEntry> best;
  std::size_t max_size = 0;
  for (const auto &node : nodes) {
    for (auto &entry : node->resolved()) {
      max_size = std::max(max_size, entry.itemset.size());
      auto it = best.find(entry.itemset);
      if (it == best.end()) {
        best.emplace(entry.itemset, entry);
      } else if (entry.exact && !it->second.exact) {
        it->second = entry;
      } else if (entry.exact && it->second.exact) {
        if (entry.count != it->second.count)
          throw std::logic_error("nodes disagree on an exact global count");
      } else if (!entry.exact && !it->second.exact) {
        it->second.count = std::max(it->second.count, entry.count);
      }
    }
  }

  // Subset closure: every subset of a frequent itemset is frequent, with the
  // superset's value as a lower bound. One size step per sweep cascades.
  for (std::size_t size = max_size; size >= 2; --size) {
    std::vector<std::pair<Itemset, std::uint64_t>> snapshot;
    for (const auto &[itemset, entry] : best)
      if (itemset.size() == size) snapshot.emplace_back(itemset, entry.count);
    for (const auto &[itemset, value] : snapshot) {
      for (const Itemset &sub : immediate_subsets(itemset)) {
        auto it = best.find(sub);
        if (it == best.end())
          best.emplace(sub, FrequentEntry{sub, value, false});
        else if (!it->second.exact)
          it->second.count = std::max(it->second.count, value);
      }
    }
  }

  std::vector<FrequentEntry> out;
  out.reserve(best.size());
  for (const auto &[itemset, entry] : best) out.push_back(entry);
  return out;
}

}  // namespace

std::vector<FrequentEntry> finalize(Protocol protocol,
                                    std::span<const std::unique_ptr<NodeProgram>> nodes) {
  switch (protocol) {
    case Protocol::centralized:
      return sorted_entries(nodes.front()->resolved());
    case Protocol::fdm: {
      const std::vector<FrequentEntry> first = sorted_entries(nodes.front()->resolved());
      for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (sorted_entries(nodes[i]->resolved()) != first)
          throw std::logic_error("nodes ended the run with different frequent sets");
      }
      return first;
    }
    case Protocol::gfm:
      return gfm_union_closure(nodes);
  }
  throw InvalidInput("unknown protocol");
}

}  // namespace itemgrid::protocols

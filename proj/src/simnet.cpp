#include "itemgrid/simnet.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

#include "itemgrid/protocols.hpp"

namespace itemgrid::simnet {

std::string_view name(Protocol p) {
  switch (p) {
    case Protocol::centralized:
      return "centralized";
    case Protocol::fdm:
      return "fdm";
    case Protocol::gfm:
      return "gfm";
  }
  return "?";
}

Protocol protocol_from(std::string_view s) {
  if (s == "centralized") return Protocol::centralized;
  if (s == "fdm") return Protocol::fdm;
  if (s == "gfm") return Protocol::gfm;
  throw InvalidInput("unknown protocol '" + std::string(s) + "'");
}

std::string_view name(MsgKind k) {
  switch (k) {
    case MsgKind::candidate_set:
      return "candidate_set";
    case MsgKind::count_request:
      return "count_request";
    case MsgKind::count_response:
      return "count_response";
    case MsgKind::frequent_broadcast:
      return "frequent_broadcast";
  }
  return "?";
}

std::uint64_t Message::payload_bytes_estimate() const {
  std::uint64_t bytes = 0;
  for (const auto &sc : payload) bytes += (1 + sc.itemset.size()) * 4;
  return bytes;
}

std::uint64_t RunTrace::total_messages() const {
  std::uint64_t total = 0;
  for (const auto &row : traffic) total += row.messages;
  return total;
}

std::uint64_t RunTrace::total_units() const {
  std::uint64_t total = 0;
  for (const auto &row : traffic) total += row.itemset_units;
  return total;
}

nlohmann::json RunTrace::to_json() const {
  nlohmann::json j;
  j["protocol"] = name(config.protocol);
  j["config"] = {{"support", config.support},
                 {"max_level", config.max_level},
                 {"nodes", config.nodes},
                 {"universe", config.universe},
                 {"partition_counts", config.partition_counts},
                 {"partitions_digest", config.partitions_digest}};
  j["rounds"] = rounds;
  j["passes"] = passes;
  j["pass_start_rounds"] = pass_start_rounds;

  j["nodes"] = nlohmann::json::array();
  for (std::size_t id = 0; id < node_levels.size(); ++id) {
    nlohmann::json levels = nlohmann::json::array();
    for (std::size_t l = 0; l < node_levels[id].size(); ++l) {
      const NodeLevelStats &s = node_levels[id][l];
      levels.push_back({{"level", l + 1},
                        {"candidates", s.candidates},
                        {"successes", s.successes},
                        {"failures", s.failures},
                        {"locally_frequent", s.locally_frequent},
                        {"resent", s.resent},
                        {"remote_count_ops", s.remote_count_ops},
                        {"items_in_candidates", s.items_in_candidates},
                        {"items_in_frequent", s.items_in_frequent}});
    }
    j["nodes"].push_back({{"node", id}, {"levels", levels}});
  }

  nlohmann::json rows = nlohmann::json::array();
  for (const auto &row : traffic) {
    rows.push_back({{"node", row.node},
                    {"round", row.round},
                    {"pass", row.pass},
                    {"kind", name(row.kind)},
                    {"messages", row.messages},
                    {"itemset_units", row.itemset_units},
                    {"bytes_estimate", row.bytes_estimate}});
  }
  j["traffic"] = {{"rows", rows},
                  {"total_messages", total_messages()},
                  {"total_itemset_units", total_units()}};
  j["pass_sent_units"] = pass_sent_units;

  nlohmann::json freq = nlohmann::json::array();
  for (const auto &entry : frequent) {
    freq.push_back(
        {{"items", entry.itemset.items()}, {"count", entry.count}, {"exact", entry.exact}});
  }
  j["frequent"] = freq;
  j["level_sizes"] = level_sizes;
  return j;
}

std::string RunTrace::traffic_csv() const {
  std::ostringstream out;
  out << "protocol,node,round,kind,messages,itemset_units\n";
  for (const auto &row : traffic) {
    out << name(config.protocol) << ',' << row.node << ',' << row.round << ','
        << name(row.kind) << ',' << row.messages << ',' << row.itemset_units << '\n';
  }
  return out.str();
}

namespace {

bool payload_less(const Message &a, const Message &b) {
  return std::tie(a.from, a.kind, a.payload) < std::tie(b.from, b.kind, b.payload);
}

}  // namespace

std::uint64_t digest_partitions(const std::vector<TransactionDB> &partitions) {
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](std::uint64_t v) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (v >> (byte * 8)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (const auto &part : partitions) {
    mix(part.universe_size());
    mix(part.count());
    for (const auto &t : part.transactions()) {
      mix(t.size());
      for (Item item : t) mix(item);
    }
  }
  return h;
}

RunTrace run(Protocol protocol, std::shared_ptr<const std::vector<TransactionDB>> partitions,
             SupportThreshold threshold, std::uint32_t max_level) {
  if (!partitions || partitions->empty())
    throw InvalidInput("a run needs at least one partition");
  if (max_level < 1) throw InvalidInput("max_level must be at least 1");
  const std::uint32_t universe = partitions->front().universe_size();
  for (const auto &part : *partitions) {
    if (part.universe_size() != universe)
      throw InvalidInput("partitions disagree on universe size");
  }

  const std::uint32_t nodes =
      protocols::program_count(protocol, static_cast<std::uint32_t>(partitions->size()));
  std::vector<std::unique_ptr<protocols::NodeProgram>> programs;
  programs.reserve(nodes);
  for (NodeId id = 0; id < nodes; ++id)
    programs.push_back(protocols::make_program(protocol, id, *partitions, threshold, max_level));

  RunTrace trace;
  trace.config.protocol = protocol;
  trace.config.support = threshold.fraction();
  trace.config.max_level = max_level;
  trace.config.nodes = nodes;
  trace.config.universe = universe;
  for (const auto &part : *partitions) trace.config.partition_counts.push_back(part.count());
  trace.config.partitions_digest = digest_partitions(*partitions);
  trace.inputs = partitions;

  std::map<std::tuple<int, NodeId, int>, TrafficRow> rows;
  std::vector<std::vector<Message>> inbox(nodes);
  constexpr int round_cap = 1 << 20;

  for (int round = 0;; ++round) {
    if (round > round_cap) throw std::logic_error("simulation did not terminate");

    for (auto &box : inbox) std::sort(box.begin(), box.end(), payload_less);

    bool pass_opened = false;
    std::vector<std::vector<Message>> outputs(nodes);
    for (NodeId id = 0; id < nodes; ++id) {
      protocols::StepResult result = programs[id]->step(round, inbox[id]);
      pass_opened = pass_opened || result.began_pass;
      outputs[id] = std::move(result.messages);
    }

    if (pass_opened) {
      ++trace.passes;
      trace.pass_start_rounds.push_back(round);
      trace.pass_sent_units.emplace_back(nodes, 0);
    }

    bool any_sent = false;
    std::vector<std::vector<Message>> next_inbox(nodes);
    for (NodeId id = 0; id < nodes; ++id) {
      for (Message &msg : outputs[id]) {
        if (msg.from != id || msg.to >= nodes || msg.to == msg.from)
          throw std::logic_error("malformed message routing");
        msg.round = round;
        TrafficRow &row = rows[{round, id, static_cast<int>(msg.kind)}];
        row.node = id;
        row.round = round;
        row.pass = trace.passes;
        row.kind = msg.kind;
        row.messages += 1;
        row.itemset_units += msg.payload_units();
        row.bytes_estimate += msg.payload_bytes_estimate();
        if ((msg.kind == MsgKind::candidate_set || msg.kind == MsgKind::count_request) &&
            trace.passes > 0) {
          trace.pass_sent_units[trace.passes - 1][id] += msg.payload_units();
        }
        any_sent = true;
        next_inbox[msg.to].push_back(std::move(msg));
      }
    }

    bool all_finished = true;
    for (const auto &program : programs)
      all_finished = all_finished && program->finished();
    if (all_finished && !any_sent) {
      trace.rounds = round + 1;
      break;
    }
    inbox = std::move(next_inbox);
  }

  for (const auto &program : programs) trace.node_levels.push_back(program->level_stats());

  trace.frequent = protocols::finalize(protocol, programs);
  std::sort(trace.frequent.begin(), trace.frequent.end());
  std::size_t max_size = 0;
  for (const auto &entry : trace.frequent) max_size = std::max(max_size, entry.itemset.size());
  trace.level_sizes.assign(max_size, 0);
  for (const auto &entry : trace.frequent) trace.level_sizes[entry.itemset.size() - 1] += 1;

  for (auto &[key, row] : rows) trace.traffic.push_back(row);
  return trace;
}

RunTrace run(Protocol protocol, std::vector<TransactionDB> partitions,
             SupportThreshold threshold, std::uint32_t max_level) {
  return run(protocol,
             std::make_shared<const std::vector<TransactionDB>>(std::move(partitions)),
             threshold, max_level);
}

ReplayResult diff_traces(const RunTrace &a, const RunTrace &b) {
  if (!(a.config == b.config))
    throw InvalidInput("traces come from different configurations");
  const std::string ja = a.to_json().dump(1);
  const std::string jb = b.to_json().dump(1);
  if (ja == jb) return {true, ""};

  std::istringstream sa(ja), sb(jb);
  std::string la, lb;
  std::size_t line = 0;
  while (true) {
    const bool ga = static_cast<bool>(std::getline(sa, la));
    const bool gb = static_cast<bool>(std::getline(sb, lb));
    ++line;
    if (!ga && !gb) break;
    if (la != lb || ga != gb) {
      return {false, "first divergence at serialized line " + std::to_string(line) + ": '" +
                         la + "' vs '" + lb + "'"};
    }
  }
  return {false, "traces differ"};
}

ReplayResult replay_check(const RunTrace &trace) {
  if (!trace.inputs) return {false, "trace has no retained inputs"};
  RunTrace again = run(trace.config.protocol, trace.inputs,
                       SupportThreshold(trace.config.support), trace.config.max_level);
  return diff_traces(trace, again);
}

}  // namespace itemgrid::simnet

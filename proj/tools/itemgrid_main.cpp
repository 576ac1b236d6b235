#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "itemgrid/costmodel.hpp"
#include "itemgrid/dataio.hpp"
#include "itemgrid/report.hpp"
#include "itemgrid/simnet.hpp"

namespace ig = itemgrid;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VerificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<double, double> parse_ratio(const std::string &text) {
  double lo = 0, hi = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf%c", &lo, &hi, &extra) != 2 || lo <= 0 || hi <= 0)
    throw UsageError("ratio must look like '1:5' with positive endpoints");
  return {lo, hi};
}

ig::costmodel::LogPParams parse_logp(const std::string &text) {
  ig::costmodel::LogPParams p;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &p.latency, &p.overhead, &p.gap, &extra) != 3)
    throw UsageError("--logp must look like 'L,o,g'");
  if (p.latency < 0 || p.overhead < 0 || p.gap < 0)
    throw UsageError("--logp values must be non-negative");
  return p;
}

std::shared_ptr<const std::vector<ig::TransactionDB>> load_parts_manifest(
    const fs::path &path, const ig::dataio::PartitionManifest &manifest) {
  std::vector<ig::TransactionDB> parts;
  for (const auto &[part_path, count] : manifest.parts) {
    fs::path resolved(part_path);
    if (resolved.is_relative()) resolved = path.parent_path() / resolved;
    parts.push_back(ig::dataio::read_db(resolved));
    if (parts.back().count() != count)
      throw std::runtime_error("manifest count mismatch for " + resolved.string());
  }
  return std::make_shared<const std::vector<ig::TransactionDB>>(std::move(parts));
}

struct ClusterFlags {
  std::string input;
  std::string parts;
  std::uint32_t nodes = 0;
  std::string ratio = "1:1";
  std::uint64_t seed = 0;
};

std::shared_ptr<const std::vector<ig::TransactionDB>> load_partitions(ClusterFlags &f,
                                                                      std::string &label) {
  if (f.input.empty() == f.parts.empty())
    throw UsageError("give exactly one of --input or --parts");
  if (!f.parts.empty()) {
    if (f.nodes != 0) throw UsageError("--nodes conflicts with --parts");
    label = f.parts;
    const ig::dataio::PartitionManifest manifest = ig::dataio::read_manifest(f.parts);
    f.seed = manifest.seed;
    if (!manifest.ratios.empty()) {
      std::ostringstream ratio;
      ratio << manifest.ratios.front() << ':' << manifest.ratios.back();
      f.ratio = ratio.str();
    }
    return load_parts_manifest(f.parts, manifest);
  }
  label = f.input;
  ig::TransactionDB db = ig::dataio::read_db(f.input);
  const std::uint32_t nodes = f.nodes == 0 ? 1 : f.nodes;
  ig::dataio::PartitionSpec spec;
  spec.num_nodes = nodes;
  const auto [lo, hi] = parse_ratio(f.ratio);
  spec.ratios = ig::dataio::PartitionSpec::weights_from_ratio(nodes, lo, hi);
  spec.seed = f.seed;
  return std::make_shared<const std::vector<ig::TransactionDB>>(ig::dataio::partition(db, spec));
}

std::string levels_csv(const ig::simnet::RunTrace &trace) {
  std::ostringstream out;
  out << "protocol,node,level,candidates,successes,failures,locally_frequent,resent,"
         "remote_count_ops,items_in_candidates,items_in_frequent\n";
  for (std::size_t node = 0; node < trace.node_levels.size(); ++node) {
    const auto &levels = trace.node_levels[node];
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const auto &s = levels[l];
      out << name(trace.config.protocol) << ',' << node << ',' << (l + 1) << ','
          << s.candidates << ',' << s.successes << ',' << s.failures << ','
          << s.locally_frequent << ',' << s.resent << ',' << s.remote_count_ops << ','
          << s.items_in_candidates << ',' << s.items_in_frequent << '\n';
    }
  }
  return out.str();
}

int run_gen(const ig::dataio::GenParams &params, const std::string &out) {
  ig::TransactionDB db = ig::dataio::generate(params);
  ig::dataio::write_db(db, out);
  std::cout << "wrote " << db.count() << " transactions over " << db.universe_size()
            << " items to " << out << "\n";
  return 0;
}

int run_partition(const std::string &input, std::uint32_t nodes, const std::string &ratio,
                  std::uint64_t seed, const std::string &out_dir,
                  const std::string &manifest_path) {
  const ig::TransactionDB db = ig::dataio::read_db(input);
  ig::dataio::PartitionSpec spec;
  spec.num_nodes = nodes;
  const auto [lo, hi] = parse_ratio(ratio);
  spec.ratios = ig::dataio::PartitionSpec::weights_from_ratio(nodes, lo, hi);
  spec.seed = seed;
  const std::vector<ig::TransactionDB> parts = ig::dataio::partition(db, spec);

  fs::create_directories(out_dir);
  ig::dataio::PartitionManifest manifest;
  manifest.source = input;
  manifest.seed = seed;
  manifest.ratios = spec.ratios;
  const std::string stem = fs::path(input).stem().string();
  const fs::path manifest_dir = fs::absolute(manifest_path).parent_path();
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const fs::path part_path = fs::path(out_dir) / (stem + ".part" + std::to_string(i) + ".txt");
    ig::dataio::write_db(parts[i], part_path);
    // manifest entries are relative to the manifest itself, so the bundle moves
    std::error_code ec;
    fs::path stored = fs::relative(fs::absolute(part_path), manifest_dir, ec);
    if (ec || stored.empty()) stored = fs::absolute(part_path);
    manifest.parts.emplace_back(stored.string(), parts[i].count());
  }
  ig::dataio::write_manifest(manifest, manifest_path);
  std::cout << "wrote " << parts.size() << " partitions and manifest " << manifest_path << "\n";
  return 0;
}

struct MineFlags {
  ClusterFlags cluster;
  std::string protocol = "centralized";
  double support = 0;
  std::uint32_t max_level = 0;
  std::string trace_out, csv_out, traffic_out;
};

int run_mine(const MineFlags &f) {
  if (!(f.support > 0) || f.support > 1)
    throw UsageError("--support must be in (0, 1]");
  if (f.max_level < 1) throw UsageError("--k must be at least 1");
  const ig::simnet::Protocol protocol = ig::simnet::protocol_from(f.protocol);
  if (protocol == ig::simnet::Protocol::centralized &&
      (f.cluster.nodes != 0 || !f.cluster.parts.empty()))
    throw UsageError("centralized mining takes no cluster flags");

  std::string label;
  ClusterFlags cluster = f.cluster;
  auto parts = load_partitions(cluster, label);
  const ig::simnet::RunTrace trace =
      ig::simnet::run(protocol, parts, ig::SupportThreshold(f.support), f.max_level);

  if (!f.trace_out.empty())
    ig::dataio::atomic_write(f.trace_out, trace.to_json().dump(2) + "\n");
  if (!f.csv_out.empty()) ig::dataio::atomic_write(f.csv_out, levels_csv(trace));
  if (!f.traffic_out.empty()) ig::dataio::atomic_write(f.traffic_out, trace.traffic_csv());

  std::uint64_t total_frequent = trace.frequent.size();
  std::cout << name(protocol) << ": " << total_frequent << " frequent itemsets, "
            << trace.passes << " passes, " << trace.total_units() << " itemset units sent\n";
  return 0;
}

struct CompareFlags {
  ClusterFlags cluster;
  double support = 0;
  std::uint32_t max_level = 0;
  std::string logp = "0,0,1";
  std::string json_out, csv_out;
  std::string config;
};

int run_compare_one(const CompareFlags &f, std::vector<std::string> &csv_rows,
                    nlohmann::json &json_reports) {
  if (!(f.support > 0) || f.support > 1)
    throw UsageError("--support must be in (0, 1]");
  if (f.max_level < 1) throw UsageError("--k must be at least 1");

  ig::report::CompareRequest request;
  ClusterFlags cluster = f.cluster;
  request.partitions = load_partitions(cluster, request.dataset_label);
  request.ratio_label = cluster.ratio;
  request.partition_seed = cluster.seed;
  request.support = f.support;
  request.max_level = f.max_level;
  request.logp = parse_logp(f.logp);

  const ig::report::ComparisonReport report = ig::report::compare_protocols(request);
  csv_rows.push_back(report.csv_row());
  json_reports.push_back(report.to_json());

  std::cout << report.csv_header() << "\n" << report.csv_row() << "\n";
  if (!report.verified) {
    std::cerr << "FAILED: " << report.verify_error << "\n";
    return 1;
  }
  return 0;
}

int run_compare(const CompareFlags &flags) {
  std::vector<CompareFlags> jobs;
  if (!flags.config.empty()) {
    if (!flags.cluster.input.empty() || !flags.cluster.parts.empty())
      throw UsageError("--config conflicts with direct input flags");
    std::ifstream in(flags.config);
    if (!in) throw std::runtime_error("cannot open " + flags.config);
    nlohmann::json j;
    in >> j;
    CompareFlags base = flags;
    base.config.clear();
    if (j.contains("input")) base.cluster.input = j["input"].get<std::string>();
    if (j.contains("parts")) base.cluster.parts = j["parts"].get<std::string>();
    if (j.contains("nodes")) base.cluster.nodes = j["nodes"].get<std::uint32_t>();
    if (j.contains("seed")) base.cluster.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("k")) base.max_level = j["k"].get<std::uint32_t>();
    if (j.contains("logp")) base.logp = j["logp"].get<std::string>();
    if (j.contains("json_out")) base.json_out = j["json_out"].get<std::string>();
    if (j.contains("csv_out")) base.csv_out = j["csv_out"].get<std::string>();
    std::vector<double> supports;
    if (j.contains("supports"))
      supports = j["supports"].get<std::vector<double>>();
    else if (j.contains("support"))
      supports.push_back(j["support"].get<double>());
    std::vector<std::string> ratios;
    if (j.contains("ratios"))
      ratios = j["ratios"].get<std::vector<std::string>>();
    else if (j.contains("ratio"))
      ratios.push_back(j["ratio"].get<std::string>());
    if (ratios.empty()) ratios.push_back(base.cluster.ratio);
    if (supports.empty()) throw UsageError("config needs 'support' or 'supports'");
    for (double s : supports) {
      for (const std::string &r : ratios) {
        CompareFlags job = base;
        job.support = s;
        job.cluster.ratio = r;
        jobs.push_back(job);
      }
    }
  } else {
    jobs.push_back(flags);
  }

  std::vector<std::string> csv_rows;
  nlohmann::json json_reports = nlohmann::json::array();
  int rc = 0;
  for (const CompareFlags &job : jobs) rc = std::max(rc, run_compare_one(job, csv_rows, json_reports));

  if (!flags.json_out.empty()) {
    const nlohmann::json out =
        json_reports.size() == 1 ? json_reports.front() : json_reports;
    ig::dataio::atomic_write(flags.json_out, out.dump(2) + "\n");
  }
  if (!flags.csv_out.empty()) {
    std::ostringstream out;
    out << ig::report::ComparisonReport::csv_header() << "\n";
    for (const std::string &row : csv_rows) out << row << "\n";
    ig::dataio::atomic_write(flags.csv_out, out.str());
  }
  if (rc != 0) throw VerificationError("protocol results differ; see report");
  return rc;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"itemgrid: frequent-itemset mining over simulated node clusters"};
  app.require_subcommand(1);

  // gen
  ig::dataio::GenParams gen_params;
  gen_params.num_transactions = 1000;
  gen_params.universe_size = 100;
  gen_params.avg_transaction_size = 10;
  gen_params.num_patterns = 0;  // 0 = derived from the universe below
  std::string gen_out;
  auto *gen = app.add_subcommand("gen", "generate a synthetic basket dataset");
  gen->add_option("--out", gen_out, "output transaction file")->required();
  gen->add_option("--transactions", gen_params.num_transactions, "number of transactions");
  gen->add_option("--items", gen_params.universe_size, "universe size");
  gen->add_option("--avg-size", gen_params.avg_transaction_size, "average transaction size");
  gen->add_option("--patterns", gen_params.num_patterns, "seed pattern count (0 = items/10)");
  gen->add_option("--avg-pattern", gen_params.avg_pattern_size, "average pattern size");
  gen->add_option("--corruption", gen_params.corruption, "pattern item drop probability");
  gen->add_option("--seed", gen_params.seed, "generator seed");

  // partition
  std::string part_input, part_ratio = "1:1", part_outdir = ".", part_manifest;
  std::uint32_t part_nodes = 2;
  std::uint64_t part_seed = 0;
  auto *part = app.add_subcommand("partition", "split a dataset into node partitions");
  part->add_option("--input", part_input, "transaction file")->required();
  part->add_option("--nodes", part_nodes, "number of partitions");
  part->add_option("--ratios", part_ratio, "size ratio, e.g. 1:5");
  part->add_option("--seed", part_seed, "shuffle seed");
  part->add_option("--out-dir", part_outdir, "partition output directory");
  part->add_option("--manifest", part_manifest, "manifest output path")->required();

  // mine
  MineFlags mine_flags;
  auto *mine = app.add_subcommand("mine", "run one mining protocol and dump its trace");
  mine->add_option("--input", mine_flags.cluster.input, "transaction file");
  mine->add_option("--parts", mine_flags.cluster.parts, "partition manifest");
  mine->add_option("--protocol", mine_flags.protocol, "centralized | fdm | gfm")
      ->check(CLI::IsMember({"centralized", "fdm", "gfm"}));
  mine->add_option("--support", mine_flags.support, "support threshold in (0,1]")->required();
  mine->add_option("--k", mine_flags.max_level, "maximum itemset size")->required();
  mine->add_option("--nodes", mine_flags.cluster.nodes, "partition count for --input");
  mine->add_option("--ratios", mine_flags.cluster.ratio, "partition size ratio");
  mine->add_option("--seed", mine_flags.cluster.seed, "partition shuffle seed");
  mine->add_option("--trace-out", mine_flags.trace_out, "run trace JSON output");
  mine->add_option("--csv-out", mine_flags.csv_out, "per-level stats CSV output");
  mine->add_option("--traffic-out", mine_flags.traffic_out, "per-round traffic CSV output");

  // compare
  CompareFlags cmp_flags;
  auto *cmp = app.add_subcommand("compare", "run fdm and gfm on the same inputs and report");
  cmp->add_option("--input", cmp_flags.cluster.input, "transaction file");
  cmp->add_option("--parts", cmp_flags.cluster.parts, "partition manifest");
  cmp->add_option("--support", cmp_flags.support, "support threshold in (0,1]");
  cmp->add_option("--k", cmp_flags.max_level, "maximum itemset size");
  cmp->add_option("--nodes", cmp_flags.cluster.nodes, "partition count for --input");
  cmp->add_option("--ratios", cmp_flags.cluster.ratio, "partition size ratio");
  cmp->add_option("--seed", cmp_flags.cluster.seed, "partition shuffle seed");
  cmp->add_option("--logp", cmp_flags.logp, "network parameters 'L,o,g'");
  cmp->add_option("--json-out", cmp_flags.json_out, "comparison report JSON output");
  cmp->add_option("--csv-out", cmp_flags.csv_out, "comparison table CSV output");
  cmp->add_option("--config", cmp_flags.config, "JSON sweep config (supports x ratios)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      if (gen_params.num_patterns == 0)
        gen_params.num_patterns = std::max<std::uint32_t>(1, gen_params.universe_size / 10);
      try {
        gen_params.validate();
      } catch (const ig::InvalidInput &e) {
        throw UsageError(e.what());
      }
      return run_gen(gen_params, gen_out);
    }
    if (part->parsed())
      return run_partition(part_input, part_nodes, part_ratio, part_seed, part_outdir,
                           part_manifest);
    if (mine->parsed()) {
      if (mine->count("--ratios") > 0 && mine->count("--nodes") == 0)
        throw UsageError("--ratios requires --nodes");
      return run_mine(mine_flags);
    }
    if (cmp->parsed()) {
      if (cmp_flags.config.empty()) {
        if (cmp->count("--ratios") > 0 && cmp->count("--nodes") == 0)
          throw UsageError("--ratios requires --nodes");
        if (cmp_flags.support == 0) throw UsageError("--support is required");
        if (cmp_flags.max_level == 0) throw UsageError("--k is required");
      }
      return run_compare(cmp_flags);
    }
  } catch (const UsageError &e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ig::InvalidInput &e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const VerificationError &e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

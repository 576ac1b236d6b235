#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "itemgrid/itemsets.hpp"

namespace itemgrid::dataio {

/// Parameters of the synthetic basket generator (Quest-style).
struct GenParams {
  std::uint64_t num_transactions = 0;
  std::uint32_t universe_size = 0;
  double avg_transaction_size = 0;
  std::uint32_t num_patterns = 1;
  double avg_pattern_size = 4;
  double corruption = 0.25;  // probability of dropping a pattern item
  std::uint64_t seed = 1;

  void validate() const;
};

/// Synthesizes basket data: seed patterns drawn over random items; each
/// transaction fills a Poisson-sized basket from randomly chosen patterns
/// (items dropped with probability `corruption`), padded with uniform
/// random items when the patterns fall short. Fully deterministic for a
/// fixed seed: all sampling is hand-rolled on top of mt19937_64.
TransactionDB generate(const GenParams &params);

struct PartitionSpec {
  std::uint32_t num_nodes = 1;
  std::vector<double> ratios;  // one positive weight per node
  std::uint64_t seed = 0;

  void validate() const;
  /// Weights for a "lo:hi" ratio: linear interpolation from lo to hi.
  static std::vector<double> weights_from_ratio(std::uint32_t nodes, double lo, double hi);
};

/// Largest-remainder apportionment of `total` over `weights`. Ties go to
/// the lower index.
std::vector<std::uint64_t> apportion(std::uint64_t total, std::span<const double> weights);

/// Horizontal split: seeded shuffle, then contiguous slices with sizes from
/// `apportion`. Every transaction lands in exactly one partition.
std::vector<TransactionDB> partition(const TransactionDB &db, const PartitionSpec &spec);

struct ParseError : std::runtime_error {
  ParseError(std::size_t line, const std::string &what);
  std::size_t line;
};

/// Transaction file: line 1 is "# n=<universe> D=<count>", then one line per
/// transaction of ascending space-separated item ids, LF-terminated.
void write_db(const TransactionDB &db, const std::filesystem::path &path);
TransactionDB read_db(const std::filesystem::path &path);

struct PartitionManifest {
  std::string source;
  std::vector<std::pair<std::string, std::uint64_t>> parts;  // path, transaction count
  std::uint64_t seed = 0;
  std::vector<double> ratios;
};

void write_manifest(const PartitionManifest &m, const std::filesystem::path &path);
PartitionManifest read_manifest(const std::filesystem::path &path);

/// Whole-file atomic write: temp file in the same directory, then rename.
void atomic_write(const std::filesystem::path &path, const std::string &content);

}  // namespace itemgrid::dataio

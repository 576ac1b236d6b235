#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "itemgrid/kernels.hpp"

namespace itemgrid {

using Item = std::uint32_t;

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Immutable set of items, stored as a strictly ascending id sequence.
class Itemset {
 public:
  Itemset() = default;
  /// Requires strictly ascending ids (implies duplicate-free).
  explicit Itemset(std::vector<Item> ids);
  /// Builds from arbitrary ids: sorts and drops duplicates.
  static Itemset from_unsorted(std::vector<Item> ids);

  const std::vector<Item> &items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  auto operator<=>(const Itemset &) const = default;

 private:
  std::vector<Item> items_;
};

/// Merge test over two ascending sequences: is `sub` contained in `super`?
bool is_subset(std::span<const Item> sub, std::span<const Item> super);
inline bool is_subset(const Itemset &sub, const Itemset &super) {
  return is_subset(sub.items(), super.items());
}

/// All subsets of `x` with one item removed, in ascending drop position.
std::vector<Itemset> immediate_subsets(const Itemset &x);

using Transaction = std::vector<Item>;  // strictly ascending, duplicate-free

/// Ordered collection of transactions over a fixed item universe [0, n).
class TransactionDB {
 public:
  TransactionDB() = default;
  TransactionDB(std::vector<Transaction> transactions, std::uint32_t universe_size);

  std::uint32_t universe_size() const { return universe_size_; }
  std::uint64_t count() const { return transactions_.size(); }
  const std::vector<Transaction> &transactions() const { return transactions_; }

  bool operator==(const TransactionDB &) const = default;

 private:
  std::vector<Transaction> transactions_;
  std::uint32_t universe_size_ = 0;
};

/// Relative minimum-support threshold in (0, 1].
class SupportThreshold {
 public:
  explicit SupportThreshold(double fraction);
  double fraction() const { return fraction_; }

  /// Smallest count that passes: max(1, ceil(fraction * transactions)).
  /// A small epsilon absorbs binary rounding of decimal fractions so that
  /// e.g. 0.4 * 5 resolves to 2, not 3.
  std::uint64_t absolute_count(std::uint64_t transactions) const;
  std::uint64_t absolute(const TransactionDB &db) const {
    return absolute_count(db.count());
  }

 private:
  double fraction_ = 0;
};

struct SupportCount {
  Itemset itemset;
  std::uint64_t count = 0;

  auto operator<=>(const SupportCount &) const = default;
};

/// All frequent itemsets of one size, sorted by itemset.
struct FrequentLevel {
  std::uint32_t level = 0;
  std::vector<SupportCount> entries;

  bool operator==(const FrequentLevel &) const = default;
};

struct LevelCounters {
  std::uint64_t candidates = 0;
  std::uint64_t successes = 0;
  std::uint64_t failures = 0;
  std::uint32_t items_in_candidates = 0;  // distinct items over the level's candidates
  std::uint32_t items_in_frequent = 0;    // distinct items over the level's frequent sets
};
using LevelStats = std::vector<LevelCounters>;  // index l-1 for level l

struct MiningResult {
  std::vector<FrequentLevel> levels;
  LevelStats stats;

  /// All frequent itemsets with counts, level by level.
  std::vector<SupportCount> flatten() const;
};

/// Support counter over one database. The default mode packs vertical
/// per-item bitmaps and counts via AND+popcount; `sorted_scan` is the
/// plain per-transaction merge test used as the reference path.
/// Holds a reference to the database, which must outlive the engine.
class CountingEngine {
 public:
  enum class Mode { bitmap, sorted_scan };

  explicit CountingEngine(const TransactionDB &db, Mode mode = Mode::bitmap,
                          kernels::Kind kind = kernels::best_available());

  std::uint64_t count(const Itemset &x) const;
  std::vector<std::uint64_t> count_batch(std::span<const Itemset> xs) const;
  std::uint64_t item_count(Item item) const;

  const TransactionDB &db() const { return *db_; }
  Mode mode() const { return mode_; }
  kernels::Kind kind() const { return kind_; }

 private:
  const TransactionDB *db_ = nullptr;
  Mode mode_ = Mode::bitmap;
  kernels::Kind kind_ = kernels::Kind::scalar;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;  // universe_size rows of `words_` words

  const std::uint64_t *row(Item item) const { return bits_.data() + std::size_t(item) * words_; }
};

/// Number of transactions in `db` containing `x`. Plain merge-scan path.
SupportCount support(const TransactionDB &db, const Itemset &x);

/// Classic level-wise candidate generation: join frequent (l-1)-itemsets
/// sharing their first l-2 items, keep candidates whose every (l-1)-subset
/// is frequent. Output is duplicate-free in ascending lexicographic order.
std::vector<Itemset> apriori_gen(const FrequentLevel &frequent_prev);
std::vector<Itemset> apriori_gen(std::span<const Itemset> prev_sorted);

/// Level-wise mining up to `max_level`. Stops early once a level yields no
/// frequent itemsets or no candidates can be generated.
MiningResult mine_apriori(const TransactionDB &db, SupportThreshold threshold,
                          std::uint32_t max_level,
                          const CountingEngine *engine = nullptr);

/// Frequent itemsets with no frequent proper superset in `levels`.
std::vector<SupportCount> maximal(std::span<const FrequentLevel> levels);

/// Exhaustive oracle: enumerates every itemset of size 1..max_level and
/// counts it with a transaction-bitmask test, independent of apriori_gen
/// and of the counting kernels. Refuses universes larger than 24 items.
std::vector<FrequentLevel> brute_force_frequent(const TransactionDB &db,
                                                SupportThreshold threshold,
                                                std::uint32_t max_level);

/// Distinct item count across a collection of itemsets.
std::uint32_t distinct_item_count(std::span<const Itemset> sets, std::uint32_t universe);
std::uint32_t distinct_item_count(std::span<const SupportCount> sets, std::uint32_t universe);

}  // namespace itemgrid

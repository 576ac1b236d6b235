#include "itemgrid/itemsets.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace itemgrid {

Itemset::Itemset(std::vector<Item> ids) : items_(std::move(ids)) {
  for (std::size_t i = 1; i < items_.size(); ++i) {
    if (items_[i - 1] >= items_[i])
      throw InvalidInput("itemset ids must be strictly ascending");
  }
}

Itemset Itemset::from_unsorted(std::vector<Item> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return Itemset(std::move(ids));
}

bool is_subset(std::span<const Item> sub, std::span<const Item> super) {
  std::size_t i = 0, j = 0;
  while (i < sub.size() && j < super.size()) {
    if (sub[i] == super[j]) {
      ++i;
      ++j;
    } else if (sub[i] > super[j]) {
      ++j;
    } else {
      return false;
    }
  }
  return i == sub.size();
}

std::vector<Itemset> immediate_subsets(const Itemset &x) {
  std::vector<Itemset> out;
  if (x.size() <= 1) return out;  // dropping from a 1-itemset leaves nothing useful
  out.reserve(x.size());
  for (std::size_t drop = 0; drop < x.size(); ++drop) {
    std::vector<Item> ids;
    ids.reserve(x.size() - 1);
    for (std::size_t i = 0; i < x.size(); ++i)
      if (i != drop) ids.push_back(x.items()[i]);
    out.emplace_back(std::move(ids));
  }
  return out;
}

TransactionDB::TransactionDB(std::vector<Transaction> transactions,
                             std::uint32_t universe_size)
    : transactions_(std::move(transactions)), universe_size_(universe_size) {
  for (const auto &t : transactions_) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i > 0 && t[i - 1] >= t[i])
        throw InvalidInput("transaction items must be strictly ascending");
      if (t[i] >= universe_size_)
        throw InvalidInput("transaction item id outside the universe");
    }
  }
}

SupportThreshold::SupportThreshold(double fraction) : fraction_(fraction) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw InvalidInput("support fraction must be in (0, 1]");
}

std::uint64_t SupportThreshold::absolute_count(std::uint64_t transactions) const {
  const double raw = fraction_ * static_cast<double>(transactions);
  const double up = std::ceil(raw - 1e-9);
  const auto abs = up <= 0 ? std::uint64_t{0} : static_cast<std::uint64_t>(up);
  return std::max<std::uint64_t>(abs, 1);
}

std::vector<SupportCount> MiningResult::flatten() const {
  std::vector<SupportCount> out;
  for (const auto &lvl : levels)
    out.insert(out.end(), lvl.entries.begin(), lvl.entries.end());
  return out;
}

CountingEngine::CountingEngine(const TransactionDB &db, Mode mode, kernels::Kind kind)
    : db_(&db), mode_(mode), kind_(kind) {
  if (!kernels::available(kind)) throw InvalidInput("requested kernel is not available");
  if (mode_ != Mode::bitmap) return;
  words_ = (db.count() + 63) / 64;
  bits_.assign(std::size_t(db.universe_size()) * words_, 0);
  std::uint64_t tid = 0;
  for (const auto &t : db.transactions()) {
    for (Item item : t)
      bits_[std::size_t(item) * words_ + tid / 64] |= std::uint64_t{1} << (tid % 64);
    ++tid;
  }
}

std::uint64_t CountingEngine::count(const Itemset &x) const {
  for (Item item : x.items())
    if (item >= db_->universe_size())
      throw InvalidInput("itemset contains an id outside the universe");
  if (x.empty()) return db_->count();  // the empty set is in every transaction
  if (mode_ == Mode::sorted_scan) {
    std::uint64_t n = 0;
    for (const auto &t : db_->transactions())
      if (is_subset(x.items(), t)) ++n;
    return n;
  }
  std::vector<const std::uint64_t *> rows;
  rows.reserve(x.size());
  for (Item item : x.items()) rows.push_back(row(item));
  return kernels::intersect_count(kind_, rows, words_);
}

std::vector<std::uint64_t> CountingEngine::count_batch(std::span<const Itemset> xs) const {
  std::vector<std::uint64_t> out;
  out.reserve(xs.size());
  for (const auto &x : xs) out.push_back(count(x));
  return out;
}

std::uint64_t CountingEngine::item_count(Item item) const {
  if (item >= db_->universe_size())
    throw InvalidInput("item id outside the universe");
  if (mode_ == Mode::sorted_scan) {
    std::uint64_t n = 0;
    for (const auto &t : db_->transactions())
      if (std::binary_search(t.begin(), t.end(), item)) ++n;
    return n;
  }
  return kernels::popcount_words(kind_, row(item), words_);
}

SupportCount support(const TransactionDB &db, const Itemset &x) {
  for (Item item : x.items())
    if (item >= db.universe_size())
      throw InvalidInput("itemset contains an id outside the universe");
  std::uint64_t n = 0;
  for (const auto &t : db.transactions())
    if (is_subset(x.items(), t)) ++n;
  return SupportCount{x, n};
}

std::vector<Itemset> apriori_gen(std::span<const Itemset> prev_sorted) {
  std::vector<Itemset> out;
  if (prev_sorted.empty()) return out;
  const std::size_t l = prev_sorted[0].size();

  const auto frequent = [&](const Itemset &x) {
    return std::binary_search(prev_sorted.begin(), prev_sorted.end(), x);
  };

  for (std::size_t i = 0; i < prev_sorted.size(); ++i) {
    const auto &a = prev_sorted[i].items();
    for (std::size_t j = i + 1; j < prev_sorted.size(); ++j) {
      const auto &b = prev_sorted[j].items();
      if (l > 0 && !std::equal(a.begin(), a.end() - 1, b.begin(), b.end() - 1)) break;
      std::vector<Item> ids(a.begin(), a.end());
      ids.push_back(b.back());
      Itemset candidate(std::move(ids));
      bool keep = true;
      for (const auto &sub : immediate_subsets(candidate)) {
        if (!frequent(sub)) {
          keep = false;
          break;
        }
      }
      if (keep) out.push_back(std::move(candidate));
    }
  }
  return out;
}

std::vector<Itemset> apriori_gen(const FrequentLevel &frequent_prev) {
  if (frequent_prev.level < 1) throw InvalidInput("apriori_gen needs level >= 1");
  std::vector<Itemset> prev;
  prev.reserve(frequent_prev.entries.size());
  for (std::size_t i = 0; i < frequent_prev.entries.size(); ++i) {
    const auto &e = frequent_prev.entries[i];
    if (e.itemset.size() != frequent_prev.level)
      throw InvalidInput("frequent level contains an itemset of the wrong size");
    if (i > 0 && !(frequent_prev.entries[i - 1].itemset < e.itemset))
      throw InvalidInput("frequent level entries must be sorted and duplicate-free");
    prev.push_back(e.itemset);
  }
  return apriori_gen(prev);
}

MiningResult mine_apriori(const TransactionDB &db, SupportThreshold threshold,
                          std::uint32_t max_level, const CountingEngine *engine) {
  if (max_level < 1) throw InvalidInput("max_level must be at least 1");
  std::optional<CountingEngine> own;
  if (engine == nullptr) {
    own.emplace(db);
    engine = &*own;
  }
  const std::uint64_t need = threshold.absolute(db);

  MiningResult result;

  // Level 1: every universe item is a candidate.
  const std::uint32_t n = db.universe_size();
  std::vector<SupportCount> current;
  for (Item item = 0; item < n; ++item) {
    const std::uint64_t c = engine->item_count(item);
    if (c >= need) current.push_back({Itemset({item}), c});
  }
  LevelCounters lc1;
  lc1.candidates = n;
  lc1.successes = current.size();
  lc1.failures = n - current.size();
  lc1.items_in_candidates = n;
  lc1.items_in_frequent = static_cast<std::uint32_t>(current.size());
  result.stats.push_back(lc1);
  result.levels.push_back({1, current});
  if (current.empty() || max_level == 1) return result;

  for (std::uint32_t level = 2;; ++level) {
    std::vector<Itemset> prev;
    prev.reserve(result.levels.back().entries.size());
    for (const auto &e : result.levels.back().entries) prev.push_back(e.itemset);

    std::vector<Itemset> candidates = apriori_gen(prev);
    if (candidates.empty()) break;

    const std::vector<std::uint64_t> counts = engine->count_batch(candidates);
    std::vector<SupportCount> kept;
    for (std::size_t i = 0; i < candidates.size(); ++i)
      if (counts[i] >= need) kept.push_back({candidates[i], counts[i]});

    LevelCounters lc;
    lc.candidates = candidates.size();
    lc.successes = kept.size();
    lc.failures = candidates.size() - kept.size();
    lc.items_in_candidates = distinct_item_count(candidates, n);
    std::vector<Itemset> kept_sets;
    kept_sets.reserve(kept.size());
    for (const auto &e : kept) kept_sets.push_back(e.itemset);
    lc.items_in_frequent = distinct_item_count(kept_sets, n);
    result.stats.push_back(lc);
    result.levels.push_back({level, std::move(kept)});

    if (result.levels.back().entries.empty() || level == max_level) break;
  }
  return result;
}

std::vector<SupportCount> maximal(std::span<const FrequentLevel> levels) {
  std::vector<SupportCount> out;
  for (std::size_t li = 0; li < levels.size(); ++li) {
    const auto &entries = levels[li].entries;
    const std::vector<SupportCount> *next =
        li + 1 < levels.size() ? &levels[li + 1].entries : nullptr;
    for (const auto &e : entries) {
      bool covered = false;
      if (next != nullptr) {
        for (const auto &sup : *next) {
          if (is_subset(e.itemset, sup.itemset)) {
            covered = true;
            break;
          }
        }
      }
      if (!covered) out.push_back(e);
    }
  }
  return out;
}

std::vector<FrequentLevel> brute_force_frequent(const TransactionDB &db,
                                                SupportThreshold threshold,
                                                std::uint32_t max_level) {
  if (max_level < 1) throw InvalidInput("max_level must be at least 1");
  const std::uint32_t n = db.universe_size();
  if (n > 24) throw InvalidInput("brute force oracle refuses universes above 24 items");

  std::vector<std::uint32_t> masks;
  masks.reserve(db.count());
  for (const auto &t : db.transactions()) {
    std::uint32_t m = 0;
    for (Item item : t) m |= std::uint32_t{1} << item;
    masks.push_back(m);
  }
  const std::uint64_t need = threshold.absolute(db);

  std::vector<FrequentLevel> levels;
  for (std::uint32_t size = 1; size <= max_level; ++size) {
    FrequentLevel level{size, {}};
    if (size <= n) {
      std::vector<Item> combo(size);
      for (std::uint32_t i = 0; i < size; ++i) combo[i] = i;
      while (true) {
        std::uint32_t m = 0;
        for (Item item : combo) m |= std::uint32_t{1} << item;
        std::uint64_t c = 0;
        for (std::uint32_t tm : masks)
          if ((tm & m) == m) ++c;
        if (c >= need) level.entries.push_back({Itemset(combo), c});

        // next combination in lexicographic order
        std::int64_t pos = size - 1;
        while (pos >= 0 && combo[pos] == n - size + pos) --pos;
        if (pos < 0) break;
        ++combo[pos];
        for (std::size_t k = pos + 1; k < size; ++k) combo[k] = combo[k - 1] + 1;
      }
    }
    const bool empty = level.entries.empty();
    levels.push_back(std::move(level));
    // supersets of an empty level cannot be frequent
    if (empty) break;
  }
  return levels;
}

namespace {
template <typename Sets, typename Get>
std::uint32_t distinct_items(const Sets &sets, std::uint32_t universe, Get get) {
  std::vector<bool> seen(universe, false);
  std::uint32_t total = 0;
  for (const auto &s : sets) {
    for (Item item : get(s).items()) {
      if (!seen[item]) {
        seen[item] = true;
        ++total;
      }
    }
  }
  return total;
}
}  // namespace

std::uint32_t distinct_item_count(std::span<const Itemset> sets, std::uint32_t universe) {
  return distinct_items(sets, universe, [](const Itemset &x) -> const Itemset & { return x; });
}

std::uint32_t distinct_item_count(std::span<const SupportCount> sets,
                                  std::uint32_t universe) {
  return distinct_items(sets, universe,
                        [](const SupportCount &x) -> const Itemset & { return x.itemset; });
}

}  // namespace itemgrid

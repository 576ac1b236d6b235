#include "itemgrid/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace itemgrid::dataio {

namespace {

// Hand-rolled samplers: std::*_distribution output is not pinned by the
// standard, and generated datasets must be bit-stable across toolchains.
struct Rng {
  std::mt19937_64 gen;

  explicit Rng(std::uint64_t seed) : gen(seed) {}

  double uniform01() {  // [0, 1)
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
  }

  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : gen() % n; }

  std::uint64_t poisson(double mean) {  // Knuth product method
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  std::uint64_t geometric_from_one(double mean) {  // support {1, 2, ...}
    if (mean <= 1.0) return 1;
    const double p = 1.0 / mean;
    const double u = uniform01();
    const double v = std::log1p(-u) / std::log1p(-p);
    return 1 + static_cast<std::uint64_t>(v);
  }
};

}  // namespace

void GenParams::validate() const {
  if (num_transactions < 1) throw InvalidInput("num_transactions must be >= 1");
  if (universe_size < 1) throw InvalidInput("universe_size must be >= 1");
  if (num_patterns < 1) throw InvalidInput("num_patterns must be >= 1");
  if (!(avg_transaction_size >= 1)) throw InvalidInput("avg_transaction_size must be >= 1");
  if (avg_transaction_size > universe_size)
    throw InvalidInput("avg_transaction_size cannot exceed universe_size");
  if (!(avg_pattern_size >= 1)) throw InvalidInput("avg_pattern_size must be >= 1");
  if (!(corruption >= 0.0) || corruption > 1.0)
    throw InvalidInput("corruption must be in [0, 1]");
}

TransactionDB generate(const GenParams &params) {
  params.validate();
  Rng rng(params.seed);
  const std::uint32_t n = params.universe_size;

  std::vector<std::vector<Item>> patterns(params.num_patterns);
  for (auto &pattern : patterns) {
    const std::uint64_t size =
        std::min<std::uint64_t>(rng.geometric_from_one(params.avg_pattern_size), n);
    std::set<Item> items;
    while (items.size() < size) items.insert(static_cast<Item>(rng.below(n)));
    pattern.assign(items.begin(), items.end());
  }

  std::vector<Transaction> transactions;
  transactions.reserve(params.num_transactions);
  for (std::uint64_t t = 0; t < params.num_transactions; ++t) {
    const std::uint64_t target =
        std::clamp<std::uint64_t>(rng.poisson(params.avg_transaction_size), 1, n);
    std::set<Item> items;
    std::uint64_t attempts = 0;
    const std::uint64_t max_attempts = 4 * target + 16;
    while (items.size() < target && attempts < max_attempts) {
      ++attempts;
      const auto &pattern = patterns[rng.below(patterns.size())];
      for (Item item : pattern) {
        if (items.size() >= target) break;
        if (rng.uniform01() >= params.corruption) items.insert(item);
      }
    }
    while (items.size() < target) items.insert(static_cast<Item>(rng.below(n)));
    transactions.emplace_back(items.begin(), items.end());
  }
  return TransactionDB(std::move(transactions), n);
}

void PartitionSpec::validate() const {
  if (num_nodes < 1) throw InvalidInput("num_nodes must be >= 1");
  if (ratios.size() != num_nodes)
    throw InvalidInput("partition spec needs one weight per node");
  for (double w : ratios)
    if (!(w > 0)) throw InvalidInput("partition weights must be positive");
}

std::vector<double> PartitionSpec::weights_from_ratio(std::uint32_t nodes, double lo,
                                                      double hi) {
  if (nodes < 1) throw InvalidInput("num_nodes must be >= 1");
  if (!(lo > 0) || !(hi > 0)) throw InvalidInput("ratio endpoints must be positive");
  std::vector<double> weights(nodes);
  if (nodes == 1) {
    weights[0] = lo;
    return weights;
  }
  for (std::uint32_t i = 0; i < nodes; ++i)
    weights[i] = lo + (hi - lo) * static_cast<double>(i) / (nodes - 1);
  return weights;
}

std::vector<std::uint64_t> apportion(std::uint64_t total, std::span<const double> weights) {
  if (weights.empty()) throw InvalidInput("apportion needs at least one weight");
  double sum = 0;
  for (double w : weights) {
    if (!(w > 0)) throw InvalidInput("apportion weights must be positive");
    sum += w;
  }
  std::vector<std::uint64_t> sizes(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(total) * weights[i] / sum;
    sizes[i] = static_cast<std::uint64_t>(std::floor(quota));
    assigned += sizes[i];
    remainders.emplace_back(quota - std::floor(quota), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto &a, const auto &b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++sizes[remainders[k].second];
  return sizes;
}

std::vector<TransactionDB> partition(const TransactionDB &db, const PartitionSpec &spec) {
  spec.validate();
  if (spec.num_nodes > db.count())
    throw InvalidInput("cannot split into more partitions than transactions");

  const std::vector<std::uint64_t> sizes = apportion(db.count(), spec.ratios);

  std::vector<std::uint64_t> order(db.count());
  for (std::uint64_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(spec.seed);
  for (std::uint64_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);

  std::vector<TransactionDB> parts;
  parts.reserve(spec.num_nodes);
  std::uint64_t pos = 0;
  for (std::uint64_t size : sizes) {
    std::vector<Transaction> slice;
    slice.reserve(size);
    for (std::uint64_t k = 0; k < size; ++k)
      slice.push_back(db.transactions()[order[pos + k]]);
    pos += size;
    parts.emplace_back(std::move(slice), db.universe_size());
  }
  return parts;
}

ParseError::ParseError(std::size_t line_no, const std::string &what)
    : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}

void atomic_write(const std::filesystem::path &path, const std::string &content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_db(const TransactionDB &db, const std::filesystem::path &path) {
  std::ostringstream out;
  out << "# n=" << db.universe_size() << " D=" << db.count() << "\n";
  for (const auto &t : db.transactions()) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i > 0) out << ' ';
      out << t[i];
    }
    out << '\n';
  }
  atomic_write(path, out.str());
}

namespace {

bool parse_u64(const std::string &token, std::uint64_t &value) {
  if (token.empty()) return false;
  value = 0;
  for (char c : token) {
    if (c < '0' || c > '9') return false;
    value = value * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return true;
}

}  // namespace

TransactionDB read_db(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  std::uint64_t n = 0, d = 0;
  if (std::sscanf(line.c_str(), "# n=%lu D=%lu", &n, &d) != 2)
    throw ParseError(1, "header must be '# n=<universe> D=<count>'");

  std::vector<Transaction> transactions;
  transactions.reserve(d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    Transaction t;
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
      std::uint64_t id = 0;
      if (!parse_u64(token, id)) throw ParseError(line_no, "non-numeric token '" + token + "'");
      if (id >= n) throw ParseError(line_no, "item id " + token + " outside the universe");
      if (!t.empty()) {
        if (t.back() == id) throw ParseError(line_no, "duplicate item " + token);
        if (t.back() > id) throw ParseError(line_no, "items not in ascending order");
      }
      t.push_back(static_cast<Item>(id));
    }
    transactions.push_back(std::move(t));
  }
  if (transactions.size() != d)
    throw ParseError(line_no, "expected " + std::to_string(d) + " transactions, found " +
                                  std::to_string(transactions.size()));
  return TransactionDB(std::move(transactions), static_cast<std::uint32_t>(n));
}

void write_manifest(const PartitionManifest &m, const std::filesystem::path &path) {
  nlohmann::json j;
  j["source"] = m.source;
  j["parts"] = nlohmann::json::array();
  for (const auto &[part_path, count] : m.parts)
    j["parts"].push_back({{"path", part_path}, {"count", count}});
  j["seed"] = m.seed;
  j["ratios"] = m.ratios;
  atomic_write(path, j.dump(2) + "\n");
}

PartitionManifest read_manifest(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  PartitionManifest m;
  m.source = j.at("source").get<std::string>();
  for (const auto &p : j.at("parts"))
    m.parts.emplace_back(p.at("path").get<std::string>(), p.at("count").get<std::uint64_t>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.ratios = j.at("ratios").get<std::vector<double>>();
  return m;
}

}  // namespace itemgrid::dataio

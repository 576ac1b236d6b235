#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "itemgrid/dataio.hpp"
#include "itemgrid/protocols.hpp"
#include "itemgrid/simnet.hpp"
#include "testutil.hpp"

using namespace igtest;
namespace sim = itemgrid::simnet;

namespace {

// The toy db split as {t1,t2} / {t3,t4,t5}.
std::vector<TransactionDB> toy_split() {
  return {TransactionDB({{1, 2, 3}, {1, 2}}, 4),
          TransactionDB({{1, 3}, {2, 3}, {1, 2, 3}}, 4)};
}

std::set<Itemset> centralized_sets(const std::vector<TransactionDB> &parts, double s,
                                   std::uint32_t k) {
  const sim::RunTrace trace = sim::run(sim::Protocol::centralized, parts, SupportThreshold(s), k);
  return itemsets_of(trace.frequent);
}

void check_meter_consistency(const sim::RunTrace &trace) {
  // itemsets booked per pass equal the request payload units of that pass
  for (int pass = 1; pass <= trace.passes; ++pass) {
    std::uint64_t booked = 0;
    for (std::uint64_t u : trace.pass_sent_units[pass - 1]) booked += u;
    std::uint64_t from_rows = 0;
    for (const auto &row : trace.traffic) {
      if (row.pass == pass && (row.kind == sim::MsgKind::candidate_set ||
                               row.kind == sim::MsgKind::count_request))
        from_rows += row.itemset_units;
    }
    CHECK(booked == from_rows);
  }
}

}  // namespace

TEST_CASE("protocol names round trip") {
  using sim::Protocol;
  for (Protocol p : {Protocol::centralized, Protocol::fdm, Protocol::gfm})
    CHECK(sim::protocol_from(sim::name(p)) == p);
  CHECK_THROWS_AS(sim::protocol_from("bogus"), InvalidInput);
}

TEST_CASE("single-node clusters exchange nothing and match centralized mining") {
  const std::vector<TransactionDB> single{toy_db()};
  const auto expect = centralized_sets(single, 0.6, 3);
  for (sim::Protocol p : {sim::Protocol::fdm, sim::Protocol::gfm}) {
    const sim::RunTrace trace = sim::run(p, single, SupportThreshold(0.6), 3);
    CHECK(trace.total_messages() == 0);
    CHECK(itemsets_of(trace.frequent) == expect);
  }
}

TEST_CASE("toy split at 0.6: both protocols find the centralized result") {
  const auto parts = toy_split();
  const auto expect = std::set<Itemset>{iset({1}),    iset({2}),    iset({3}),
                                        iset({1, 2}), iset({1, 3}), iset({2, 3})};
  CHECK(centralized_sets(parts, 0.6, 3) == expect);

  const sim::RunTrace fdm = sim::run(sim::Protocol::fdm, parts, SupportThreshold(0.6), 3);
  CHECK(itemsets_of(fdm.frequent) == expect);
  CHECK(fdm.passes == 3);  // levels 1..3 all have candidate pools
  for (const auto &entry : fdm.frequent) {
    CHECK(entry.exact);
    CHECK(entry.count == support(toy_db(), entry.itemset).count);
  }

  const sim::RunTrace gfm = sim::run(sim::Protocol::gfm, parts, SupportThreshold(0.6), 3);
  CHECK(itemsets_of(gfm.frequent) == expect);
  CHECK(gfm.passes == 1);  // every locally maximal set passes the global test
  for (const auto &entry : gfm.frequent) {
    const std::uint64_t truth = support(toy_db(), entry.itemset).count;
    if (entry.exact)
      CHECK(entry.count == truth);
    else
      CHECK(entry.count <= truth);  // reported bounds stay sound
  }

  check_meter_consistency(fdm);
  check_meter_consistency(gfm);
}

TEST_CASE("toy split at 0.8: failing pairs are refined into singles") {
  const auto parts = toy_split();
  const auto expect = std::set<Itemset>{iset({1}), iset({2}), iset({3})};
  CHECK(centralized_sets(parts, 0.8, 3) == expect);

  const sim::RunTrace gfm = sim::run(sim::Protocol::gfm, parts, SupportThreshold(0.8), 3);
  CHECK(itemsets_of(gfm.frequent) == expect);
  CHECK(gfm.passes == 2);

  const sim::RunTrace fdm = sim::run(sim::Protocol::fdm, parts, SupportThreshold(0.8), 3);
  CHECK(itemsets_of(fdm.frequent) == expect);
  CHECK(fdm.passes == 2);  // level-3 pool is empty once no pair survives
}

TEST_CASE("local phase payload is the locally maximal frequent set") {
  const TransactionDB part({{1, 2, 3}, {1, 2}}, 4);
  const MiningResult local = mine_apriori(part, SupportThreshold(0.6), 3);
  const auto payload = maximal(local.levels);
  REQUIRE(payload.size() == 1);
  CHECK(payload[0].itemset == iset({1, 2}));
  CHECK(payload[0].count == 2);
}

TEST_CASE("subset bounds resolve itemsets without a second request") {
  // Node 0 holds 3 x {0,1} + 3 x {0}; node 1 holds 4 x {0,2}. At s=0.5 the
  // global threshold is 5. Node 0's maximal set {0,1} fails globally
  // (3 + 0 = 3), but the subset {0} is provable on the spot: its exact local
  // count (6) alone beats the threshold, so it must not be re-sent. {1}
  // stays unprovable and goes into pass 2.
  const std::vector<TransactionDB> parts{
      TransactionDB({{0, 1}, {0, 1}, {0, 1}, {0}, {0}, {0}}, 3),
      TransactionDB({{0, 2}, {0, 2}, {0, 2}, {0, 2}}, 3)};
  const sim::RunTrace gfm = sim::run(sim::Protocol::gfm, parts, SupportThreshold(0.5), 2);

  REQUIRE(gfm.frequent.size() == 1);
  CHECK(gfm.frequent[0].itemset == iset({0}));
  CHECK(gfm.frequent[0].count == 10);  // node 1 counted it exactly in pass 2
  CHECK(gfm.passes == 2);
  CHECK(gfm.node_levels[0][0].resent == 1);  // only {1}; {0} was bound-admitted
  CHECK(gfm.node_levels[1][0].resent == 2);  // node 1 re-sends both {0} and {2}
  CHECK(itemsets_of(gfm.frequent) == centralized_sets(parts, 0.5, 2));
}

TEST_CASE("nothing locally frequent anywhere ends with zero passes") {
  const std::vector<TransactionDB> parts{TransactionDB({{0}, {1}}, 2),
                                         TransactionDB({{0}, {1}}, 2)};
  const sim::RunTrace gfm = sim::run(sim::Protocol::gfm, parts, SupportThreshold(1.0), 2);
  CHECK(gfm.frequent.empty());
  CHECK(gfm.passes == 0);
  CHECK(gfm.total_messages() == 0);

  // the level-wise scheme still evaluates level 1's candidate pool
  const sim::RunTrace fdm = sim::run(sim::Protocol::fdm, parts, SupportThreshold(1.0), 2);
  CHECK(fdm.frequent.empty());
  CHECK(fdm.passes == 1);
  CHECK(fdm.total_messages() == 0);
}

TEST_CASE("a node with an empty partition only answers requests") {
  const std::vector<TransactionDB> parts{toy_db(), TransactionDB({}, 4)};
  const auto expect = centralized_sets(parts, 0.6, 3);
  for (sim::Protocol p : {sim::Protocol::fdm, sim::Protocol::gfm}) {
    const sim::RunTrace trace = sim::run(p, parts, SupportThreshold(0.6), 3);
    CHECK(itemsets_of(trace.frequent) == expect);
  }
}

TEST_CASE("mismatched universes are rejected") {
  const std::vector<TransactionDB> parts{TransactionDB({{1}}, 4), TransactionDB({{1}}, 5)};
  CHECK_THROWS_AS(sim::run(sim::Protocol::fdm, parts, SupportThreshold(0.5), 2), InvalidInput);
}

TEST_CASE("replay and trace diffing") {
  const sim::RunTrace trace =
      sim::run(sim::Protocol::gfm, toy_split(), SupportThreshold(0.6), 3);
  const sim::ReplayResult ok = sim::replay_check(trace);
  CHECK(ok.ok);
  CHECK(ok.divergence.empty());

  sim::RunTrace mutated = trace;
  mutated.traffic[0].itemset_units += 1;
  const sim::ReplayResult bad = sim::diff_traces(trace, mutated);
  CHECK_FALSE(bad.ok);
  CHECK(bad.divergence.find("divergence") != std::string::npos);

  sim::RunTrace other_config = trace;
  other_config.config.support = 0.8;
  CHECK_THROWS_AS(sim::diff_traces(trace, other_config), InvalidInput);

  // same sizes but different shuffles count as different configurations
  const TransactionDB db = toy_db();
  itemgrid::dataio::PartitionSpec spec;
  spec.num_nodes = 2;
  spec.ratios = {1, 1};
  spec.seed = 1;
  const sim::RunTrace seeded_a = sim::run(sim::Protocol::gfm, itemgrid::dataio::partition(db, spec),
                                          SupportThreshold(0.6), 3);
  spec.seed = 2;
  const sim::RunTrace seeded_b = sim::run(sim::Protocol::gfm, itemgrid::dataio::partition(db, spec),
                                          SupportThreshold(0.6), 3);
  CHECK_THROWS_AS(sim::diff_traces(seeded_a, seeded_b), InvalidInput);
}

TEST_CASE("level-wise candidates stay within the local-generation candidates") {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 8; ++round) {
    const TransactionDB db = random_db(rng, 10, 80, 0.35);
    itemgrid::dataio::PartitionSpec spec;
    spec.num_nodes = 3;
    spec.ratios = {1, 2, 3};
    spec.seed = rng();
    const auto parts = itemgrid::dataio::partition(db, spec);
    const double s = 0.2 + 0.1 * static_cast<double>(rng() % 4);
    const std::uint32_t k = 4;

    const sim::RunTrace fdm = sim::run(sim::Protocol::fdm, parts, SupportThreshold(s), k);
    const sim::RunTrace gfm = sim::run(sim::Protocol::gfm, parts, SupportThreshold(s), k);

    // rebuild the global levels from the final result
    std::vector<std::vector<Itemset>> global_levels;
    for (const auto &e : fdm.frequent) {
      if (global_levels.size() < e.itemset.size()) global_levels.resize(e.itemset.size());
      global_levels[e.itemset.size() - 1].push_back(e.itemset);
    }

    for (std::size_t node = 0; node < parts.size(); ++node) {
      const SupportThreshold threshold(s);
      const std::uint64_t local_need = threshold.absolute(parts[node]);
      const MiningResult local = mine_apriori(parts[node], threshold, k);
      for (std::size_t level = 2; level <= global_levels.size() + 1; ++level) {
        // level-wise candidates: generated from the global previous level,
        // kept only if locally frequent
        if (level - 2 >= global_levels.size()) break;
        std::vector<Itemset> pool = apriori_gen(global_levels[level - 2]);
        std::vector<Itemset> gc;
        for (const auto &x : pool)
          if (support(parts[node], x).count >= local_need) gc.push_back(x);
        // local-generation candidates at the same level
        std::vector<Itemset> lc;
        if (level - 1 <= local.levels.size() && !local.levels[level - 2].entries.empty()) {
          std::vector<Itemset> prev;
          for (const auto &e : local.levels[level - 2].entries) prev.push_back(e.itemset);
          lc = apriori_gen(prev);
        }
        for (const auto &x : gc)
          CHECK(std::binary_search(lc.begin(), lc.end(), x));
      }

      // per-level successes: global successes never exceed local successes
      const auto &fdm_levels = fdm.node_levels[node];
      const auto &gfm_levels = gfm.node_levels[node];
      for (std::size_t l = 0; l < fdm_levels.size() && l < gfm_levels.size(); ++l)
        CHECK(fdm_levels[l].successes <= gfm_levels[l].successes);
    }
  }
}

TEST_CASE("randomized protocol equivalence with pass-count bounds") {
  std::mt19937_64 rng(99);
  for (int round = 0; round < 15; ++round) {
    const std::uint32_t n = 5 + static_cast<std::uint32_t>(rng() % 10);
    const TransactionDB db = random_db(rng, n, 20 + rng() % 80, 0.25 + 0.35 * u01(rng));
    itemgrid::dataio::PartitionSpec spec;
    spec.num_nodes = 1 + static_cast<std::uint32_t>(rng() % 4);
    spec.ratios =
        itemgrid::dataio::PartitionSpec::weights_from_ratio(spec.num_nodes, 1, 1 + rng() % 10);
    spec.seed = rng();
    const auto parts = itemgrid::dataio::partition(db, spec);
    const double s = 0.1 + 0.1 * static_cast<double>(rng() % 8);
    const std::uint32_t k = 2 + static_cast<std::uint32_t>(rng() % 3);

    const auto expect = centralized_sets(parts, s, k);
    const sim::RunTrace fdm = sim::run(sim::Protocol::fdm, parts, SupportThreshold(s), k);
    const sim::RunTrace gfm = sim::run(sim::Protocol::gfm, parts, SupportThreshold(s), k);
    CHECK(itemsets_of(fdm.frequent) == expect);
    CHECK(itemsets_of(gfm.frequent) == expect);
    CHECK(fdm.passes == static_cast<int>(fdm.node_levels[0].size()));
    CHECK(gfm.passes <= static_cast<int>(k));
    check_meter_consistency(fdm);
    check_meter_consistency(gfm);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "itemgrid/costmodel.hpp"
#include "itemgrid/dataio.hpp"
#include "testutil.hpp"

using namespace igtest;
namespace cm = itemgrid::costmodel;
namespace sim = itemgrid::simnet;

namespace {

std::vector<TransactionDB> toy_split() {
  return {TransactionDB({{1, 2, 3}, {1, 2}}, 4),
          TransactionDB({{1, 3}, {2, 3}, {1, 2, 3}}, 4)};
}

std::pair<sim::RunTrace, sim::RunTrace> toy_traces(double s = 0.6, std::uint32_t k = 3) {
  auto parts = std::make_shared<const std::vector<TransactionDB>>(toy_split());
  return {sim::run(sim::Protocol::fdm, parts, SupportThreshold(s), k),
          sim::run(sim::Protocol::gfm, parts, SupportThreshold(s), k)};
}

// Minimal synthetic trace pair for factor tests.
std::pair<sim::RunTrace, sim::RunTrace> synthetic_traces(
    const std::vector<std::uint64_t> &fdm_successes,
    const std::vector<std::uint64_t> &fdm_candidates,
    const std::vector<std::uint64_t> &gfm_successes) {
  sim::RunTrace fdm, gfm;
  fdm.config.protocol = sim::Protocol::fdm;
  gfm.config.protocol = sim::Protocol::gfm;
  for (auto *cfg : {&fdm.config, &gfm.config}) {
    cfg->support = 0.5;
    cfg->max_level = static_cast<std::uint32_t>(fdm_successes.size());
    cfg->nodes = 1;
    cfg->universe = 10;
    cfg->partition_counts = {100};
  }
  fdm.node_levels.resize(1);
  gfm.node_levels.resize(1);
  for (std::size_t l = 0; l < fdm_successes.size(); ++l) {
    sim::NodeLevelStats fs;
    fs.successes = fdm_successes[l];
    fs.candidates = fdm_candidates[l];
    fdm.node_levels[0].push_back(fs);
    sim::NodeLevelStats gs;
    gs.successes = gfm_successes[l];
    gs.candidates = gfm_successes[l];
    gfm.node_levels[0].push_back(gs);
  }
  gfm.passes = 1;
  fdm.passes = static_cast<int>(fdm_successes.size());
  return {fdm, gfm};
}

}  // namespace

TEST_CASE("level-wise communication cost, hand-computed") {
  cm::LogPParams p{2, 1, 1, 2};  // L=2, o=1, g=1, P=2
  CHECK(cm::c_fdm(p, {{3.0}}, 1) == doctest::Approx(32.0));  // 2*2*(3 + 4 + 1)

  cm::LogPParams zero{0, 0, 0, 2};
  CHECK(cm::c_fdm(zero, {{3.0}, {17.0}}, 2) == doctest::Approx(0.0));

  cm::LogPParams solo{2, 1, 1, 1};
  CHECK(cm::c_fdm(solo, {{}}, 1) == doctest::Approx(0.0));  // empty inner sum

  CHECK_THROWS_AS(cm::c_fdm(p, {{3.0}}, 2), InvalidInput);       // row count != k
  CHECK_THROWS_AS(cm::c_fdm(p, {{}}, 1), InvalidInput);          // row shorter than P-1
}

TEST_CASE("two-phase communication cost, hand-computed") {
  cm::LogPParams p{2, 1, 1, 2};
  CHECK(cm::c_gfm(p, {2.0}, {}, 3, 3) == doctest::Approx(28.0));  // 2*2*(2 + 4 + 1)

  // zero payloads, no refinement rounds: the one mandatory pass remains
  CHECK(cm::c_gfm(p, {0.0}, {}, 3, 3) ==
        doctest::Approx(2.0 * 2.0 * 1.0 * (4.0 + 1.0)));  // 2P(P-1)(L^2 + o)

  CHECK_THROWS_AS(cm::c_gfm(p, {2.0}, {}, 3, 2), InvalidInput);  // needs k - x rows
  CHECK_THROWS_AS(cm::c_gfm(p, {2.0}, {{1.0}}, 3, 4), InvalidInput);
}

TEST_CASE("equal payloads collapse the two cost forms into each other") {
  cm::LogPParams p{3, 2, 5, 4};
  const std::vector<std::vector<double>> gc{{4, 7, 1}, {9, 2, 5}, {3, 3, 3}};
  const std::uint32_t k = 3;
  // first pass carries level k, refinements carry k-1 down to 1
  const double fdm = cm::c_fdm(p, gc, k);
  const double gfm = cm::c_gfm(p, gc[2], {gc[1], gc[0]}, k, 1);
  CHECK(fdm == doctest::Approx(gfm));
}

TEST_CASE("work bound, hand-computed") {
  const std::vector<double> items{3, 3, 3};
  const std::vector<double> successes{3, 3, 1};
  CHECK(cm::work_bound(items, successes) == doctest::Approx(3 * 3 + 3 + 1.0 / 3.0));

  CHECK(cm::work_bound(items, std::vector<double>{0, 0, 0}) == doctest::Approx(0.0));

  const std::vector<double> ones{1, 1, 1};
  CHECK(cm::work_bound_factored(items, successes, ones, ones) ==
        doctest::Approx(cm::work_bound(items, successes)));

  CHECK_THROWS_AS(cm::work_bound(items, std::vector<double>{1}), InvalidInput);
}

TEST_CASE("costs are monotone in every network parameter") {
  const std::vector<std::vector<double>> gc{{4, 7, 1}, {9, 2, 5}};
  double last = -1;
  for (double g = 0; g <= 4; g += 1) {
    const double c = cm::c_fdm({1, 1, g, 4}, gc, 2);
    CHECK(c >= last);
    last = c;
  }
  last = -1;
  for (double o = 0; o <= 4; o += 1) {
    const double c = cm::c_fdm({1, o, 1, 4}, gc, 2);
    CHECK(c >= last);
    last = c;
  }
  last = -1;
  for (double latency = 0; latency <= 4; latency += 1) {
    const double c = cm::c_gfm({latency, 1, 1, 4}, gc[0], {gc[1]}, 2, 1);
    CHECK(c >= last);
    last = c;
  }
}

TEST_CASE("factor estimation on synthetic traces") {
  SUBCASE("identical per-level successes give unit factors") {
    auto [fdm, gfm] = synthetic_traces({10, 9, 8}, {10, 10, 10}, {10, 9, 8});
    const cm::FactorReport report = cm::estimate_factors(fdm, gfm);
    for (double v : report.p_success) CHECK(v == doctest::Approx(1.0));
  }
  SUBCASE("success rate collapse pins the critical level") {
    auto [fdm, gfm] = synthetic_traces({10, 9, 8, 0}, {10, 10, 10, 10}, {10, 9, 8, 0});
    const cm::FactorReport report = cm::estimate_factors(fdm, gfm);
    CHECK(report.critical_level == 4);
  }
  SUBCASE("no collapse leaves the critical level at the last level") {
    auto [fdm, gfm] = synthetic_traces({10, 9, 8}, {10, 10, 10}, {10, 9, 8});
    CHECK(cm::estimate_factors(fdm, gfm).critical_level == 3);
  }
}

TEST_CASE("factor estimation on real toy traces") {
  auto [fdm, gfm] = toy_traces();
  const cm::FactorReport report = cm::estimate_factors(fdm, gfm);
  REQUIRE_FALSE(report.p_success.empty());
  for (double v : report.p_success) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (double v : report.p_items) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // one global pass resolved everything, so x stays at k
  CHECK(report.lowest_pass_level == 3);
  CHECK(static_cast<int>(fdm.config.max_level - report.lowest_pass_level) == gfm.passes - 1);
}

TEST_CASE("overall cost on the toy split") {
  auto [fdm, gfm] = toy_traces();
  const cm::LogPParams p{1, 1, 1, 2};
  const cm::OverallCost cost = cm::overall_cost(fdm, gfm, p);
  CHECK(cost.gfm_total <= cost.fdm_total);
  CHECK(cost.comm_fdm > 0);
  CHECK(cost.comm_gfm > 0);

  // doubling the gap moves only the communication terms
  cm::LogPParams doubled = p;
  doubled.gap = 2;
  const cm::OverallCost cost2 = cm::overall_cost(fdm, gfm, doubled);
  const double comm_delta = (cost2.comm_fdm - cost.comm_fdm);
  CHECK(cost2.fdm_total - cost.fdm_total == doctest::Approx(comm_delta));
}

TEST_CASE("single-node overall costs reduce to the work bound") {
  auto parts = std::make_shared<const std::vector<TransactionDB>>(
      std::vector<TransactionDB>{toy_db()});
  const sim::RunTrace fdm = sim::run(sim::Protocol::fdm, parts, SupportThreshold(0.6), 3);
  const sim::RunTrace gfm = sim::run(sim::Protocol::gfm, parts, SupportThreshold(0.6), 3);
  const cm::OverallCost cost = cm::overall_cost(fdm, gfm, {0, 0, 0, 1});
  CHECK(cost.comm_fdm == doctest::Approx(0.0));
  CHECK(cost.comm_gfm == doctest::Approx(0.0));
  CHECK(cost.fdm_total == doctest::Approx(cost.gfm_total));

  // the shared value is exactly the plain work bound over the local stats
  const auto &levels = gfm.node_levels[0];
  std::vector<double> items{static_cast<double>(levels[0].successes)};
  std::vector<double> successes{static_cast<double>(levels[0].successes)};
  for (const auto &s : levels) {
    items.push_back(s.items_in_frequent);
    successes.push_back(s.successes);
  }
  CHECK(cost.gfm_total == doctest::Approx(cm::work_bound(items, successes)));
}

TEST_CASE("mismatched traces are rejected") {
  auto [fdm, gfm] = toy_traces(0.6);
  auto [fdm8, gfm8] = toy_traces(0.8);
  CHECK_THROWS_AS(cm::overall_cost(fdm, gfm8, {1, 1, 1, 2}), InvalidInput);
  CHECK_THROWS_AS(cm::estimate_factors(gfm, fdm), InvalidInput);  // wrong order
}

TEST_CASE("logp validation") {
  CHECK_THROWS_AS(cm::c_fdm({-1, 0, 0, 2}, {{1.0}}, 1), InvalidInput);
  CHECK_THROWS_AS(cm::c_fdm({0, 0, 0, 0}, {{1.0}}, 1), InvalidInput);
}

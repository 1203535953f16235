#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "rwtrace/error.hpp"
#include "rwtrace/splitting.hpp"

using namespace rwtrace;
using namespace rwtrace::testing;

namespace {

// Payment p receives `total` and splits it at `share` (affiliate first), with `fee`
// deducted from output `fee_side`.
Chain planted_split(Satoshi total, double share, Satoshi fee, int fee_side, bool swap) {
  ChainSpec spec;
  spec.add(1, {external("victim", total + 1000)}, {{"p", total}});
  Satoshi a = std::llround(share * static_cast<double>(total));
  Satoshi b = total - a;
  (fee_side == 0 ? a : b) -= fee;
  std::vector<RawOutput> outs{{"aff", a}, {"op", b}};
  if (swap) std::swap(outs[0], outs[1]);
  spec.add(2, {spend(1, 0)}, outs);
  return spec.build();
}

}  // namespace

TEST_SUITE("splitting") {

TEST_CASE("grid matching") {
  CHECK(match_split_grid(0.80) == 80);
  CHECK(match_split_grid(0.8024) == 80);
  CHECK_FALSE(match_split_grid(0.8026));
  CHECK(match_split_grid(0.7976) == 80);
  CHECK(match_split_grid(0.50) == 50);
  CHECK(match_split_grid(0.95) == 95);
  CHECK_FALSE(match_split_grid(0.49));
  CHECK_FALSE(match_split_grid(0.96));
  CHECK_FALSE(match_split_grid(0.855));
  SplitOptions wide;
  wide.tolerance = 0.006;
  CHECK(match_split_grid(0.855, wide) == 85);
}

TEST_CASE("planted grid splits with fee noise are detected at their grid value") {
  std::mt19937_64 rng(42);
  for (int g = 50; g <= 95; ++g) {
    for (int trial = 0; trial < 20; ++trial) {
      const Satoshi total = 1'000'000 + static_cast<Satoshi>(rng() % 500'000'000);
      const double fee_frac = std::uniform_real_distribution<double>(0.0, 0.001)(rng);
      const Satoshi fee = std::llround(fee_frac * static_cast<double>(total));
      const int side = static_cast<int>(rng() % 2);
      const Chain chain = planted_split(total, g / 100.0, fee, side, rng() % 2 == 0);
      const auto f = detect_split(*chain.find_address("p"), chain);
      REQUIRE(f);
      CHECK(f->grid_pct == g);
      CHECK(f->hop == 1);
      CHECK(f->affiliate_share + f->operator_share == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("irregular ratios are rejected") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int g = 50 + static_cast<int>(rng() % 45);
    const double off = std::uniform_real_distribution<double>(0.004, 0.006)(rng);
    const Chain chain = planted_split(100'000'000, g / 100.0 + off, 0, 0, false);
    CHECK_FALSE(detect_split(*chain.find_address("p"), chain));
  }
}

TEST_CASE("split found downstream of the majority output") {
  ChainSpec spec;
  spec.add(1, {external("v", 2'000'000)}, {{"p", 1'000'000}});
  spec.add(2, {spend(1, 0)}, {{"hop", 990'000}, {"dust", 10'000}});  // 99% is off-grid
  spec.add(3, {spend(2, 0)}, {{"x", 700'000}, {"y", 280'000}, {"z", 10'000}});
  spec.add(4, {spend(3, 0)}, {{"aff", 525'000}, {"op", 175'000}});  // 75%
  const Chain chain = spec.build();
  SplitOptions o;
  o.max_hops = 3;
  const auto f = detect_split(*chain.find_address("p"), chain, o);
  REQUIRE(f);
  CHECK(f->hop == 3);
  CHECK(f->grid_pct == 75);
  o.max_hops = 2;
  CHECK_FALSE(detect_split(*chain.find_address("p"), chain, o));
  CHECK_FALSE(detect_split(*chain.find_address("aff"), chain, o));
  CHECK_THROWS_AS(detect_split(kNoAddress, chain, o), NotFound);
}

TEST_CASE("wider tolerance never loses a detection") {
  const std::vector<double> eps{0.001, 0.0025, 0.005};
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 400; ++trial) {
    ChainSpec spec;
    spec.add(1, {external("v", 10'000'000)}, {{"p", 10'000'000}});
    // Two chained two-output transactions with random ratios.
    const double r1 = std::uniform_real_distribution<double>(0.5, 0.97)(rng);
    const Satoshi a1 = std::llround(r1 * 10'000'000);
    spec.add(2, {spend(1, 0)}, {{"m", a1}, {"n", 10'000'000 - a1}});
    const double r2 = std::uniform_real_distribution<double>(0.5, 0.97)(rng);
    const Satoshi a2 = std::llround(r2 * static_cast<double>(a1));
    spec.add(3, {spend(2, 0)}, {{"q", a2}, {"r", a1 - a2}});
    const Chain chain = spec.build();
    bool prev = false;
    for (double e : eps) {
      SplitOptions o;
      o.tolerance = e;
      const bool found = detect_split(*chain.find_address("p"), chain, o).has_value();
      CHECK((!prev || found));
      prev = found;
    }
  }
}

TEST_CASE("split rates by family") {
  std::vector<PaymentRecord> ps(4);
  ps[0].address = "a";
  ps[0].family = "X";
  ps[1].address = "b";
  ps[1].family = "X";
  ps[2].address = "c";
  ps[3].address = "d";
  ps[3].family = "Y";
  SplitMap splits;
  splits["a"] = SplitFinding{0, 0, 1, 0.8, 0.2, 80};
  splits["c"] = SplitFinding{0, 0, 1, 0.7, 0.3, 70};
  const auto rates = split_rate_by_family(ps, splits);
  REQUIRE(rates.size() == 3);
  std::map<std::string, FamilySplitRate> by;
  for (const auto& r : rates) by[r.family] = r;
  CHECK(by["X"].payments == 2);
  CHECK(by["X"].splitting == 1);
  CHECK(by["X"].fraction == doctest::Approx(0.5));
  CHECK(by["X"].affiliate_shares->median == doctest::Approx(0.8));
  CHECK(by["unlabeled"].splitting == 1);
  CHECK(by["Y"].fraction == 0.0);
  CHECK_FALSE(by["Y"].affiliate_shares);
}

TEST_CASE("quartiles") {
  const auto d = describe({4, 1, 3, 2, 5});
  CHECK(d.min == 1);
  CHECK(d.q1 == 2);
  CHECK(d.median == 3);
  CHECK(d.q3 == 4);
  CHECK(d.max == 5);
  CHECK(describe({1, 2}).median == doctest::Approx(1.5));
  CHECK_THROWS_AS(describe({}), Error);
}

}

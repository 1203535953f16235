#include <doctest.h>

#include "fixtures.hpp"
#include "rwtrace/clustering.hpp"
#include "rwtrace/detectors.hpp"
#include "rwtrace/error.hpp"

using namespace rwtrace;
using namespace rwtrace::testing;

namespace {

const std::string kA{kClusterAAnchor};
const std::string kB{kClusterBAnchor};
constexpr Satoshi kBtc = kSatPerBtc;

struct World {
  ChainSpec spec;
  LabelSet labels;
  SeedSet seeds;
  std::uint64_t next = 100;

  World() {
    spec.add(1, {external(kA, 1000), external("a-member", 1000)}, {{"a-sink", 1500}});
    spec.add(2, {external(kB, 1000)}, {{"b-sink", 900}});
    labels.add({"pool", "Conti ops", Category::ransomware, "Conti", "v"});
    labels.add({"treasury", "Maze treasury", Category::ransomware, "Maze", "v"});
    labels.add({"exch", "Gemini", Category::exchange_low_risk, "", "v"});
    labels.add({"deposit", "Gemini", Category::exchange_low_risk, "", "v"});
  }

  // `to` receives the given amounts from `from` in separate transactions; returns the tx ids.
  std::vector<std::uint64_t> fund(const std::string& from, const std::string& to, std::vector<Satoshi> parts) {
    std::vector<std::uint64_t> ids;
    for (Satoshi v : parts) {
      spec.add(next, {external(from, v + 1000)}, {{to, v}});
      ids.push_back(next++);
    }
    return ids;
  }

  std::uint64_t pay(const std::vector<std::uint64_t>& coins, std::vector<RawOutput> outs) {
    std::vector<RawInput> ins;
    for (auto c : coins) ins.push_back(spend(c, 0));
    spec.add(next, std::move(ins), std::move(outs));
    return next++;
  }

  // Origin-style payment: anchor-funded, then forwarded to the labeled pool.
  void labeled_payment(const std::string& addr, std::vector<Satoshi> parts, const std::string& from = kA) {
    Satoshi total = 0;
    for (auto p : parts) total += p;
    pay(fund(from, addr, parts), {{"pool", total - 500}});
  }
};

struct Built {
  Chain chain;
  ClusterAssignment clusters;
  explicit Built(const World& w) : chain(w.spec.build()), clusters(cluster_multi_input(chain)) {}
};

std::set<std::string> addresses(const std::vector<PaymentRecord>& rs) {
  std::set<std::string> s;
  for (const auto& r : rs) s.insert(r.address);
  return s;
}

}  // namespace

TEST_SUITE("detectors") {

TEST_CASE("config validation") {
  DetectorConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.min_receipt_sat() == kBtc);
  c.hop_bound = 4;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.low_risk_origin_share = 0.4;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.max_incoming_txs = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.nontrivial_share = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.split.grid_max_pct = 99;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("missing anchors are reported") {
  ChainSpec spec;
  spec.add(1, {external("x", 10)}, {{"y", 10}});
  const Chain chain = spec.build();
  const ClusterAssignment cl = cluster_multi_input(chain);
  LabelSet labels;
  SeedSet seeds;
  CHECK_THROWS_AS(DetectionContext(chain, cl, labels, seeds), NotFound);
}

TEST_CASE("origin rule boundaries") {
  World w;
  w.labeled_payment("exact-1btc", {kBtc});
  w.labeled_payment("below-1btc", {kBtc - 1});
  w.labeled_payment("five-txs", {kBtc / 5, kBtc / 5, kBtc / 5, kBtc / 5, kBtc / 5});
  w.labeled_payment("six-txs", {kBtc / 5, kBtc / 5, kBtc / 5, kBtc / 5, kBtc / 5, kBtc / 5});
  w.labeled_payment("from-b", {2 * kBtc}, kB);
  w.labeled_payment("not-anchor", {2 * kBtc}, "someone");
  Built b(w);
  const DetectionContext ctx(b.chain, b.clusters, w.labels, w.seeds);
  const DetectorConfig cfg;
  auto eval = [&](const char* a) { return evaluate_origin(*b.chain.find_address(a), ctx, cfg); };

  CHECK(eval("exact-1btc").c2);
  CHECK_FALSE(eval("below-1btc").c2);
  CHECK(eval("five-txs").c3);
  CHECK_FALSE(eval("six-txs").c3);
  CHECK(eval("from-b").c1);
  CHECK_FALSE(eval("not-anchor").c1);
  CHECK(eval("exact-1btc").c4a);

  const auto found = addresses(classify_origin_payments(cfg, ctx));
  CHECK(found == std::set<std::string>{"exact-1btc", "five-txs", "from-b"});

  DetectorConfig loose;
  loose.min_receipt_btc = 0.5;
  loose.max_incoming_txs = 6;
  CHECK(addresses(classify_origin_payments(loose, ctx)) ==
        std::set<std::string>{"below-1btc", "exact-1btc", "five-txs", "from-b", "six-txs"});
}

TEST_CASE("origin link through a split into a pool fed by ransomware") {
  World w;
  w.fund("treasury", "op", {1'000'000});
  // Split 80/20 to an affiliate and the unlabeled operator pool.
  w.pay(w.fund(kA, "split-pay", {2 * kBtc}), {{"aff", 160'000'000}, {"op", 40'000'000 - 2000}});
  // Same link, no split.
  w.pay(w.fund(kA, "no-split", {2 * kBtc}), {{"op", 2 * kBtc - 2000}});
  // Split but no ransomware link (OTC-like).
  w.pay(w.fund(kA, "otc-split", {2 * kBtc}), {{"u1", 160'000'000}, {"u2", 40'000'000 - 2000}});
  // Straight to an exchange deposit.
  w.pay(w.fund(kA, "otc", {3 * kBtc}), {{"deposit", 3 * kBtc - 500}});
  Built b(w);
  const DetectionContext ctx(b.chain, b.clusters, w.labels, w.seeds);
  const DetectorConfig cfg;
  const auto t = evaluate_origin(*b.chain.find_address("split-pay"), ctx, cfg);
  CHECK(t.c4b);
  CHECK_FALSE(t.c4a);
  CHECK_FALSE(evaluate_origin(*b.chain.find_address("no-split"), ctx, cfg).c4b);
  CHECK_FALSE(evaluate_origin(*b.chain.find_address("otc-split"), ctx, cfg).c4b);
  CHECK(addresses(classify_origin_payments(cfg, ctx)) == std::set<std::string>{"split-pay"});
}

TEST_CASE("seeds found again are flagged") {
  World w;
  w.labeled_payment("seed", {2 * kBtc});
  w.labeled_payment("new", {2 * kBtc});
  w.seeds.records.push_back({"seed", "Conti", Provenance::ransomwhere});
  Built b(w);
  const DetectionContext ctx(b.chain, b.clusters, w.labels, w.seeds);
  const auto found = classify_origin_payments({}, ctx);
  REQUIRE(found.size() == 2);
  CHECK(found[0].address == "new");
  CHECK_FALSE(found[0].already_known);
  CHECK(found[1].already_known);
  CHECK(found[1].family == "Conti");
  CHECK(found[1].total_received == 2 * kBtc);
  CHECK(found[1].provenance == Provenance::orig_cluster);
}

TEST_CASE("source ranking") {
  World w;
  w.labeled_payment("s1", {kBtc});
  w.labeled_payment("s2", {kBtc}, "exch");
  w.labeled_payment("s3", {kBtc}, "exch");
  for (const char* s : {"s1", "s2", "s3", "absent"}) w.seeds.records.push_back({s, "", Provenance::ransomwhere});
  Built b(w);
  const DetectionContext ctx(b.chain, b.clusters, w.labels, w.seeds);
  const SourceRanking r = rank_source_clusters(w.seeds.records, ctx);
  CHECK(r.traced == 3);
  CHECK(r.skipped == std::vector<std::string>{"absent"});
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].entity == "Gemini");
  CHECK(r.rows[0].share == doctest::Approx(2.0 / 3));
  CHECK(r.rows[0].category == Category::exchange_low_risk);
  CHECK(r.rows[1].entity == "Cluster A");
  CHECK(r.rows[1].payments == doctest::Approx(1.0));
  CHECK_THROWS_AS(rank_source_clusters({}, ctx), Error);
}

TEST_CASE("expanded rule") {
  World w;
  // Known payment k sends 30% into an unlabeled pool q.
  w.pay(w.fund(kA, "k", {10 * kBtc}), {{"k-aff", 7 * kBtc}, {"q", 3 * kBtc - 1000}});
  // Exchange-funded payments splitting into q.
  w.pay(w.fund("exch", "y-good", {kBtc}), {{"y-aff", 80'000'000}, {"q", 20'000'000 - 500}});
  w.pay(w.fund("exch", "y-95", {kBtc}), {{"y95-aff", 95'000'000}, {"q", 5'000'000 - 500}});
  w.pay(w.fund("exch", "y-nosplit", {kBtc}), {{"q", kBtc - 500}});
  w.pay(w.fund("someone", "y-unknown-src", {kBtc}), {{"yu-aff", 80'000'000}, {"q", 20'000'000 - 500}});
  // Exactly 99% and 99% + 1 sat from the exchange, rest from an unlabeled source.
  w.spec.add(500, {external("exch", 99'000'000), dangling(900, 1'000'000)}, {{"y-99", kBtc}});
  w.pay({500}, {{"y99-aff", 80'000'000}, {"q", 20'000'000 - 500}});
  w.spec.add(501, {external("exch", 99'000'001), dangling(901, 1'000'000)}, {{"y-99plus", 100'000'001}});
  w.pay({501}, {{"y99p-aff", 80'000'000}, {"q", 20'000'001 - 500}});
  // A ransomware-labeled wallet feeding q is walked through but never reported.
  w.pay(w.fund("exch", "treasury", {kBtc}), {{"q", kBtc - 100}});
  Built b(w);
  const DetectionContext ctx(b.chain, b.clusters, w.labels, w.seeds);
  const DetectorConfig cfg;

  CHECK_THROWS_AS(classify_expanded(cfg, ctx, {}), Error);

  const std::vector<std::string> known{"k"};
  std::vector<AddressId> known_ids{*b.chain.find_address("k")};
  const auto pools = known_pools(known_ids, ctx, cfg);
  CHECK(pools.count(*b.chain.find_address("q")));

  auto eval = [&](const char* a) { return evaluate_expanded(*b.chain.find_address(a), pools, ctx, cfg); };
  const auto good = eval("y-good");
  CHECK(good.c1);
  CHECK(good.c2);
  CHECK(good.c3);
  CHECK_FALSE(eval("y-95").c1);
  CHECK_FALSE(eval("y-nosplit").c2);
  CHECK_FALSE(eval("y-unknown-src").c3);
  CHECK_FALSE(eval("y-99").c3);
  CHECK(eval("y-99plus").c3);
  CHECK(low_risk_origin_share(*b.chain.find_address("y-99"), ctx) == doctest::Approx(0.99));

  const auto found = addresses(classify_expanded(cfg, ctx, known));
  CHECK(found == std::set<std::string>{"y-99plus", "y-good"});
}

TEST_CASE("expanded threshold across several funding transactions") {
  World w;
  w.pay(w.fund(kA, "k", {10 * kBtc}), {{"k-aff", 7 * kBtc}, {"q", 3 * kBtc - 1000}});
  w.fund("exch", "multi", {99'000'000});
  w.fund("other", "multi", {1'000'000});
  w.fund("exch", "multi-plus", {99'000'100});
  w.fund("other", "multi-plus", {1'000'000});
  Built b(w);
  const DetectionContext ctx(b.chain, b.clusters, w.labels, w.seeds);
  const std::set<AddressId> none;
  CHECK_FALSE(evaluate_expanded(*b.chain.find_address("multi"), none, ctx, {}).c3);
  CHECK(evaluate_expanded(*b.chain.find_address("multi-plus"), none, ctx, {}).c3);
}

}

#include <benchmark/benchmark.h>

#include <vector>

#include "rwtrace/analytics.hpp"
#include "rwtrace/chain.hpp"
#include "rwtrace/clustering.hpp"
#include "rwtrace/detectors.hpp"
#include "rwtrace/flowgraph.hpp"
#include "rwtrace/splitting.hpp"
#include "rwtrace/synth.hpp"

using namespace rwtrace;

namespace {

struct Fixture {
  synth::Scenario scenario;
  Chain chain;
  ClusterAssignment clusters;

  static const Fixture& paper_shape() {
    static const Fixture f(synth::ScenarioConfig::paper_shape(7));
    return f;
  }

  explicit Fixture(const synth::ScenarioConfig& c)
      : scenario(synth::generate(c)), chain(Chain::build(scenario.transactions)), clusters(cluster_multi_input(chain)) {}
};

std::vector<AddressId> payment_ids(const Fixture& f) {
  std::vector<AddressId> ids;
  for (const auto& p : f.scenario.manifest.payments) ids.push_back(*f.chain.find_address(p.address));
  return ids;
}

void BM_ChainBuild(benchmark::State& state) {
  const auto s = synth::generate(synth::ScenarioConfig::retail_only(1, static_cast<std::size_t>(state.range(0)), 500));
  for (auto _ : state) benchmark::DoNotOptimize(Chain::build(s.transactions));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ChainBuild)->Arg(10'000)->Arg(50'000)->Unit(benchmark::kMillisecond);

void BM_ClusterMultiInput(benchmark::State& state) {
  const auto s = synth::generate(synth::ScenarioConfig::retail_only(2, static_cast<std::size_t>(state.range(0)), 500));
  const Chain chain = Chain::build(s.transactions);
  for (auto _ : state) benchmark::DoNotOptimize(cluster_multi_input(chain));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ClusterMultiInput)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_Exposure(benchmark::State& state) {
  const Fixture& f = Fixture::paper_shape();
  const auto ids = payment_ids(f);
  ExposureOptions o;
  o.hops = static_cast<int>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(exposure(ids[i++ % ids.size()], f.chain, o));
}
BENCHMARK(BM_Exposure)->DenseRange(1, 3);

void BM_DetectSplit(benchmark::State& state) {
  const Fixture& f = Fixture::paper_shape();
  const auto ids = payment_ids(f);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(detect_split(ids[i++ % ids.size()], f.chain));
}
BENCHMARK(BM_DetectSplit);

void BM_ClassifyOrigin(benchmark::State& state) {
  const Fixture& f = Fixture::paper_shape();
  const DetectionContext ctx(f.chain, f.clusters, f.scenario.labels, f.scenario.seeds);
  for (auto _ : state) benchmark::DoNotOptimize(classify_origin_payments({}, ctx));
}
BENCHMARK(BM_ClassifyOrigin)->Unit(benchmark::kMillisecond);

void BM_ClassifyExpanded(benchmark::State& state) {
  const Fixture& f = Fixture::paper_shape();
  const DetectionContext ctx(f.chain, f.clusters, f.scenario.labels, f.scenario.seeds);
  std::vector<std::string> known;
  for (const auto& s : f.scenario.seeds.records) known.push_back(s.address);
  for (const auto& r : classify_origin_payments({}, ctx)) known.push_back(r.address);
  for (auto _ : state) benchmark::DoNotOptimize(classify_expanded({}, ctx, known));
}
BENCHMARK(BM_ClassifyExpanded)->Unit(benchmark::kMillisecond);

void BM_FamilyOverlap(benchmark::State& state) {
  const Fixture& f = Fixture::paper_shape();
  std::vector<PaymentRecord> ps;
  for (const auto& p : f.scenario.manifest.payments) {
    PaymentRecord r;
    r.address = p.address;
    r.family = p.family;
    r.total_received = p.total_sat;
    ps.push_back(std::move(r));
  }
  for (auto _ : state) benchmark::DoNotOptimize(family_overlap(ps, f.chain));
}
BENCHMARK(BM_FamilyOverlap)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

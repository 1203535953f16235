#include "rwtrace/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/core.h>

#include "rwtrace/error.hpp"
#include "rwtrace/parallel.hpp"

namespace rwtrace {

void DetectorConfig::validate() const {
  if (!(min_receipt_btc > 0.0)) throw Error("min_receipt_btc must be positive");
  if (max_incoming_txs == 0) throw Error("max_incoming_txs must be positive");
  if (!(low_risk_origin_share > 0.5 && low_risk_origin_share <= 1.0)) {
    throw Error("low_risk_origin_share must lie in (0.5, 1]");
  }
  if (hop_bound < 1 || hop_bound > 3) throw Error("hop_bound must be 1, 2 or 3");
  if (!(nontrivial_share > 0.0 && nontrivial_share <= 1.0)) throw Error("nontrivial_share must lie in (0, 1]");
  if (!(split.tolerance > 0.0)) throw Error("split tolerance must be positive");
  if (split.max_hops < 1) throw Error("split max_hops must be at least 1");
  if (split.grid_min_pct < 50 || split.grid_max_pct > 95 || split.grid_min_pct > split.grid_max_pct) {
    throw Error("split grid must lie within [50, 95]");
  }
}

Satoshi DetectorConfig::min_receipt_sat() const {
  return static_cast<Satoshi>(std::llround(min_receipt_btc * static_cast<double>(kSatPerBtc)));
}

namespace {

AddressId require_anchor(const Chain& chain, const std::string& anchor) {
  auto id = chain.find_address(anchor);
  if (!id) throw NotFound(fmt::format("anchor address {} not present in chain", anchor));
  return *id;
}

}  // namespace

DetectionContext::DetectionContext(const Chain& chain, const ClusterAssignment& clusters, const LabelSet& labels,
                                   const SeedSet& seeds, const PriceTable* prices, unsigned threads)
    : chain_(&chain),
      clusters_(&clusters),
      labels_(&labels),
      seeds_(&seeds),
      prices_(prices),
      threads_(threads),
      label_index_(chain, labels),
      cluster_labels_(clusters, label_index_) {
  cluster_a_ = clusters.cluster_of(require_anchor(chain, seeds.anchor_a));
  cluster_b_ = clusters.cluster_of(require_anchor(chain, seeds.anchor_b));
}

BacktraceOptions DetectionContext::backtrace_options(int depth) const {
  BacktraceOptions o;
  o.depth = depth;
  o.labels = &cluster_labels_;
  o.stop_clusters = {cluster_a_, cluster_b_};
  return o;
}

PaymentRecord DetectionContext::make_record(AddressId a, Provenance provenance) const {
  const AddressTotals t = address_totals(a, *chain_, prices_);
  PaymentRecord r;
  r.address = chain_->address(a);
  r.total_received = t.total_received;
  r.total_usd = t.total_usd.value_or(Usd{});
  r.first_seen = t.first_seen;
  r.last_seen = t.last_seen;
  r.incoming_tx_count = t.incoming_tx_count;
  r.provenance = provenance;
  if (const SeedRecord* s = seeds_->find(r.address)) {
    r.family = s->family;
    r.already_known = true;
  }
  return r;
}

SourceRanking rank_source_clusters(const std::vector<SeedRecord>& seeds, const DetectionContext& ctx, int depth) {
  if (seeds.empty()) throw Error("empty seed set");
  const Chain& chain = ctx.chain();
  SourceRanking ranking;

  std::vector<AddressId> traced;
  for (const SeedRecord& s : seeds) {
    auto id = chain.find_address(s.address);
    if (!id || chain.receipts(*id).empty()) {
      ranking.skipped.push_back(s.address);
      continue;
    }
    traced.push_back(*id);
  }
  std::sort(traced.begin(), traced.end());
  traced.erase(std::unique(traced.begin(), traced.end()), traced.end());
  ranking.traced = traced.size();
  if (traced.empty()) return ranking;

  const BacktraceOptions opts = ctx.backtrace_options(depth);
  std::vector<std::vector<BacktraceEntry>> traces(traced.size());
  parallel_for(traced.size(), ctx.threads(), [&](std::size_t i) {
    traces[i] = backtrace(traced[i], chain, ctx.clusters(), opts, ctx.prices());
  });

  std::map<ClusterId, double> share_sum;
  for (const auto& tr : traces) {
    for (const auto& e : tr) share_sum[e.source] += e.share;
  }
  for (const auto& [c, sum] : share_sum) {
    RankedSource row;
    row.cluster = c;
    row.share = sum / static_cast<double>(traced.size());
    row.payments = sum;
    if (c == kExternalSource) {
      row.entity = "external";
    } else if (c == ctx.cluster_a()) {
      row.entity = "Cluster A";
    } else if (c == ctx.cluster_b()) {
      row.entity = "Cluster B";
    }
    if (const LabelRecord* r = c == kExternalSource ? nullptr : ctx.cluster_labels().at(c)) {
      if (row.entity.empty()) row.entity = r->entity;
      row.category = r->category;
    }
    ranking.rows.push_back(std::move(row));
  }
  std::stable_sort(ranking.rows.begin(), ranking.rows.end(),
                   [](const RankedSource& a, const RankedSource& b) { return a.share > b.share; });
  return ranking;
}

namespace {

bool funded_by_anchor(AddressId a, const DetectionContext& ctx) {
  const Chain& chain = ctx.chain();
  for (const Receipt& r : chain.receipts(a)) {
    for (const TxInput& in : chain.tx(r.tx).inputs) {
      if (in.address != kNoAddress && ctx.is_anchor_cluster(ctx.clusters().cluster_of(in.address))) return true;
    }
  }
  return false;
}

bool has_ransomware_input(TxIndex tx, const DetectionContext& ctx) {
  for (const TxInput& in : ctx.chain().tx(tx).inputs) {
    if (in.address != kNoAddress && ctx.is_ransomware_labeled(in.address)) return true;
  }
  return false;
}

// Hop-1 destinations of every transaction the address spends in, excluding itself.
std::vector<AddressId> hop1_destinations(AddressId a, const Chain& chain) {
  std::vector<AddressId> out;
  for (const Spend& s : chain.spends(a)) {
    for (const TxOutput& o : chain.tx(s.tx).outputs) {
      if (o.address != a) out.push_back(o.address);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

CriteriaTrace evaluate_origin(AddressId a, const DetectionContext& ctx, const DetectorConfig& config) {
  const Chain& chain = ctx.chain();
  CriteriaTrace t;
  t.c1 = funded_by_anchor(a, ctx);
  const AddressTotals totals = address_totals(a, chain);
  t.c2 = totals.total_received >= config.min_receipt_sat();
  t.c3 = totals.incoming_tx_count <= config.max_incoming_txs;

  bool linked = false;
  for (AddressId y : hop1_destinations(a, chain)) {
    if (ctx.is_ransomware_labeled(y)) t.c4a = true;
    if (!linked) {
      for (const Receipt& r : chain.receipts(y)) {
        if (has_ransomware_input(r.tx, ctx)) {
          linked = true;
          break;
        }
      }
    }
  }
  t.c4b = linked && detect_split(a, chain, config.split).has_value();
  return t;
}

std::vector<PaymentRecord> classify_origin_payments(const DetectorConfig& config, const DetectionContext& ctx) {
  config.validate();
  const Chain& chain = ctx.chain();
  const ClusterAssignment& clusters = ctx.clusters();

  std::vector<AddressId> candidates;
  for (TxIndex i = 0; i < chain.size(); ++i) {
    const Transaction& t = chain.tx(i);
    const bool from_anchor = std::any_of(t.inputs.begin(), t.inputs.end(), [&](const TxInput& in) {
      return in.address != kNoAddress && ctx.is_anchor_cluster(clusters.cluster_of(in.address));
    });
    if (!from_anchor) continue;
    for (const TxOutput& o : t.outputs) {
      if (!ctx.is_anchor_cluster(clusters.cluster_of(o.address))) candidates.push_back(o.address);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<CriteriaTrace> traces(candidates.size());
  parallel_for(candidates.size(), ctx.threads(),
               [&](std::size_t i) { traces[i] = evaluate_origin(candidates[i], ctx, config); });

  std::vector<PaymentRecord> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const CriteriaTrace& t = traces[i];
    if (!(t.c1 && t.c2 && t.c3 && (t.c4a || t.c4b))) continue;
    PaymentRecord r = ctx.make_record(candidates[i], Provenance::orig_cluster);
    r.criteria = t;
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const PaymentRecord& x, const PaymentRecord& y) { return x.address < y.address; });
  return out;
}

double low_risk_origin_share(AddressId a, const DetectionContext& ctx) {
  const Chain& chain = ctx.chain();
  long double low = 0, total = 0;
  for (const Receipt& r : chain.receipts(a)) {
    const Transaction& t = chain.tx(r.tx);
    const Satoshi v = t.outputs[r.vout].value;
    const Satoshi in_total = t.input_total();
    total += v;
    if (in_total <= 0) continue;
    Satoshi low_in = 0;
    for (const TxInput& in : t.inputs) {
      if (in.address == kNoAddress) continue;
      const ClusterId c = ctx.clusters().cluster_of(in.address);
      if (ctx.is_anchor_cluster(c) || ctx.cluster_labels().category(c) == Category::exchange_low_risk) {
        low_in += in.value;
      }
    }
    low += static_cast<long double>(v) * low_in / in_total;
  }
  if (total <= 0) return 0.0;
  return static_cast<double>(low / total);
}

namespace {

// share > threshold, decided exactly in integers when the address has a single
// funding transaction.
bool exceeds_low_risk_threshold(AddressId a, const DetectionContext& ctx, double threshold) {
  const Chain& chain = ctx.chain();
  const auto receipts = chain.receipts(a);
  std::optional<TxIndex> only;
  bool single = !receipts.empty();
  for (const Receipt& r : receipts) {
    if (only && *only != r.tx) single = false;
    only = r.tx;
  }
  if (single) {
    const Transaction& t = chain.tx(*only);
    const Satoshi in_total = t.input_total();
    if (in_total <= 0) return false;
    Satoshi low_in = 0;
    for (const TxInput& in : t.inputs) {
      if (in.address == kNoAddress) continue;
      const ClusterId c = ctx.clusters().cluster_of(in.address);
      if (ctx.is_anchor_cluster(c) || ctx.cluster_labels().category(c) == Category::exchange_low_risk) {
        low_in += in.value;
      }
    }
    const auto ppm = static_cast<__int128>(std::llround(threshold * 1e6));
    return static_cast<__int128>(low_in) * 1'000'000 > ppm * in_total;
  }
  return low_risk_origin_share(a, ctx) > threshold;
}

bool is_service(ClusterId c, const DetectionContext& ctx) {
  const LabelRecord* l = ctx.cluster_labels().at(c);
  return l != nullptr && l->category != Category::ransomware;
}

}  // namespace

std::set<AddressId> known_pools(const std::vector<AddressId>& known, const DetectionContext& ctx,
                                const DetectorConfig& config) {
  const Chain& chain = ctx.chain();
  ExposureOptions eo;
  eo.hops = config.hop_bound;
  std::vector<ExposureVector> vecs(known.size());
  parallel_for(known.size(), ctx.threads(), [&](std::size_t i) { vecs[i] = exposure(known[i], chain, eo); });

  std::map<AddressId, double> inflow;
  for (const auto& v : vecs) {
    for (const auto& e : v.reach) inflow[e.key] += e.weight * static_cast<double>(v.outgoing);
  }
  const std::set<AddressId> known_set(known.begin(), known.end());
  std::set<AddressId> pools;
  for (const auto& [y, sat] : inflow) {
    if (known_set.count(y) || is_service(ctx.clusters().cluster_of(y), ctx)) continue;
    const Satoshi received = address_totals(y, chain).total_received;
    if (received > 0 && sat / static_cast<double>(received) >= config.nontrivial_share) pools.insert(y);
  }
  return pools;
}

CriteriaTrace evaluate_expanded(AddressId a, const std::set<AddressId>& pools, const DetectionContext& ctx,
                                const DetectorConfig& config) {
  const Chain& chain = ctx.chain();
  CriteriaTrace t;
  ExposureOptions eo;
  eo.hops = config.hop_bound;
  const ExposureVector v = exposure(a, chain, eo);
  for (const auto& e : v.reach) {
    if (e.key != a && e.weight >= config.nontrivial_share && pools.count(e.key)) {
      t.c1 = true;
      break;
    }
  }
  t.c2 = detect_split(a, chain, config.split).has_value();
  t.c3 = exceeds_low_risk_threshold(a, ctx, config.low_risk_origin_share);
  return t;
}

std::vector<PaymentRecord> classify_expanded(const DetectorConfig& config, const DetectionContext& ctx,
                                             const std::vector<std::string>& known) {
  config.validate();
  if (known.empty()) throw Error("empty known set");
  const Chain& chain = ctx.chain();
  const ClusterAssignment& clusters = ctx.clusters();

  std::vector<AddressId> known_ids;
  for (const auto& k : known) {
    if (auto id = chain.find_address(k)) known_ids.push_back(*id);
  }
  std::sort(known_ids.begin(), known_ids.end());
  known_ids.erase(std::unique(known_ids.begin(), known_ids.end()), known_ids.end());
  const std::set<AddressId> known_set(known_ids.begin(), known_ids.end());

  const std::set<AddressId> pools = known_pools(known_ids, ctx, config);

  // Addresses that can reach a pool within hop_bound hops, found by walking
  // funding transactions backwards. The walk stops at known, service and
  // anchor-cluster addresses; ransomware-labeled wallets are walked through
  // but never reported.
  auto blocked = [&](AddressId x) {
    if (known_set.count(x)) return true;
    const ClusterId c = clusters.cluster_of(x);
    return ctx.is_anchor_cluster(c) || is_service(c, ctx);
  };
  std::set<AddressId> seen;
  std::vector<AddressId> frontier(pools.begin(), pools.end());
  for (int hop = 1; hop <= config.hop_bound && !frontier.empty(); ++hop) {
    std::vector<AddressId> next;
    for (AddressId y : frontier) {
      for (const Receipt& r : chain.receipts(y)) {
        for (const TxInput& in : chain.tx(r.tx).inputs) {
          if (in.address == kNoAddress || blocked(in.address)) continue;
          if (seen.insert(in.address).second) next.push_back(in.address);
        }
      }
    }
    frontier = std::move(next);
  }
  std::vector<AddressId> candidates;
  for (AddressId x : seen) {
    if (!ctx.is_ransomware_labeled(x)) candidates.push_back(x);
  }

  std::vector<CriteriaTrace> traces(candidates.size());
  parallel_for(candidates.size(), ctx.threads(),
               [&](std::size_t i) { traces[i] = evaluate_expanded(candidates[i], pools, ctx, config); });

  std::vector<PaymentRecord> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const CriteriaTrace& t = traces[i];
    if (!(t.c1 && t.c2 && t.c3)) continue;
    PaymentRecord r = ctx.make_record(candidates[i], Provenance::expanded);
    r.criteria = t;
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const PaymentRecord& x, const PaymentRecord& y) { return x.address < y.address; });
  return out;
}

}  // namespace rwtrace

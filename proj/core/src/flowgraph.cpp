#include "rwtrace/flowgraph.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <unordered_map>

#include <fmt/core.h>

#include "rwtrace/error.hpp"

namespace rwtrace {

ClusterLabels::ClusterLabels(const ClusterAssignment& assignment, const LabelIndex& labels)
    : labels_(assignment.cluster_count(), nullptr) {
  for (ClusterId c = 0; c < assignment.cluster_count(); ++c) {
    for (AddressId a : assignment.members(c)) {
      if (const LabelRecord* r = labels.at(a)) {
        labels_[c] = r;
        break;
      }
    }
  }
}

namespace {

struct Mass {
  double sat = 0.0;
  double usd = 0.0;
};

}  // namespace

std::vector<BacktraceEntry> backtrace(AddressId addr, const Chain& chain, const ClusterAssignment& assignment,
                                      const BacktraceOptions& options, const PriceTable* prices) {
  if (addr == kNoAddress || addr >= chain.address_count() || chain.receipts(addr).empty()) {
    throw NotFound(fmt::format("address {} has no receipts to backtrace",
                               addr < chain.address_count() ? chain.address(addr) : std::string("<unknown>")));
  }
  if (options.depth < 1) throw Error("backtrace depth must be at least 1");

  auto is_stop = [&](ClusterId c) {
    if (options.labels && options.labels->at(c)) return true;
    return std::find(options.stop_clusters.begin(), options.stop_clusters.end(), c) != options.stop_clusters.end();
  };

  std::map<TxIndex, Mass> frontier;
  double total_sat = 0.0;
  for (const Receipt& r : chain.receipts(addr)) {
    const Transaction& t = chain.tx(r.tx);
    const Satoshi v = t.outputs[r.vout].value;
    Mass& m = frontier[r.tx];
    m.sat += static_cast<double>(v);
    if (prices) m.usd += usd_value(v, date_of(t.timestamp), *prices).dollars();
    total_sat += static_cast<double>(v);
  }

  std::map<ClusterId, Mass> sources;
  for (int hop = 1; hop <= options.depth && !frontier.empty(); ++hop) {
    std::map<TxIndex, Mass> next;
    for (const auto& [txi, mass] : frontier) {
      const Transaction& t = chain.tx(txi);
      const Satoshi in_total = t.input_total();
      if (t.inputs.empty() || in_total <= 0) {
        Mass& ext = sources[kExternalSource];
        ext.sat += mass.sat;
        ext.usd += mass.usd;
        continue;
      }
      for (const TxInput& in : t.inputs) {
        const double f = static_cast<double>(in.value) / static_cast<double>(in_total);
        if (f == 0.0) continue;
        const Mass part{mass.sat * f, mass.usd * f};
        ClusterId dest;
        if (in.address == kNoAddress) {
          dest = kExternalSource;
        } else {
          const ClusterId c = assignment.cluster_of(in.address);
          if (is_stop(c)) {
            dest = c;
          } else if (in.resolved) {
            if (hop < options.depth) {
              Mass& nm = next[in.resolved->tx];
              nm.sat += part.sat;
              nm.usd += part.usd;
              continue;
            }
            dest = c;
          } else {
            dest = kExternalSource;
          }
        }
        Mass& sm = sources[dest];
        sm.sat += part.sat;
        sm.usd += part.usd;
      }
    }
    frontier = std::move(next);
  }

  std::vector<BacktraceEntry> out;
  out.reserve(sources.size());
  for (const auto& [c, m] : sources) {
    BacktraceEntry e;
    e.source = c;
    e.attributed_sat = m.sat;
    if (prices) e.attributed_usd = m.usd;
    e.share = total_sat > 0 ? m.sat / total_sat : 0.0;
    out.push_back(e);
  }
  std::sort(out.begin(), out.end(), [](const BacktraceEntry& a, const BacktraceEntry& b) {
    if (a.share != b.share) return a.share > b.share;
    return a.source < b.source;
  });
  return out;
}

double ExposureVector::total_weight() const noexcept {
  double s = 0.0;
  for (const auto& e : weights) s += e.weight;
  return s;
}

namespace {

double lookup(const std::vector<ExposureEntry>& v, std::uint32_t key) noexcept {
  auto it = std::lower_bound(v.begin(), v.end(), key, [](const ExposureEntry& e, std::uint32_t k) { return e.key < k; });
  return it != v.end() && it->key == key ? it->weight : 0.0;
}

std::vector<ExposureEntry> to_sorted(const std::unordered_map<std::uint32_t, ExposureEntry>& m) {
  std::vector<ExposureEntry> v;
  v.reserve(m.size());
  for (const auto& [k, e] : m) v.push_back(e);
  std::sort(v.begin(), v.end(), [](const ExposureEntry& a, const ExposureEntry& b) { return a.key < b.key; });
  return v;
}

}  // namespace

double ExposureVector::weight_of(std::uint32_t key) const noexcept { return lookup(weights, key); }
double ExposureVector::reach_of(std::uint32_t key) const noexcept { return lookup(reach, key); }

ExposureVector exposure(AddressId addr, const Chain& chain, const ExposureOptions& options) {
  if (addr == kNoAddress || addr >= chain.address_count()) throw NotFound("exposure: unknown address");
  if (options.hops < 1) throw Error("exposure hop bound must be at least 1");

  ExposureVector result;
  result.origin = addr;
  result.hop_bound = options.hops;

  // Outgoing funds are the origin's inputs, excluding outputs the origin paid to
  // itself (those are followed as change instead of being counted twice).
  std::map<TxIndex, double> seed;
  for (const Spend& s : chain.spends(addr)) {
    const TxInput& in = chain.tx(s.tx).inputs[s.vin];
    if (in.resolved) {
      const Transaction& funding = chain.tx(in.resolved->tx);
      const bool self_funded = std::any_of(funding.inputs.begin(), funding.inputs.end(),
                                           [&](const TxInput& fi) { return fi.address == addr; });
      if (self_funded) continue;
    }
    seed[s.tx] += static_cast<double>(in.value);
    result.outgoing += in.value;
  }
  if (result.outgoing <= 0) return result;

  std::map<TxIndex, double> frontier;
  for (const auto& [tx, v] : seed) frontier[tx] = v / static_cast<double>(result.outgoing);

  std::unordered_map<std::uint32_t, ExposureEntry> terminal;
  std::unordered_map<std::uint32_t, ExposureEntry> reach;
  for (int hop = 1; hop <= options.hops && !frontier.empty(); ++hop) {
    std::map<TxIndex, double> next;
    for (const auto& [txi, mass] : frontier) {
      const Transaction& t = chain.tx(txi);
      const Satoshi out_total = t.output_total();
      if (out_total <= 0) continue;
      for (const TxOutput& o : t.outputs) {
        const double m = mass * static_cast<double>(o.value) / static_cast<double>(out_total);
        if (m <= 0.0) continue;
        if (m < options.floor) {
          result.pruned += m;
          continue;
        }
        auto [rit, rnew] = reach.try_emplace(o.address, ExposureEntry{o.address, 0.0, hop});
        rit->second.weight += m;
        const bool absorbed = options.absorb && o.address < options.absorb->size() && (*options.absorb)[o.address];
        if (absorbed || hop == options.hops || !o.spent_by) {
          auto [tit, tnew] = terminal.try_emplace(o.address, ExposureEntry{o.address, 0.0, hop});
          tit->second.weight += m;
        } else {
          next[*o.spent_by] += m;
        }
      }
    }
    frontier = std::move(next);
  }

  result.weights = to_sorted(terminal);
  result.reach = to_sorted(reach);
  return result;
}

ExposureVector rekey_by_cluster(const ExposureVector& v, const ClusterAssignment& assignment) {
  ExposureVector out = v;
  out.keyed_by_cluster = true;
  auto rekey = [&](const std::vector<ExposureEntry>& in) {
    std::unordered_map<std::uint32_t, ExposureEntry> m;
    for (const auto& e : in) {
      const ClusterId c = v.keyed_by_cluster ? e.key : assignment.cluster_of(e.key);
      auto [it, fresh] = m.try_emplace(c, ExposureEntry{c, 0.0, e.hop});
      it->second.weight += e.weight;
      it->second.hop = std::min(it->second.hop, e.hop);
    }
    return to_sorted(m);
  };
  out.weights = rekey(v.weights);
  out.reach = rekey(v.reach);
  return out;
}

double shared_exposure_score(const ExposureVector& e1, const ExposureVector& e2, double scale1, double scale2) {
  double num = 0.0, den = 0.0;
  auto i = e1.weights.begin();
  auto j = e2.weights.begin();
  while (i != e1.weights.end() || j != e2.weights.end()) {
    double x = 0.0, y = 0.0;
    if (j == e2.weights.end() || (i != e1.weights.end() && i->key < j->key)) {
      x = i->weight * scale1;
      ++i;
    } else if (i == e1.weights.end() || j->key < i->key) {
      y = j->weight * scale2;
      ++j;
    } else {
      x = i->weight * scale1;
      y = j->weight * scale2;
      ++i;
      ++j;
    }
    num += std::min(x, y);
    den += std::max(x, y);
  }
  if (den <= 0.0) return 0.0;
  return std::clamp(num / den, 0.0, 1.0);
}

SharedExposure shared_exposure(AddressId a1, AddressId a2, const Chain& chain, const ExposureOptions& options) {
  const ExposureVector e1 = exposure(a1, chain, options);
  const ExposureVector e2 = exposure(a2, chain, options);
  return {a1, a2, shared_exposure_score(e1, e2)};
}

void write_exposure_csv(std::ostream& out, const Chain& chain, std::span<const ExposureVector> vectors) {
  out << "origin,destination,weight,hops\n";
  for (const auto& v : vectors) {
    for (const auto& e : v.weights) {
      const std::string dest = v.keyed_by_cluster ? fmt::format("cluster:{}", e.key) : chain.address(e.key);
      out << chain.address(v.origin) << ',' << dest << ',' << fmt::format("{:.9f}", e.weight) << ',' << e.hop << '\n';
    }
  }
}

}  // namespace rwtrace

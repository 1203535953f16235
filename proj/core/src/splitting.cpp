#include "rwtrace/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/core.h>

#include "rwtrace/csv.hpp"
#include "rwtrace/error.hpp"

namespace rwtrace {

std::optional<int> match_split_grid(double share, const SplitOptions& options) {
  std::optional<int> best;
  double best_d = 0.0;
  for (int g = options.grid_min_pct; g <= options.grid_max_pct; ++g) {
    const double d = std::abs(share - g / 100.0);
    if (d <= options.tolerance && (!best || d < best_d)) {
      best = g;
      best_d = d;
    }
  }
  return best;
}

std::optional<SplitFinding> detect_split(AddressId addr, const Chain& chain, const SplitOptions& options) {
  if (addr == kNoAddress || addr >= chain.address_count()) throw NotFound("detect_split: unknown address");

  // Largest spend by this address's input value; earliest transaction on ties.
  std::optional<TxIndex> current;
  Satoshi best_value = -1;
  {
    std::map<TxIndex, Satoshi> spent;
    for (const Spend& s : chain.spends(addr)) spent[s.tx] += chain.tx(s.tx).inputs[s.vin].value;
    for (const auto& [tx, v] : spent) {
      if (v > best_value) {
        best_value = v;
        current = tx;
      }
    }
  }

  for (int hop = 1; current && hop <= options.max_hops; ++hop) {
    const Transaction& t = chain.tx(*current);
    if (t.outputs.size() == 2) {
      const Satoshi a = t.outputs[0].value, b = t.outputs[1].value;
      const Satoshi sum = a + b;
      if (sum > 0) {
        const double p = static_cast<double>(std::max(a, b)) / static_cast<double>(sum);
        if (auto g = match_split_grid(p, options)) {
          return SplitFinding{addr, *current, hop, p, 1.0 - p, *g};
        }
      }
    }
    if (t.outputs.empty()) break;
    std::size_t major = 0;
    for (std::size_t o = 1; o < t.outputs.size(); ++o) {
      if (t.outputs[o].value > t.outputs[major].value) major = o;
    }
    current = t.outputs[major].spent_by;
  }
  return std::nullopt;
}

ShareDistribution describe(std::vector<double> values) {
  if (values.empty()) throw Error("describe: empty sample");
  std::sort(values.begin(), values.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
  };
  return {values.front(), q(0.25), q(0.5), q(0.75), values.back()};
}

std::vector<FamilySplitRate> split_rate_by_family(std::span<const PaymentRecord> payments, const SplitMap& splits) {
  std::map<std::string, std::pair<FamilySplitRate, std::vector<double>>> by_family;
  for (const PaymentRecord& p : payments) {
    const std::string family = p.family.empty() ? "unlabeled" : p.family;
    auto& [rate, shares] = by_family[family];
    rate.family = family;
    ++rate.payments;
    auto it = splits.find(p.address);
    if (it != splits.end()) {
      ++rate.splitting;
      shares.push_back(it->second.affiliate_share);
    }
  }
  std::vector<FamilySplitRate> out;
  for (auto& [family, entry] : by_family) {
    auto& [rate, shares] = entry;
    rate.fraction = rate.payments ? static_cast<double>(rate.splitting) / static_cast<double>(rate.payments) : 0.0;
    if (!shares.empty()) rate.affiliate_shares = describe(shares);
    out.push_back(std::move(rate));
  }
  return out;
}

void write_splits_csv(std::ostream& out, const Chain& chain, const SplitMap& splits) {
  out << "address,split_tx,hop,affiliate_share,grid_pct\n";
  for (const auto& [address, f] : splits) {
    out << address << ',' << chain.tx(f.split_tx).txid << ',' << f.hop << ',' << fmt::format("{:.6f}", f.affiliate_share)
        << ',' << f.grid_pct << '\n';
  }
}

SplitMap read_splits_csv(std::istream& in, const Chain& chain, const std::string& source) {
  SplitMap out;
  csv::Reader r(in, source);
  while (r.next()) {
    SplitFinding f;
    const std::string& address = r.at("address");
    auto id = chain.find_address(address);
    if (!id) throw ParseError(source, r.line(), "address", fmt::format("address {} not in chain", address));
    auto tx = chain.find_tx(r.at("split_tx"));
    if (!tx) throw ParseError(source, r.line(), "split_tx", "transaction not in chain");
    f.payment = *id;
    f.split_tx = *tx;
    f.hop = static_cast<int>(r.as_int("hop"));
    f.affiliate_share = r.as_double("affiliate_share");
    f.operator_share = 1.0 - f.affiliate_share;
    f.grid_pct = static_cast<int>(r.as_int("grid_pct"));
    out.emplace(address, f);
  }
  return out;
}

}  // namespace rwtrace

#include "rwtrace/analytics.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

#include <fmt/core.h>

#include "rwtrace/csv.hpp"
#include "rwtrace/error.hpp"
#include "rwtrace/flowgraph.hpp"
#include "rwtrace/parallel.hpp"

namespace rwtrace {

namespace {

AddressId require_address(const Chain& chain, const std::string& addr) {
  auto id = chain.find_address(addr);
  if (!id) throw NotFound(fmt::format("payment address {} not present in chain", addr));
  return *id;
}

std::string fixed(double v, int digits = 6) { return fmt::format("{:.{}f}", v, digits); }

}  // namespace

std::vector<FamilyLabel> label_families(std::span<const PaymentRecord> payments, const Chain& chain,
                                        const LabelSet& labels, const AnalyticsOptions& options) {
  const LabelIndex index(chain, labels);
  std::vector<char> absorb(chain.address_count(), 0);
  for (AddressId a = 0; a < chain.address_count(); ++a) absorb[a] = index.category(a) == Category::ransomware;

  ExposureOptions eo;
  eo.hops = options.hops;
  eo.absorb = &absorb;

  std::vector<FamilyLabel> out(payments.size());
  parallel_for(payments.size(), options.threads, [&](std::size_t i) {
    const PaymentRecord& p = payments[i];
    const AddressId id = require_address(chain, p.address);
    const ExposureVector v = exposure(id, chain, eo);

    std::map<std::string, std::pair<double, double>> by_family;  // value, hop-1 value
    for (const auto& e : v.weights) {
      if (!absorb[e.key]) continue;
      const LabelRecord* r = index.at(e.key);
      if (r->family.empty()) continue;
      const double value = e.weight * static_cast<double>(v.outgoing);
      auto& slot = by_family[r->family];
      slot.first += value;
      if (e.hop == 1) slot.second += value;
    }

    FamilyLabel& fl = out[i];
    fl.address = p.address;
    fl.family = std::string(kUnlabeledFamily);
    for (const auto& [family, vals] : by_family) {
      // Map order makes the first of equal candidates the smaller name.
      if (fl.family == kUnlabeledFamily || vals.first > fl.value_sat ||
          (vals.first == fl.value_sat && vals.second > fl.hop1_sat)) {
        fl.family = family;
        fl.value_sat = vals.first;
        fl.hop1_sat = vals.second;
      }
    }
    if (p.provenance == Provenance::ransomwhere && !p.family.empty()) {
      fl.family = p.family;
      auto it = by_family.find(p.family);
      fl.value_sat = it != by_family.end() ? it->second.first : 0.0;
      fl.hop1_sat = it != by_family.end() ? it->second.second : 0.0;
    }
  });
  return out;
}

void apply_families(std::vector<PaymentRecord>& payments, std::span<const FamilyLabel> labeling) {
  std::map<std::string_view, std::string_view> by_address;
  for (const auto& l : labeling) by_address[l.address] = l.family;
  for (auto& p : payments) {
    auto it = by_address.find(p.address);
    if (it == by_address.end()) continue;
    p.family = it->second == kUnlabeledFamily ? std::string() : std::string(it->second);
  }
}

std::optional<TimeBucket> parse_time_bucket(std::string_view s) noexcept {
  if (s == "month") return TimeBucket::month;
  if (s == "quarter") return TimeBucket::quarter;
  if (s == "year") return TimeBucket::year;
  return std::nullopt;
}

namespace {

std::string bucket_key(Date d, TimeBucket bucket) {
  const std::chrono::year_month_day ymd{d};
  const int y = static_cast<int>(ymd.year());
  const unsigned m = static_cast<unsigned>(ymd.month());
  switch (bucket) {
    case TimeBucket::month:
      return fmt::format("{:04d}-{:02d}", y, m);
    case TimeBucket::quarter:
      return fmt::format("{:04d}-Q{}", y, (m - 1) / 3 + 1);
    case TimeBucket::year:
      break;
  }
  return fmt::format("{:04d}", y);
}

}  // namespace

std::vector<TimeSeriesPoint> payments_over_time(std::span<const PaymentRecord> payments, const Chain& chain,
                                                const PriceTable& prices, TimeBucket bucket) {
  std::map<std::string, std::pair<Usd, std::set<std::size_t>>> acc;
  for (std::size_t i = 0; i < payments.size(); ++i) {
    const AddressId id = require_address(chain, payments[i].address);
    for (const Receipt& r : chain.receipts(id)) {
      const Transaction& t = chain.tx(r.tx);
      const Date d = date_of(t.timestamp);
      auto& slot = acc[bucket_key(d, bucket)];
      slot.first += usd_value(t.outputs[r.vout].value, d, prices);
      slot.second.insert(i);
    }
  }
  std::vector<TimeSeriesPoint> out;
  out.reserve(acc.size());
  for (const auto& [key, slot] : acc) out.push_back({key, slot.first, slot.second.size()});
  return out;
}

namespace {

CentralTendency summarize(std::string bucket, std::vector<std::int64_t> cents) {
  CentralTendency row;
  row.bucket = std::move(bucket);
  row.payments = cents.size();
  if (cents.empty()) return row;
  std::sort(cents.begin(), cents.end());
  long double sum = 0;
  std::size_t over = 0;
  for (auto c : cents) {
    sum += c;
    if (c > 100'000'000) ++over;
  }
  const std::size_t n = cents.size();
  row.mean_usd = static_cast<double>(sum / n / 100);
  row.median_usd = n % 2 ? static_cast<double>(cents[n / 2]) / 100.0
                         : (static_cast<double>(cents[n / 2 - 1]) + static_cast<double>(cents[n / 2])) / 200.0;
  row.share_over_1m = static_cast<double>(over) / static_cast<double>(n);
  return row;
}

}  // namespace

std::vector<CentralTendency> central_tendency(std::span<const PaymentRecord> payments) {
  std::map<int, std::vector<std::int64_t>> by_year;
  std::vector<std::int64_t> all;
  for (const auto& p : payments) {
    const std::chrono::year_month_day ymd{date_of(p.first_seen)};
    by_year[static_cast<int>(ymd.year())].push_back(p.total_usd.cents);
    all.push_back(p.total_usd.cents);
  }
  std::vector<CentralTendency> out;
  if (all.empty()) return out;
  for (auto& [year, cents] : by_year) out.push_back(summarize(fmt::format("{:04d}", year), std::move(cents)));
  out.push_back(summarize("all", std::move(all)));
  return out;
}

std::vector<DestinationTypeRow> destination_type_tally(std::span<const PaymentRecord> payments, const Chain& chain,
                                                       const LabelSet& labels, const AnalyticsOptions& options) {
  const LabelIndex index(chain, labels);
  ExposureOptions eo;
  eo.hops = options.hops;

  std::vector<std::set<Category>> hit(payments.size());
  parallel_for(payments.size(), options.threads, [&](std::size_t i) {
    const ExposureVector v = exposure(require_address(chain, payments[i].address), chain, eo);
    for (const auto& e : v.reach) {
      const Category c = index.category(e.key);
      if (is_illicit(c)) hit[i].insert(c);
    }
  });

  std::vector<DestinationTypeRow> rows;
  for (Category c : kAllCategories) {
    if (!is_illicit(c)) continue;
    DestinationTypeRow row;
    row.category = c;
    for (const auto& h : hit) row.payments += h.count(c);
    row.fraction = payments.empty() ? 0.0 : static_cast<double>(row.payments) / static_cast<double>(payments.size());
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const DestinationTypeRow& a, const DestinationTypeRow& b) { return a.payments > b.payments; });
  return rows;
}

double OverlapMatrix::at(std::string_view a, std::string_view b) const {
  auto pos = [&](std::string_view f) {
    auto it = std::find(families.begin(), families.end(), f);
    if (it == families.end()) throw NotFound(fmt::format("family {} not in overlap matrix", f));
    return static_cast<std::size_t>(it - families.begin());
  };
  return score[pos(a)][pos(b)];
}

OverlapMatrix family_overlap(std::span<const PaymentRecord> payments, const Chain& chain,
                             const OverlapOptions& options, const ClusterAssignment* clusters) {
  if (options.cluster_keyed && !clusters) throw Error("cluster-keyed overlap requires a cluster assignment");

  std::vector<const PaymentRecord*> labeled;
  std::set<std::string> family_set;
  for (const auto& p : payments) {
    if (p.family.empty() || p.family == kUnlabeledFamily) continue;
    labeled.push_back(&p);
    family_set.insert(p.family);
  }
  std::sort(labeled.begin(), labeled.end(),
            [](const PaymentRecord* a, const PaymentRecord* b) { return a->address < b->address; });

  OverlapMatrix m;
  m.families.assign(family_set.begin(), family_set.end());
  m.row_normalized = options.row_normalized;
  const std::size_t k = m.families.size();
  m.score.assign(k, std::vector<double>(k, 0.0));
  if (k == 0) return m;

  ExposureOptions eo;
  eo.hops = options.hops;
  const std::size_t n = labeled.size();
  std::vector<ExposureVector> vecs(n);
  std::vector<std::size_t> fam(n);
  for (std::size_t i = 0; i < n; ++i) {
    fam[i] = static_cast<std::size_t>(std::lower_bound(m.families.begin(), m.families.end(), labeled[i]->family) -
                                      m.families.begin());
  }
  parallel_for(n, options.threads, [&](std::size_t i) {
    vecs[i] = exposure(require_address(chain, labeled[i]->address), chain, eo);
    if (options.cluster_keyed) vecs[i] = rekey_by_cluster(vecs[i], *clusters);
  });

  // Row i holds scores against every j > i.
  std::vector<std::vector<double>> pair_score(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    pair_score[i].resize(n - i - 1);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s1 = options.absolute ? static_cast<double>(vecs[i].outgoing) : 1.0;
      const double s2 = options.absolute ? static_cast<double>(vecs[j].outgoing) : 1.0;
      pair_score[i][j - i - 1] = shared_exposure_score(vecs[i], vecs[j], s1, s2);
    }
  });

  std::vector<std::vector<long double>> num(k, std::vector<long double>(k, 0)), den = num;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const long double w = static_cast<long double>(labeled[i]->total_received) * labeled[j]->total_received;
      const std::size_t p = std::min(fam[i], fam[j]), q = std::max(fam[i], fam[j]);
      num[p][q] += w * pair_score[i][j - i - 1];
      den[p][q] += w;
    }
  }
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t q = p; q < k; ++q) {
      const double s = den[p][q] > 0 ? static_cast<double>(num[p][q] / den[p][q]) : 0.0;
      m.score[p][q] = m.score[q][p] = std::clamp(s, 0.0, 1.0);
    }
  }
  if (options.row_normalized) {
    for (auto& row : m.score) {
      const double mx = *std::max_element(row.begin(), row.end());
      if (mx > 0) {
        for (double& v : row) v /= mx;
      }
    }
  }
  return m;
}

PercentileCurve split_by_percentile(std::span<const PaymentRecord> payments, const SplitMap& splits) {
  std::vector<std::pair<const PaymentRecord*, double>> rows;
  for (const auto& p : payments) {
    auto it = splits.find(p.address);
    if (it != splits.end()) rows.emplace_back(&p, it->second.affiliate_share);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.first->total_usd != b.first->total_usd) return a.first->total_usd < b.first->total_usd;
    return a.first->address < b.first->address;
  });

  PercentileCurve curve;
  const std::size_t n = rows.size();
  if (n == 0) return curve;
  const std::size_t buckets = std::min<std::size_t>(10, n);
  curve.coarse = n < 10;
  curve.buckets.resize(buckets);
  std::vector<long double> share_sum(buckets, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = i * buckets / n;
    PercentileBucket& pb = curve.buckets[b];
    const Usd usd = rows[i].first->total_usd;
    if (pb.payments == 0) pb.min_usd = usd;
    pb.max_usd = usd;
    ++pb.payments;
    share_sum[b] += rows[i].second;
  }
  for (std::size_t b = 0; b < buckets; ++b) {
    curve.buckets[b].bucket = static_cast<int>(b + 1);
    curve.buckets[b].mean_affiliate_share = static_cast<double>(share_sum[b] / curve.buckets[b].payments);
  }
  return curve;
}

void write_families_csv(std::ostream& out, std::span<const FamilyLabel> labeling) {
  csv::Writer w(out);
  w.row({"address", "family", "value_btc", "hop1_btc"});
  for (const auto& l : labeling) {
    w.row({l.address, l.family, fixed(l.value_sat / kSatPerBtc, 8), fixed(l.hop1_sat / kSatPerBtc, 8)});
  }
}

void write_split_rates_csv(std::ostream& out, std::span<const FamilySplitRate> rates) {
  csv::Writer w(out);
  w.row({"family", "payments", "splitting", "fraction", "share_min", "share_q1", "share_median", "share_q3",
         "share_max"});
  for (const auto& r : rates) {
    std::vector<std::string> row{r.family, std::to_string(r.payments), std::to_string(r.splitting), fixed(r.fraction)};
    if (r.affiliate_shares) {
      const auto& d = *r.affiliate_shares;
      for (double v : {d.min, d.q1, d.median, d.q3, d.max}) row.push_back(fixed(v));
    } else {
      row.insert(row.end(), 5, "");
    }
    w.row(row);
  }
}

void write_timeseries_csv(std::ostream& out, std::span<const TimeSeriesPoint> series) {
  csv::Writer w(out);
  w.row({"bucket", "total_usd", "payments"});
  for (const auto& p : series) w.row({p.bucket, p.total.str(), std::to_string(p.payments)});
}

void write_central_tendency_csv(std::ostream& out, std::span<const CentralTendency> rows) {
  csv::Writer w(out);
  w.row({"bucket", "payments", "mean_usd", "median_usd", "share_over_1m"});
  for (const auto& r : rows) {
    w.row({r.bucket, std::to_string(r.payments), fixed(r.mean_usd, 2), fixed(r.median_usd, 2),
           fixed(r.share_over_1m)});
  }
}

void write_dest_types_csv(std::ostream& out, std::span<const DestinationTypeRow> rows) {
  csv::Writer w(out);
  w.row({"category", "payments", "fraction"});
  for (const auto& r : rows) w.row({std::string(to_string(r.category)), std::to_string(r.payments), fixed(r.fraction)});
}

void write_overlap_csv(std::ostream& out, const OverlapMatrix& m) {
  csv::Writer w(out);
  std::vector<std::string> header{"family"};
  header.insert(header.end(), m.families.begin(), m.families.end());
  w.row(header);
  for (std::size_t i = 0; i < m.families.size(); ++i) {
    std::vector<std::string> row{m.families[i]};
    for (double v : m.score[i]) row.push_back(fixed(v));
    w.row(row);
  }
}

void write_split_percentile_csv(std::ostream& out, const PercentileCurve& curve) {
  csv::Writer w(out);
  w.row({"bucket", "payments", "min_usd", "max_usd", "mean_affiliate_share", "coarse"});
  for (const auto& b : curve.buckets) {
    w.row({std::to_string(b.bucket), std::to_string(b.payments), b.min_usd.str(), b.max_usd.str(),
           fixed(b.mean_affiliate_share), curve.coarse ? "true" : "false"});
  }
}

}  // namespace rwtrace

#include "rwtrace/validation.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include <fmt/core.h>

#include "rwtrace/csv.hpp"
#include "rwtrace/error.hpp"
#include "rwtrace/flowgraph.hpp"
#include "rwtrace/parallel.hpp"

namespace rwtrace {

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::tp_ransomware:
      return "suspected-TP-ransomware";
    case Outcome::tp_illicit:
      return "suspected-TP-illicit";
    case Outcome::fp_lowrisk:
      return "suspected-FP-lowrisk";
    case Outcome::uninformative:
      break;
  }
  return "uninformative-unlabeled";
}

Outcome classify_outcome(double pct_ransomware, double pct_highrisk, double pct_lowrisk) noexcept {
  if (pct_ransomware > 0.0) return Outcome::tp_ransomware;
  if (pct_highrisk > 0.0) return Outcome::tp_illicit;
  if (pct_lowrisk > 0.5) return Outcome::fp_lowrisk;
  return Outcome::uninformative;
}

ValidationResult validate(std::span<const PaymentRecord> payments, const Chain& chain, const LabelSet& independent,
                          const std::set<std::string>& detector_sources, const ValidationOptions& options) {
  for (const auto& s : independent.sources()) {
    if (detector_sources.count(s)) {
      throw Error(fmt::format("label source '{}' is used by both detector and validation labels", s));
    }
  }

  const LabelIndex index(chain, independent);
  std::vector<char> absorb(chain.address_count(), 0);
  for (AddressId a = 0; a < chain.address_count(); ++a) absorb[a] = index.at(a) != nullptr;
  ExposureOptions eo;
  eo.hops = options.hops;
  eo.absorb = &absorb;

  ValidationResult result;
  result.outcomes.resize(payments.size());
  parallel_for(payments.size(), options.threads, [&](std::size_t i) {
    const PaymentRecord& p = payments[i];
    auto id = chain.find_address(p.address);
    if (!id) throw NotFound(fmt::format("payment address {} not present in chain", p.address));
    const ExposureVector v = exposure(*id, chain, eo);
    ValidationOutcome& o = result.outcomes[i];
    o.address = p.address;
    o.provenance = p.provenance;
    o.total_usd = p.total_usd;
    for (const auto& e : v.weights) {
      const Category c = index.category(e.key);
      if (c == Category::ransomware) o.pct_ransomware += e.weight;
      if (is_illicit(c)) o.pct_highrisk += e.weight;
      if (is_low_risk(c)) o.pct_lowrisk += e.weight;
    }
    o.pct_ransomware = std::min(o.pct_ransomware, 1.0);
    o.pct_highrisk = std::min(o.pct_highrisk, 1.0);
    o.pct_lowrisk = std::min(o.pct_lowrisk, 1.0);
    o.outcome = classify_outcome(o.pct_ransomware, o.pct_highrisk, o.pct_lowrisk);
  });
  result.summary = summarize_outcomes(result.outcomes);
  return result;
}

std::vector<SummaryRow> summarize_outcomes(std::span<const ValidationOutcome> outcomes) {
  std::map<Provenance, SummaryRow> by_prov;
  SummaryRow all;
  all.dataset = "all";
  auto add = [](SummaryRow& row, const ValidationOutcome& o) {
    ++row.payments;
    row.ransomware_all += o.pct_ransomware > 0.99;
    row.ransomware_some += o.pct_ransomware > 0.0;
    row.illicit_all += o.pct_highrisk > 0.99;
    row.illicit_some += o.pct_highrisk > 0.0;
    if (o.outcome == Outcome::fp_lowrisk) {
      ++row.suspected_fp;
      row.suspected_fp_usd += o.total_usd;
    }
  };
  for (const auto& o : outcomes) {
    SummaryRow& row = by_prov[o.provenance];
    row.dataset = std::string(to_string(o.provenance));
    add(row, o);
    add(all, o);
  }
  std::vector<SummaryRow> out;
  for (auto& [p, row] : by_prov) out.push_back(std::move(row));
  out.push_back(std::move(all));
  return out;
}

EcdfCurve ecdf(std::vector<double> sample) {
  EcdfCurve curve;
  if (sample.empty()) return curve;
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (i + 1 < sample.size() && sample[i + 1] == sample[i]) continue;
    curve.emplace_back(sample[i], static_cast<double>(i + 1) / n);
  }
  return curve;
}

LabeledValueEcdf labeled_value_ecdf(std::span<const ValidationOutcome> outcomes) {
  if (outcomes.empty()) throw Error("labeled_value_ecdf: no outcomes");
  std::vector<double> r, h, l;
  for (const auto& o : outcomes) {
    r.push_back(o.pct_ransomware);
    h.push_back(o.pct_highrisk);
    l.push_back(o.pct_lowrisk);
  }
  return {ecdf(std::move(r)), ecdf(std::move(h)), ecdf(std::move(l))};
}

namespace {

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

std::string rate(std::size_t k, std::size_t n) {
  return fixed(n ? static_cast<double>(k) / static_cast<double>(n) : 0.0);
}

}  // namespace

void write_validation_csv(std::ostream& out, std::span<const ValidationOutcome> outcomes) {
  csv::Writer w(out);
  w.row({"address", "provenance", "outcome", "pct_ransomware", "pct_highrisk", "pct_lowrisk", "total_usd"});
  for (const auto& o : outcomes) {
    w.row({o.address, std::string(to_string(o.provenance)), std::string(to_string(o.outcome)), fixed(o.pct_ransomware),
           fixed(o.pct_highrisk), fixed(o.pct_lowrisk), o.total_usd.str()});
  }
}

void write_ecdf_csv(std::ostream& out, const EcdfCurve& curve) {
  csv::Writer w(out);
  w.row({"x", "F"});
  for (const auto& [x, f] : curve) w.row({fixed(x), fixed(f)});
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  csv::Writer w(out);
  w.row({"dataset", "payments", "ransomware_all", "ransomware_all_pct", "ransomware_some", "ransomware_some_pct",
         "illicit_all", "illicit_all_pct", "illicit_some", "illicit_some_pct", "suspected_fp", "suspected_fp_usd"});
  for (const auto& r : rows) {
    w.row({r.dataset, std::to_string(r.payments), std::to_string(r.ransomware_all), rate(r.ransomware_all, r.payments),
           std::to_string(r.ransomware_some), rate(r.ransomware_some, r.payments), std::to_string(r.illicit_all),
           rate(r.illicit_all, r.payments), std::to_string(r.illicit_some), rate(r.illicit_some, r.payments),
           std::to_string(r.suspected_fp), r.suspected_fp_usd.str()});
  }
}

}  // namespace rwtrace

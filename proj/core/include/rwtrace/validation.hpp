#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rwtrace/chain.hpp"
#include "rwtrace/labels.hpp"
#include "rwtrace/payments.hpp"

namespace rwtrace {

enum class Outcome { tp_ransomware, tp_illicit, fp_lowrisk, uninformative };

std::string_view to_string(Outcome o) noexcept;

struct ValidationOutcome {
  std::string address;
  Provenance provenance = Provenance::ransomwhere;
  Usd total_usd;
  Outcome outcome = Outcome::uninformative;
  double pct_ransomware = 0.0;
  double pct_highrisk = 0.0;  // every illicit category, ransomware included
  double pct_lowrisk = 0.0;
};

// Ransomware > 0 wins, then any illicit > 0, then low-risk > 0.5.
Outcome classify_outcome(double pct_ransomware, double pct_highrisk, double pct_lowrisk) noexcept;

struct SummaryRow {
  std::string dataset;  // provenance name or "all"
  std::size_t payments = 0;
  std::size_t ransomware_all = 0;  // share > 0.99
  std::size_t ransomware_some = 0; // share > 0
  std::size_t illicit_all = 0;
  std::size_t illicit_some = 0;
  std::size_t suspected_fp = 0;
  Usd suspected_fp_usd;
};

struct ValidationResult {
  std::vector<ValidationOutcome> outcomes;  // input order
  std::vector<SummaryRow> summary;          // one row per provenance present, then "all"
};

struct ValidationOptions {
  int hops = 3;
  unsigned threads = 1;
};

// Shares of each payment's outgoing value that come to rest at independently
// labeled addresses within the hop bound. Throws Error when a label source of
// `independent` also appears in `detector_sources`.
ValidationResult validate(std::span<const PaymentRecord> payments, const Chain& chain, const LabelSet& independent,
                          const std::set<std::string>& detector_sources, const ValidationOptions& options = {});

std::vector<SummaryRow> summarize_outcomes(std::span<const ValidationOutcome> outcomes);

using EcdfCurve = std::vector<std::pair<double, double>>;  // (x, F(x)) at each distinct x

// Empirical CDF evaluated at every distinct sample value.
EcdfCurve ecdf(std::vector<double> sample);

struct LabeledValueEcdf {
  EcdfCurve ransomware;
  EcdfCurve highrisk;
  EcdfCurve lowrisk;
};

// Throws Error on an empty outcome list.
LabeledValueEcdf labeled_value_ecdf(std::span<const ValidationOutcome> outcomes);

void write_validation_csv(std::ostream& out, std::span<const ValidationOutcome> outcomes);
void write_ecdf_csv(std::ostream& out, const EcdfCurve& curve);
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

}  // namespace rwtrace

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rwtrace/chain.hpp"
#include "rwtrace/clustering.hpp"
#include "rwtrace/labels.hpp"
#include "rwtrace/payments.hpp"
#include "rwtrace/splitting.hpp"

namespace rwtrace {

inline constexpr std::string_view kUnlabeledFamily = "unlabeled";

struct FamilyLabel {
  std::string address;
  std::string family;        // kUnlabeledFamily when no ransomware destination is reached
  double value_sat = 0.0;    // exposure-weighted value sent to the winning family
  double hop1_sat = 0.0;     // part of value_sat that arrived directly
};

struct AnalyticsOptions {
  int hops = 3;
  unsigned threads = 1;
};

// Value each payment sends to ransomware-labeled addresses within the hop bound
// (mass stops at the first labeled address). The family with the most value wins;
// ties go to the larger hop-1 value, then the smaller name. Seed records that
// already carry a family keep it. Output follows the input order.
std::vector<FamilyLabel> label_families(std::span<const PaymentRecord> payments, const Chain& chain,
                                        const LabelSet& labels, const AnalyticsOptions& options = {});

// Copies labels into the records' family field ("" for unlabeled).
void apply_families(std::vector<PaymentRecord>& payments, std::span<const FamilyLabel> labeling);

enum class TimeBucket { month, quarter, year };
std::optional<TimeBucket> parse_time_bucket(std::string_view s) noexcept;

struct TimeSeriesPoint {
  std::string bucket;  // "2021-03", "2021-Q1" or "2021"
  Usd total;
  std::size_t payments = 0;  // distinct payment addresses with a receipt in the bucket
};

// Receipts bucketed by their own date, each converted at that day's close.
std::vector<TimeSeriesPoint> payments_over_time(std::span<const PaymentRecord> payments, const Chain& chain,
                                                const PriceTable& prices, TimeBucket bucket);

struct CentralTendency {
  std::string bucket;  // year of first receipt, or "all"
  std::size_t payments = 0;
  double mean_usd = 0.0;
  double median_usd = 0.0;
  double share_over_1m = 0.0;  // fraction with total strictly above $1,000,000
};

// One row per year of first receipt, followed by an "all" row. Empty input gives
// an empty table.
std::vector<CentralTendency> central_tendency(std::span<const PaymentRecord> payments);

struct DestinationTypeRow {
  Category category = Category::unlabeled;
  std::size_t payments = 0;
  double fraction = 0.0;
};

// For each illicit category, the fraction of payments whose funds pass through an
// address of that category within the hop bound.
std::vector<DestinationTypeRow> destination_type_tally(std::span<const PaymentRecord> payments, const Chain& chain,
                                                       const LabelSet& labels, const AnalyticsOptions& options = {});

struct OverlapOptions {
  int hops = 3;
  unsigned threads = 1;
  bool absolute = false;       // compare exposure scaled by outgoing value
  bool row_normalized = false; // divide each row by its largest entry
  bool cluster_keyed = false;  // compare destinations by cluster
};

struct OverlapMatrix {
  std::vector<std::string> families;
  std::vector<std::vector<double>> score;
  bool row_normalized = false;

  double at(std::string_view a, std::string_view b) const;
};

// Family-pair score = mean of pairwise shared exposure over payment pairs (one from
// each family, never an address with itself), weighted by the product of the two
// payments' received value. Unlabeled payments are ignored. `clusters` is
// required when cluster_keyed is set.
OverlapMatrix family_overlap(std::span<const PaymentRecord> payments, const Chain& chain,
                             const OverlapOptions& options = {}, const ClusterAssignment* clusters = nullptr);

struct PercentileBucket {
  int bucket = 0;  // 1-based
  std::size_t payments = 0;
  Usd min_usd;
  Usd max_usd;
  double mean_affiliate_share = 0.0;
};

struct PercentileCurve {
  bool coarse = false;  // fewer than 10 splitting payments
  std::vector<PercentileBucket> buckets;
};

// Splitting payments ordered by USD total and cut into min(10, n) equal-count buckets.
PercentileCurve split_by_percentile(std::span<const PaymentRecord> payments, const SplitMap& splits);

void write_families_csv(std::ostream& out, std::span<const FamilyLabel> labeling);
void write_split_rates_csv(std::ostream& out, std::span<const FamilySplitRate> rates);
void write_timeseries_csv(std::ostream& out, std::span<const TimeSeriesPoint> series);
void write_central_tendency_csv(std::ostream& out, std::span<const CentralTendency> rows);
void write_dest_types_csv(std::ostream& out, std::span<const DestinationTypeRow> rows);
void write_overlap_csv(std::ostream& out, const OverlapMatrix& m);
void write_split_percentile_csv(std::ostream& out, const PercentileCurve& curve);

}  // namespace rwtrace

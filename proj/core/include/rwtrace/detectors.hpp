#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "rwtrace/chain.hpp"
#include "rwtrace/clustering.hpp"
#include "rwtrace/flowgraph.hpp"
#include "rwtrace/labels.hpp"
#include "rwtrace/payments.hpp"
#include "rwtrace/splitting.hpp"

namespace rwtrace {

struct DetectorConfig {
  double min_receipt_btc = 1.0;
  std::size_t max_incoming_txs = 5;
  // Criterion 3 of the expanded rule requires a share strictly greater than this.
  double low_risk_origin_share = 0.99;
  int hop_bound = 3;
  double nontrivial_share = 0.10;
  SplitOptions split;

  // Throws Error when a threshold is out of range.
  void validate() const;
  Satoshi min_receipt_sat() const;
};

// Read-only view shared by all detectors. Anchors are resolved to their clusters.
class DetectionContext {
 public:
  // Throws NotFound if either anchor address is absent from the chain.
  DetectionContext(const Chain& chain, const ClusterAssignment& clusters, const LabelSet& labels, const SeedSet& seeds,
                   const PriceTable* prices = nullptr, unsigned threads = 1);

  const Chain& chain() const noexcept { return *chain_; }
  const ClusterAssignment& clusters() const noexcept { return *clusters_; }
  const LabelSet& labels() const noexcept { return *labels_; }
  const LabelIndex& label_index() const noexcept { return label_index_; }
  const ClusterLabels& cluster_labels() const noexcept { return cluster_labels_; }
  const SeedSet& seeds() const noexcept { return *seeds_; }
  const PriceTable* prices() const noexcept { return prices_; }
  unsigned threads() const noexcept { return threads_; }

  ClusterId cluster_a() const noexcept { return cluster_a_; }
  ClusterId cluster_b() const noexcept { return cluster_b_; }
  bool is_anchor_cluster(ClusterId c) const noexcept { return c == cluster_a_ || c == cluster_b_; }
  bool is_ransomware_labeled(AddressId a) const noexcept { return label_index_.category(a) == Category::ransomware; }

  BacktraceOptions backtrace_options(int depth) const;
  PaymentRecord make_record(AddressId a, Provenance provenance) const;

 private:
  const Chain* chain_;
  const ClusterAssignment* clusters_;
  const LabelSet* labels_;
  const SeedSet* seeds_;
  const PriceTable* prices_;
  unsigned threads_;
  LabelIndex label_index_;
  ClusterLabels cluster_labels_;
  ClusterId cluster_a_ = kUnclustered;
  ClusterId cluster_b_ = kUnclustered;
};

struct RankedSource {
  ClusterId cluster = kExternalSource;
  std::string entity;  // label entity, "Cluster A"/"Cluster B", "external", or empty
  Category category = Category::unlabeled;
  double share = 0.0;     // mean backtrace share across traced seeds
  double payments = 0.0;  // share x traced seeds
};

struct SourceRanking {
  std::vector<RankedSource> rows;  // share descending
  std::size_t traced = 0;
  std::vector<std::string> skipped;  // seeds absent from the chain
};

SourceRanking rank_source_clusters(const std::vector<SeedRecord>& seeds, const DetectionContext& ctx, int depth = 3);

// Criteria of the origin-cluster rule for one address, evaluated independently.
CriteriaTrace evaluate_origin(AddressId a, const DetectionContext& ctx, const DetectorConfig& config);

// Addresses paid directly by the anchor clusters that satisfy every origin
// criterion, sorted by address. Seeds found again are flagged already_known.
std::vector<PaymentRecord> classify_origin_payments(const DetectorConfig& config, const DetectionContext& ctx);

// Share of value received at hop 1 from low-risk exchange clusters or the anchor clusters.
double low_risk_origin_share(AddressId a, const DetectionContext& ctx);

// Addresses receiving at least nontrivial_share of their inflow from known
// addresses within hop_bound hops (the "pools" the expanded rule links into).
std::set<AddressId> known_pools(const std::vector<AddressId>& known, const DetectionContext& ctx,
                                const DetectorConfig& config);

CriteriaTrace evaluate_expanded(AddressId a, const std::set<AddressId>& pools, const DetectionContext& ctx,
                                const DetectorConfig& config);

// Expanded-set rule over the candidates that can reach a pool within hop_bound
// hops. Throws Error when `known` is empty. Known addresses are never returned.
std::vector<PaymentRecord> classify_expanded(const DetectorConfig& config, const DetectionContext& ctx,
                                             const std::vector<std::string>& known);

}  // namespace rwtrace

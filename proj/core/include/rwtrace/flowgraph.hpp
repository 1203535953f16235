#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwtrace/chain.hpp"
#include "rwtrace/clustering.hpp"
#include "rwtrace/labels.hpp"

namespace rwtrace {

// Source bucket for funds whose provenance is unresolved or unlabeled-external.
inline constexpr ClusterId kExternalSource = std::numeric_limits<ClusterId>::max() - 1;

// Per-cluster label: the label of the earliest labeled member, if any.
class ClusterLabels {
 public:
  ClusterLabels() = default;
  ClusterLabels(const ClusterAssignment& assignment, const LabelIndex& labels);

  const LabelRecord* at(ClusterId c) const noexcept { return c < labels_.size() ? labels_[c] : nullptr; }
  Category category(ClusterId c) const noexcept {
    const LabelRecord* r = at(c);
    return r ? r->category : Category::unlabeled;
  }

 private:
  std::vector<const LabelRecord*> labels_;
};

struct BacktraceOptions {
  int depth = 3;
  // Tracing stops at labeled clusters and at these clusters (e.g. negotiator anchors).
  const ClusterLabels* labels = nullptr;
  std::vector<ClusterId> stop_clusters;
};

struct BacktraceEntry {
  ClusterId source = kExternalSource;
  double attributed_sat = 0.0;
  std::optional<double> attributed_usd;
  double share = 0.0;
};

// Walks funding transactions backwards up to `depth` hops, splitting each
// transaction's value pro rata over its inputs. Mass stops at a labeled or stop
// cluster, at the depth limit, or in the external bucket when the funding input is
// unresolved and unlabeled. Sorted by share descending, then source id.
// Throws NotFound for an address with no receipts.
std::vector<BacktraceEntry> backtrace(AddressId addr, const Chain& chain, const ClusterAssignment& assignment,
                                      const BacktraceOptions& options, const PriceTable* prices = nullptr);

struct ExposureEntry {
  std::uint32_t key = 0;  // AddressId, or ClusterId once rekeyed
  double weight = 0.0;
  int hop = 0;  // earliest hop at which mass came to rest here
};

// Forward attribution of an origin's outgoing funds. `weights` holds where each
// unit of mass comes to rest (unspent, absorbed, or at the hop bound); `reach`
// holds the mass that passed through each address at any hop. Both sorted by key.
struct ExposureVector {
  AddressId origin = kNoAddress;
  int hop_bound = 3;
  bool keyed_by_cluster = false;
  Satoshi outgoing = 0;
  double pruned = 0.0;
  std::vector<ExposureEntry> weights;
  std::vector<ExposureEntry> reach;

  bool empty() const noexcept { return weights.empty(); }
  double total_weight() const noexcept;
  double weight_of(std::uint32_t key) const noexcept;
  double reach_of(std::uint32_t key) const noexcept;
};

struct ExposureOptions {
  int hops = 3;
  double floor = 1e-4;
  // Optional per-address flag: mass reaching a flagged address stops there.
  const std::vector<char>* absorb = nullptr;
};

ExposureVector exposure(AddressId addr, const Chain& chain, const ExposureOptions& options = {});

// Sums weights by destination cluster.
ExposureVector rekey_by_cluster(const ExposureVector& v, const ClusterAssignment& assignment);

struct SharedExposure {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double score = 0.0;
};

// Weighted (Ruzicka) Jaccard: sum min / sum max over destination weights, each
// vector first multiplied by its scale (1 for the fractional form).
double shared_exposure_score(const ExposureVector& e1, const ExposureVector& e2, double scale1 = 1.0,
                             double scale2 = 1.0);

SharedExposure shared_exposure(AddressId a1, AddressId a2, const Chain& chain, const ExposureOptions& options = {});

void write_exposure_csv(std::ostream& out, const Chain& chain, std::span<const ExposureVector> vectors);

}  // namespace rwtrace

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "rwtrace/chain.hpp"

namespace rwtrace {

using ClusterId = std::uint32_t;
inline constexpr ClusterId kUnclustered = std::numeric_limits<ClusterId>::max();

// Disjoint-set forest with union by size and path halving.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0);

  std::size_t find(std::size_t x) noexcept;
  bool unite(std::size_t a, std::size_t b) noexcept;
  std::size_t size() const noexcept { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_size_;
};

// Partition of every observed address. Cluster ids are dense and ordered by the
// smallest (earliest first-seen) address id in each cluster.
class ClusterAssignment {
 public:
  ClusterAssignment() = default;
  ClusterAssignment(const Chain& chain, UnionFind& uf);

  ClusterId cluster_of(AddressId addr) const noexcept {
    return addr < cluster_.size() ? cluster_[addr] : kUnclustered;
  }
  std::size_t cluster_count() const noexcept { return members_.size(); }
  std::size_t address_count() const noexcept { return cluster_.size(); }
  const std::vector<AddressId>& members(ClusterId c) const { return members_.at(c); }
  std::size_t member_count(ClusterId c) const { return members_.at(c).size(); }
  Satoshi total_received(ClusterId c) const { return received_.at(c); }

  const std::vector<ClusterId>& raw() const noexcept { return cluster_; }

 private:
  std::vector<ClusterId> cluster_;
  std::vector<std::vector<AddressId>> members_;
  std::vector<Satoshi> received_;
};

// Union of all input addresses co-spent in any transaction.
ClusterAssignment cluster_multi_input(const Chain& chain);

// Multi-input clustering plus, when `enabled`, conservative change detection: in a
// transaction with at least two outputs, the single output whose address is first
// seen in that transaction (and not among its inputs) joins the spender's cluster,
// provided every other output pays a previously seen address.
ClusterAssignment cluster_with_change(const Chain& chain, bool enabled);

// Output index chosen as change by the rule above, if any.
std::optional<std::uint32_t> change_output(const Chain& chain, TxIndex tx);

// kUnclustered for addresses not in the chain.
ClusterId cluster_of(std::string_view address, const Chain& chain, const ClusterAssignment& assignment);

// CSV `address,cluster_id` in address-id order.
void write_cluster_csv(std::ostream& out, const Chain& chain, const ClusterAssignment& assignment);

}  // namespace rwtrace

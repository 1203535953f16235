#include "rwtrace/clustering.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace rwtrace {

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

std::size_t UnionFind::find(std::size_t x) noexcept {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::size_t a, std::size_t b) noexcept {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (rank_size_[a] < rank_size_[b]) std::swap(a, b);
  parent_[b] = a;
  rank_size_[a] += rank_size_[b];
  return true;
}

ClusterAssignment::ClusterAssignment(const Chain& chain, UnionFind& uf) {
  const std::size_t n = chain.address_count();
  cluster_.assign(n, kUnclustered);
  std::vector<ClusterId> root_to_cluster(n, kUnclustered);
  // Scanning ids in increasing order numbers clusters by their smallest member.
  for (AddressId a = 0; a < n; ++a) {
    std::size_t root = uf.find(a);
    if (root_to_cluster[root] == kUnclustered) {
      root_to_cluster[root] = static_cast<ClusterId>(members_.size());
      members_.emplace_back();
      received_.push_back(0);
    }
    ClusterId c = root_to_cluster[root];
    cluster_[a] = c;
    members_[c].push_back(a);
  }
  for (const Transaction& t : chain.transactions()) {
    for (const TxOutput& o : t.outputs) received_[cluster_[o.address]] += o.value;
  }
}

namespace {

void unite_inputs(const Transaction& t, UnionFind& uf) {
  AddressId first = kNoAddress;
  for (const TxInput& in : t.inputs) {
    if (in.address == kNoAddress) continue;
    if (first == kNoAddress) {
      first = in.address;
    } else {
      uf.unite(first, in.address);
    }
  }
}

}  // namespace

ClusterAssignment cluster_multi_input(const Chain& chain) {
  UnionFind uf(chain.address_count());
  for (const Transaction& t : chain.transactions()) unite_inputs(t, uf);
  return ClusterAssignment(chain, uf);
}

std::optional<std::uint32_t> change_output(const Chain& chain, TxIndex tx) {
  const Transaction& t = chain.tx(tx);
  if (t.outputs.size() < 2) return std::nullopt;
  AddressId spender = kNoAddress;
  for (const TxInput& in : t.inputs) {
    if (in.address != kNoAddress) {
      spender = in.address;
      break;
    }
  }
  if (spender == kNoAddress) return std::nullopt;

  std::optional<std::uint32_t> fresh;
  for (std::uint32_t o = 0; o < t.outputs.size(); ++o) {
    const AddressId a = t.outputs[o].address;
    const bool is_input = std::any_of(t.inputs.begin(), t.inputs.end(), [&](const TxInput& in) { return in.address == a; });
    const bool first_seen_here = chain.first_seen_tx(a) == tx && !is_input;
    if (!first_seen_here) continue;
    if (fresh) return std::nullopt;  // two fresh outputs: ambiguous
    fresh = o;
  }
  return fresh;
}

ClusterAssignment cluster_with_change(const Chain& chain, bool enabled) {
  UnionFind uf(chain.address_count());
  for (TxIndex i = 0; i < chain.size(); ++i) {
    const Transaction& t = chain.tx(i);
    unite_inputs(t, uf);
    if (!enabled) continue;
    if (auto o = change_output(chain, i)) {
      for (const TxInput& in : t.inputs) {
        if (in.address != kNoAddress) {
          uf.unite(in.address, t.outputs[*o].address);
          break;
        }
      }
    }
  }
  return ClusterAssignment(chain, uf);
}

ClusterId cluster_of(std::string_view address, const Chain& chain, const ClusterAssignment& assignment) {
  auto id = chain.find_address(address);
  return id ? assignment.cluster_of(*id) : kUnclustered;
}

void write_cluster_csv(std::ostream& out, const Chain& chain, const ClusterAssignment& assignment) {
  out << "address,cluster_id\n";
  for (AddressId a = 0; a < chain.address_count(); ++a) out << chain.address(a) << ',' << assignment.cluster_of(a) << '\n';
}

}  // namespace rwtrace

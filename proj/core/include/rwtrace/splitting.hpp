#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwtrace/chain.hpp"
#include "rwtrace/payments.hpp"

namespace rwtrace {

struct SplitOptions {
  int max_hops = 3;
  double tolerance = 0.0025;  // absolute, on the larger output's share
  int grid_min_pct = 50;
  int grid_max_pct = 95;
};

struct SplitFinding {
  AddressId payment = kNoAddress;
  TxIndex split_tx = 0;
  int hop = 0;
  double affiliate_share = 0.0;  // larger output / output sum
  double operator_share = 0.0;
  int grid_pct = 0;
};

// Follows the payment's largest spend, then the largest output of each transaction,
// for up to max_hops transactions. The first two-output transaction whose larger
// share lies within tolerance of an integer percent in [grid_min, grid_max] is the
// split. Throws NotFound for an unknown address.
std::optional<SplitFinding> detect_split(AddressId addr, const Chain& chain, const SplitOptions& options = {});

// Nearest grid percent within tolerance of `share`, if any.
std::optional<int> match_split_grid(double share, const SplitOptions& options = {});

struct ShareDistribution {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Linear-interpolated quartiles of a non-empty sample.
ShareDistribution describe(std::vector<double> values);

struct FamilySplitRate {
  std::string family;  // "unlabeled" for records without a family
  std::size_t payments = 0;
  std::size_t splitting = 0;
  double fraction = 0.0;
  std::optional<ShareDistribution> affiliate_shares;
};

// Keyed by payment address.
using SplitMap = std::map<std::string, SplitFinding>;

std::vector<FamilySplitRate> split_rate_by_family(std::span<const PaymentRecord> payments, const SplitMap& splits);

void write_splits_csv(std::ostream& out, const Chain& chain, const SplitMap& splits);

// Reads `address,split_tx,hop,affiliate_share,grid_pct`; split_tx indices are
// resolved against `chain`.
SplitMap read_splits_csv(std::istream& in, const Chain& chain, const std::string& source = "splits");

}  // namespace rwtrace

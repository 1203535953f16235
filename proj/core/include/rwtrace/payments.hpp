#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rwtrace/labels.hpp"
#include "rwtrace/prices.hpp"

namespace rwtrace {

// Per-criterion outcome. Origin-cluster records use all five flags; expanded
// records use c1..c3 for their three criteria and leave c4a/c4b false.
struct CriteriaTrace {
  bool c1 = false;
  bool c2 = false;
  bool c3 = false;
  bool c4a = false;
  bool c4b = false;
  friend bool operator==(const CriteriaTrace&, const CriteriaTrace&) = default;
};

struct PaymentRecord {
  std::string address;
  std::string family;  // empty = unlabeled
  Satoshi total_received = 0;
  Usd total_usd;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
  std::size_t incoming_tx_count = 0;
  Provenance provenance = Provenance::ransomwhere;
  CriteriaTrace criteria;
  bool already_known = false;  // re-found seed; excluded from the new datasets

  double total_btc() const noexcept { return static_cast<double>(total_received) / kSatPerBtc; }
  friend bool operator==(const PaymentRecord&, const PaymentRecord&) = default;
};

std::string format_timestamp(std::int64_t unix_seconds);  // YYYY-MM-DDTHH:MM:SSZ
std::int64_t parse_timestamp(std::string_view text);

// CSV `address,family,total_btc,total_usd,first_seen,last_seen,provenance,c1,c2,c3,c4a,c4b`.
void write_payments_csv(std::ostream& out, std::span<const PaymentRecord> payments);
std::vector<PaymentRecord> read_payments_csv(std::istream& in, const std::string& source = "payments");

}  // namespace rwtrace

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rwtrace/prices.hpp"

namespace rwtrace {

using AddressId = std::uint32_t;
using TxIndex = std::uint32_t;
inline constexpr AddressId kNoAddress = std::numeric_limits<AddressId>::max();

struct OutPoint {
  TxIndex tx = 0;
  std::uint32_t vout = 0;
  friend bool operator==(const OutPoint&, const OutPoint&) = default;
};

struct TxInput {
  std::string prev_txid;  // empty for explicit external inputs
  std::uint32_t prev_vout = 0;
  std::optional<OutPoint> resolved;  // set when the funding output is in the ingested set
  AddressId address = kNoAddress;    // kNoAddress when provenance is unknown
  Satoshi value = 0;

  bool external() const noexcept { return !resolved.has_value(); }
};

struct TxOutput {
  AddressId address = kNoAddress;
  Satoshi value = 0;
  std::optional<TxIndex> spent_by;
};

struct Transaction {
  std::string txid;
  std::int64_t timestamp = 0;
  std::uint64_t height = 0;
  std::vector<TxInput> inputs;
  std::vector<TxOutput> outputs;

  Satoshi input_total() const noexcept;
  Satoshi output_total() const noexcept;
  bool fully_resolved() const noexcept;
};

// Row-level representation produced by the parsers, before resolution.
struct RawInput {
  std::optional<std::string> ref_txid;
  std::uint32_t ref_vout = 0;
  std::string address;           // required for external inputs
  std::optional<Satoshi> value;  // required for external inputs
};

struct RawOutput {
  std::string address;
  Satoshi value = 0;
};

struct RawTransaction {
  std::string txid;
  std::int64_t timestamp = 0;
  std::uint64_t height = 0;
  std::vector<RawInput> inputs;
  std::vector<RawOutput> outputs;
  std::size_t line = 0;
};

enum class ChainFormat { jsonl, csv };

struct IngestReport {
  std::size_t transactions = 0;
  std::size_t addresses = 0;
  std::size_t resolved_inputs = 0;
  std::size_t external_inputs = 0;  // explicit {external_address, value_sat}
  std::size_t dangling_inputs = 0;  // {txid, vout} whose funding tx is absent
};

struct Receipt {
  TxIndex tx;
  std::uint32_t vout;
};

struct Spend {
  TxIndex tx;
  std::uint32_t vin;
};

// Immutable, indexed transaction graph. Transactions are stored in canonical
// (height, timestamp, txid) order so every index is independent of file row order.
// Address ids are dense and assigned in first-seen order over that sequence.
class Chain {
 public:
  Chain() = default;

  // Resolves references and builds indices. Throws ParseError on duplicate txids,
  // out-of-range vouts, double spends and value non-conservation.
  static Chain build(std::vector<RawTransaction> raw, const std::string& source = "chain");

  std::size_t size() const noexcept { return txs_.size(); }
  const Transaction& tx(TxIndex i) const { return txs_.at(i); }
  std::span<const Transaction> transactions() const noexcept { return txs_; }
  std::optional<TxIndex> find_tx(std::string_view txid) const;

  std::size_t address_count() const noexcept { return addresses_.size(); }
  const std::string& address(AddressId id) const { return addresses_.at(id); }
  std::optional<AddressId> find_address(std::string_view addr) const;

  std::span<const Receipt> receipts(AddressId id) const { return receipts_.at(id); }
  std::span<const Spend> spends(AddressId id) const { return spends_.at(id); }
  TxIndex first_seen_tx(AddressId id) const { return first_seen_.at(id); }

  const TxOutput& output(OutPoint op) const { return txs_.at(op.tx).outputs.at(op.vout); }

  const IngestReport& report() const noexcept { return report_; }

 private:
  std::vector<Transaction> txs_;
  std::unordered_map<std::string, TxIndex> tx_index_;
  std::vector<std::string> addresses_;
  std::unordered_map<std::string, AddressId> address_index_;
  std::vector<std::vector<Receipt>> receipts_;
  std::vector<std::vector<Spend>> spends_;
  std::vector<TxIndex> first_seen_;
  IngestReport report_;
};

std::vector<RawTransaction> parse_chain_jsonl(std::istream& in, const std::string& source = "chain");
std::vector<RawTransaction> parse_chain_csv(std::istream& in, const std::string& source = "chain");

Chain ingest_chain(std::istream& in, ChainFormat format, const std::string& source = "chain");
Chain ingest_chain(const std::filesystem::path& path, ChainFormat format);
// Picks the format from the extension (.jsonl/.json or .csv).
Chain ingest_chain(const std::filesystem::path& path);

void write_chain_jsonl(std::ostream& out, const Chain& chain);

struct AddressTotals {
  bool known = false;
  Satoshi total_received = 0;
  std::optional<Usd> total_usd;  // present when a price table was supplied
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
  std::size_t incoming_tx_count = 0;

  double total_btc() const noexcept { return static_cast<double>(total_received) / kSatPerBtc; }
};

// Sums confirmed receipts; USD is converted per receipt at that day's close.
AddressTotals address_totals(AddressId addr, const Chain& chain, const PriceTable* prices = nullptr);
AddressTotals address_totals(std::string_view addr, const Chain& chain, const PriceTable* prices = nullptr);

bool is_hex_txid(std::string_view s) noexcept;

}  // namespace rwtrace

#include "rwtrace/chain.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "rwtrace/csv.hpp"
#include "rwtrace/error.hpp"

namespace rwtrace {

using json = nlohmann::json;

Satoshi Transaction::input_total() const noexcept {
  Satoshi s = 0;
  for (const auto& in : inputs) s += in.value;
  return s;
}

Satoshi Transaction::output_total() const noexcept {
  Satoshi s = 0;
  for (const auto& out : outputs) s += out.value;
  return s;
}

bool Transaction::fully_resolved() const noexcept {
  return std::all_of(inputs.begin(), inputs.end(), [](const TxInput& in) { return in.resolved.has_value(); });
}

bool is_hex_txid(std::string_view s) noexcept {
  if (s.size() != 64) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
  });
}

std::optional<TxIndex> Chain::find_tx(std::string_view txid) const {
  auto it = tx_index_.find(std::string(txid));
  if (it == tx_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<AddressId> Chain::find_address(std::string_view addr) const {
  auto it = address_index_.find(std::string(addr));
  if (it == address_index_.end()) return std::nullopt;
  return it->second;
}

Chain Chain::build(std::vector<RawTransaction> raw, const std::string& source) {
  // Duplicate detection reports the later row in file order.
  {
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<std::size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a].line < raw[b].line; });
    for (std::size_t i : order) {
      auto [it, fresh] = seen.emplace(raw[i].txid, raw[i].line);
      if (!fresh) {
        throw ParseError(source, raw[i].line, "txid",
                         fmt::format("duplicate txid {} (first seen on line {})", raw[i].txid, it->second));
      }
    }
  }

  std::sort(raw.begin(), raw.end(), [](const RawTransaction& a, const RawTransaction& b) {
    if (a.height != b.height) return a.height < b.height;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.txid < b.txid;
  });

  Chain chain;
  chain.txs_.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) chain.tx_index_.emplace(raw[i].txid, static_cast<TxIndex>(i));

  auto intern = [&](const std::string& addr, TxIndex tx) -> AddressId {
    auto [it, fresh] = chain.address_index_.emplace(addr, static_cast<AddressId>(chain.addresses_.size()));
    if (fresh) {
      chain.addresses_.push_back(addr);
      chain.first_seen_.push_back(tx);
    }
    return it->second;
  };

  // Outputs first so that resolved inputs can point at interned addresses. Address ids
  // must still follow first-seen order, so interning happens in a second ordered pass.
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const RawTransaction& r = raw[i];
    Transaction& t = chain.txs_[i];
    t.txid = r.txid;
    t.timestamp = r.timestamp;
    t.height = r.height;
    t.outputs.resize(r.outputs.size());
    for (std::size_t o = 0; o < r.outputs.size(); ++o) t.outputs[o].value = r.outputs[o].value;
  }

  for (std::size_t i = 0; i < raw.size(); ++i) {
    const RawTransaction& r = raw[i];
    Transaction& t = chain.txs_[i];
    const auto ti = static_cast<TxIndex>(i);
    t.inputs.resize(r.inputs.size());
    for (std::size_t k = 0; k < r.inputs.size(); ++k) {
      const RawInput& ri = r.inputs[k];
      TxInput& in = t.inputs[k];
      const std::string field = fmt::format("inputs[{}]", k);
      if (ri.ref_txid) {
        in.prev_txid = *ri.ref_txid;
        in.prev_vout = ri.ref_vout;
        auto prev = chain.tx_index_.find(*ri.ref_txid);
        if (prev == chain.tx_index_.end()) {
          ++chain.report_.dangling_inputs;
          in.value = ri.value.value_or(0);
          continue;
        }
        const RawTransaction& pr = raw[prev->second];
        if (ri.ref_vout >= pr.outputs.size()) {
          throw ParseError(source, r.line, field + ".vout",
                           fmt::format("tx {} has no output {}", *ri.ref_txid, ri.ref_vout));
        }
        if (prev->second == ti) throw ParseError(source, r.line, field, "transaction spends its own output");
        TxOutput& funding = chain.txs_[prev->second].outputs[ri.ref_vout];
        if (funding.spent_by) {
          throw ParseError(source, r.line, field,
                           fmt::format("output {}:{} already spent by {}", *ri.ref_txid, ri.ref_vout,
                                       chain.txs_[*funding.spent_by].txid));
        }
        funding.spent_by = ti;
        in.resolved = OutPoint{prev->second, ri.ref_vout};
        in.value = pr.outputs[ri.ref_vout].value;
        ++chain.report_.resolved_inputs;
      } else {
        ++chain.report_.external_inputs;
        in.value = ri.value.value_or(0);
      }
    }
  }

  // Intern in canonical order: per transaction, inputs then outputs.
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const RawTransaction& r = raw[i];
    Transaction& t = chain.txs_[i];
    const auto ti = static_cast<TxIndex>(i);
    for (std::size_t k = 0; k < r.inputs.size(); ++k) {
      const RawInput& ri = r.inputs[k];
      TxInput& in = t.inputs[k];
      if (in.resolved) {
        const RawOutput& src = raw[in.resolved->tx].outputs[in.resolved->vout];
        in.address = intern(src.address, ti);
      } else if (!ri.address.empty()) {
        in.address = intern(ri.address, ti);
      }
    }
    for (std::size_t o = 0; o < r.outputs.size(); ++o) t.outputs[o].address = intern(r.outputs[o].address, ti);
  }

  for (std::size_t i = 0; i < raw.size(); ++i) {
    const Transaction& t = chain.txs_[i];
    bool values_known = true;
    for (std::size_t k = 0; k < t.inputs.size(); ++k) {
      values_known = values_known && (t.inputs[k].resolved || raw[i].inputs[k].value.has_value());
    }
    if (!t.inputs.empty() && values_known && t.input_total() < t.output_total()) {
      throw ParseError(source, raw[i].line, "outputs",
                       fmt::format("outputs ({}) exceed inputs ({})", t.output_total(), t.input_total()));
    }
  }

  chain.receipts_.resize(chain.addresses_.size());
  chain.spends_.resize(chain.addresses_.size());
  for (std::size_t i = 0; i < chain.txs_.size(); ++i) {
    const Transaction& t = chain.txs_[i];
    for (std::size_t k = 0; k < t.inputs.size(); ++k) {
      if (t.inputs[k].address != kNoAddress) {
        chain.spends_[t.inputs[k].address].push_back({static_cast<TxIndex>(i), static_cast<std::uint32_t>(k)});
      }
    }
    for (std::size_t o = 0; o < t.outputs.size(); ++o) {
      chain.receipts_[t.outputs[o].address].push_back({static_cast<TxIndex>(i), static_cast<std::uint32_t>(o)});
    }
  }

  chain.report_.transactions = chain.txs_.size();
  chain.report_.addresses = chain.addresses_.size();
  return chain;
}

namespace {

template <typename T>
T require(const json& obj, const char* key, const std::string& source, std::size_t line, const std::string& field) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, line, field, "missing");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(source, line, field, e.what());
  }
}

Satoshi require_value(const json& obj, const char* key, const std::string& source, std::size_t line,
                      const std::string& field) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, line, field, "missing");
  if (!it->is_number_integer()) throw ParseError(source, line, field, "value must be an integer satoshi amount");
  auto v = it->get<std::int64_t>();
  if (v < 0) throw ParseError(source, line, field, "negative value");
  return v;
}

void check_txid(const std::string& txid, const std::string& source, std::size_t line, const std::string& field) {
  if (!is_hex_txid(txid)) throw ParseError(source, line, field, fmt::format("'{}' is not a 32-byte hex id", txid));
}

}  // namespace

std::vector<RawTransaction> parse_chain_jsonl(std::istream& in, const std::string& source) {
  std::vector<RawTransaction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, "*", fmt::format("invalid JSON: {}", e.what()));
    }
    if (!obj.is_object()) throw ParseError(source, line_no, "*", "row is not a JSON object");

    RawTransaction tx;
    tx.line = line_no;
    tx.txid = require<std::string>(obj, "txid", source, line_no, "txid");
    check_txid(tx.txid, source, line_no, "txid");
    tx.timestamp = require<std::int64_t>(obj, "timestamp", source, line_no, "timestamp");
    if (tx.timestamp < 0) throw ParseError(source, line_no, "timestamp", "negative timestamp");
    auto height = require<std::int64_t>(obj, "height", source, line_no, "height");
    if (height < 0) throw ParseError(source, line_no, "height", "negative height");
    tx.height = static_cast<std::uint64_t>(height);

    auto inputs = obj.find("inputs");
    if (inputs == obj.end() || !inputs->is_array()) throw ParseError(source, line_no, "inputs", "missing array");
    for (std::size_t k = 0; k < inputs->size(); ++k) {
      const json& ij = (*inputs)[k];
      const std::string field = fmt::format("inputs[{}]", k);
      if (!ij.is_object()) throw ParseError(source, line_no, field, "not an object");
      RawInput ri;
      if (ij.contains("txid")) {
        ri.ref_txid = require<std::string>(ij, "txid", source, line_no, field + ".txid");
        check_txid(*ri.ref_txid, source, line_no, field + ".txid");
        auto vout = require<std::int64_t>(ij, "vout", source, line_no, field + ".vout");
        if (vout < 0) throw ParseError(source, line_no, field + ".vout", "negative vout");
        ri.ref_vout = static_cast<std::uint32_t>(vout);
        // Optional hints used only if the reference dangles.
        if (ij.contains("address")) ri.address = require<std::string>(ij, "address", source, line_no, field + ".address");
        if (ij.contains("value_sat")) ri.value = require_value(ij, "value_sat", source, line_no, field + ".value_sat");
      } else if (ij.contains("external_address")) {
        ri.address = require<std::string>(ij, "external_address", source, line_no, field + ".external_address");
        if (ri.address.empty()) throw ParseError(source, line_no, field + ".external_address", "empty address");
        ri.value = require_value(ij, "value_sat", source, line_no, field + ".value_sat");
      } else {
        throw ParseError(source, line_no, field, "expected {txid, vout} or {external_address, value_sat}");
      }
      tx.inputs.push_back(std::move(ri));
    }

    auto outputs = obj.find("outputs");
    if (outputs == obj.end() || !outputs->is_array()) throw ParseError(source, line_no, "outputs", "missing array");
    for (std::size_t o = 0; o < outputs->size(); ++o) {
      const json& oj = (*outputs)[o];
      const std::string field = fmt::format("outputs[{}]", o);
      if (!oj.is_object()) throw ParseError(source, line_no, field, "not an object");
      RawOutput ro;
      ro.address = require<std::string>(oj, "address", source, line_no, field + ".address");
      if (ro.address.empty()) throw ParseError(source, line_no, field + ".address", "empty address");
      ro.value = require_value(oj, "value_sat", source, line_no, field + ".value_sat");
      tx.outputs.push_back(std::move(ro));
    }
    out.push_back(std::move(tx));
  }
  return out;
}

std::vector<RawTransaction> parse_chain_csv(std::istream& in, const std::string& source) {
  csv::Reader r(in, source);
  if (r.header().empty()) return {};
  for (const char* col : {"txid", "timestamp", "height", "kind", "index", "ref_txid", "ref_vout", "address", "value_sat"}) {
    if (!r.has_column(col)) throw ParseError(source, 1, col, "missing column");
  }

  struct Pending {
    RawTransaction tx;
    std::map<std::uint64_t, RawInput> inputs;
    std::map<std::uint64_t, RawOutput> outputs;
  };
  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> by_txid;

  while (r.next()) {
    const std::string& txid = r.at("txid");
    check_txid(txid, source, r.line(), "txid");
    auto ts = r.as_int("timestamp");
    auto height = r.as_int("height");
    if (ts < 0) throw ParseError(source, r.line(), "timestamp", "negative timestamp");
    if (height < 0) throw ParseError(source, r.line(), "height", "negative height");

    auto [it, fresh] = by_txid.emplace(txid, pending.size());
    if (fresh) {
      Pending p;
      p.tx.txid = txid;
      p.tx.timestamp = ts;
      p.tx.height = static_cast<std::uint64_t>(height);
      p.tx.line = r.line();
      pending.push_back(std::move(p));
    }
    Pending& p = pending[it->second];
    if (p.tx.timestamp != ts) throw ParseError(source, r.line(), "timestamp", "inconsistent with earlier rows of this txid");
    if (p.tx.height != static_cast<std::uint64_t>(height)) {
      throw ParseError(source, r.line(), "height", "inconsistent with earlier rows of this txid");
    }

    const std::uint64_t index = r.as_uint("index");
    const std::string& kind = r.at("kind");
    auto value = [&] {
      auto v = r.as_int("value_sat");
      if (v < 0) throw ParseError(source, r.line(), "value_sat", "negative value");
      return static_cast<Satoshi>(v);
    };
    if (kind == "in") {
      RawInput ri;
      ri.ref_txid = r.at("ref_txid");
      check_txid(*ri.ref_txid, source, r.line(), "ref_txid");
      ri.ref_vout = static_cast<std::uint32_t>(r.as_uint("ref_vout"));
      if (!r.at("address").empty()) ri.address = r.at("address");
      if (!r.at("value_sat").empty()) ri.value = value();
      if (!p.inputs.emplace(index, std::move(ri)).second) throw ParseError(source, r.line(), "index", "duplicate input index");
    } else if (kind == "ext") {
      RawInput ri;
      ri.address = r.at("address");
      if (ri.address.empty()) throw ParseError(source, r.line(), "address", "empty address");
      ri.value = value();
      if (!p.inputs.emplace(index, std::move(ri)).second) throw ParseError(source, r.line(), "index", "duplicate input index");
    } else if (kind == "out") {
      RawOutput ro{r.at("address"), value()};
      if (ro.address.empty()) throw ParseError(source, r.line(), "address", "empty address");
      if (!p.outputs.emplace(index, std::move(ro)).second) throw ParseError(source, r.line(), "index", "duplicate output index");
    } else {
      throw ParseError(source, r.line(), "kind", fmt::format("unknown kind '{}', expected in|ext|out", kind));
    }
  }

  std::vector<RawTransaction> out;
  out.reserve(pending.size());
  for (Pending& p : pending) {
    std::uint64_t expect = 0;
    for (auto& [idx, ri] : p.inputs) {
      if (idx != expect++) throw ParseError(source, p.tx.line, "index", "input indices are not contiguous from 0");
      p.tx.inputs.push_back(std::move(ri));
    }
    expect = 0;
    for (auto& [idx, ro] : p.outputs) {
      if (idx != expect++) throw ParseError(source, p.tx.line, "index", "output indices are not contiguous from 0");
      p.tx.outputs.push_back(std::move(ro));
    }
    out.push_back(std::move(p.tx));
  }
  return out;
}

Chain ingest_chain(std::istream& in, ChainFormat format, const std::string& source) {
  auto raw = format == ChainFormat::jsonl ? parse_chain_jsonl(in, source) : parse_chain_csv(in, source);
  return Chain::build(std::move(raw), source);
}

Chain ingest_chain(const std::filesystem::path& path, ChainFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open chain file {}", path.string()));
  return ingest_chain(in, format, path.string());
}

Chain ingest_chain(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (ext == ".csv") return ingest_chain(path, ChainFormat::csv);
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return ingest_chain(path, ChainFormat::jsonl);
  throw Error(fmt::format("cannot infer chain format from '{}'; use .jsonl or .csv", path.string()));
}

void write_chain_jsonl(std::ostream& out, const Chain& chain) {
  for (const Transaction& t : chain.transactions()) {
    json obj;
    obj["txid"] = t.txid;
    obj["timestamp"] = t.timestamp;
    obj["height"] = t.height;
    json inputs = json::array();
    for (const TxInput& in : t.inputs) {
      if (!in.prev_txid.empty()) {
        json ref = {{"txid", in.prev_txid}, {"vout", in.prev_vout}};
        if (!in.resolved) {
          if (in.address != kNoAddress) ref["address"] = chain.address(in.address);
          ref["value_sat"] = in.value;
        }
        inputs.push_back(std::move(ref));
      } else {
        inputs.push_back({{"external_address", chain.address(in.address)}, {"value_sat", in.value}});
      }
    }
    json outputs = json::array();
    for (const TxOutput& o : t.outputs) outputs.push_back({{"address", chain.address(o.address)}, {"value_sat", o.value}});
    obj["inputs"] = std::move(inputs);
    obj["outputs"] = std::move(outputs);
    out << obj.dump() << '\n';
  }
}

AddressTotals address_totals(AddressId addr, const Chain& chain, const PriceTable* prices) {
  AddressTotals totals;
  if (addr == kNoAddress || addr >= chain.address_count()) return totals;
  totals.known = true;
  if (prices) totals.total_usd = Usd{};
  TxIndex last_tx = std::numeric_limits<TxIndex>::max();
  bool first = true;
  for (const Receipt& r : chain.receipts(addr)) {
    const Transaction& t = chain.tx(r.tx);
    const Satoshi v = t.outputs[r.vout].value;
    totals.total_received += v;
    if (prices) *totals.total_usd += usd_value(v, date_of(t.timestamp), *prices);
    if (first || t.timestamp < totals.first_seen) totals.first_seen = t.timestamp;
    if (first || t.timestamp > totals.last_seen) totals.last_seen = t.timestamp;
    first = false;
    if (r.tx != last_tx) {
      ++totals.incoming_tx_count;
      last_tx = r.tx;
    }
  }
  return totals;
}

AddressTotals address_totals(std::string_view addr, const Chain& chain, const PriceTable* prices) {
  auto id = chain.find_address(addr);
  if (!id) return AddressTotals{};
  return address_totals(*id, chain, prices);
}

}  // namespace rwtrace

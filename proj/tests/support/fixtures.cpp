#include "fixtures.hpp"

#include <sstream>

#include <fmt/core.h>

namespace rwtrace::testing {

std::string txid(std::uint64_t n) { return fmt::format("{:064x}", n + 0xabc0000); }

RawInput spend(std::uint64_t tx, std::uint32_t vout) {
  RawInput in;
  in.ref_txid = txid(tx);
  in.ref_vout = vout;
  return in;
}

RawInput external(std::string address, Satoshi value) {
  RawInput in;
  in.address = std::move(address);
  in.value = value;
  return in;
}

RawInput dangling(std::uint64_t tx, Satoshi value) {
  RawInput in = spend(tx, 0);
  in.value = value;
  return in;
}

RawTransaction& ChainSpec::add(std::uint64_t id, std::vector<RawInput> inputs, std::vector<RawOutput> outputs) {
  return add_at(id, static_cast<std::int64_t>(1000 * id) + 1'600'000'000, std::move(inputs), std::move(outputs));
}

RawTransaction& ChainSpec::add_at(std::uint64_t id, std::int64_t ts, std::vector<RawInput> inputs,
                                  std::vector<RawOutput> outputs) {
  RawTransaction t;
  t.txid = txid(id);
  t.timestamp = ts;
  t.height = static_cast<std::uint64_t>(ts / 600);
  t.inputs = std::move(inputs);
  t.outputs = std::move(outputs);
  t.line = txs_.size() + 1;
  txs_.push_back(std::move(t));
  return txs_.back();
}

std::string ChainSpec::jsonl() const {
  std::ostringstream s;
  write_chain_jsonl(s, build());
  return s.str();
}

std::string address_name(std::size_t i) { return fmt::format("addr{:05d}", i); }

std::vector<RawTransaction> random_chain(std::uint64_t seed, const RandomChainOptions& o) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  struct Utxo {
    std::uint64_t tx;
    std::uint32_t vout;
    Satoshi value;
  };
  std::vector<Utxo> pool;
  ChainSpec spec;
  for (std::uint64_t id = 0; id < o.txs; ++id) {
    std::vector<RawInput> ins;
    Satoshi total = 0;
    if (pool.empty() || std::uniform_real_distribution<double>(0, 1)(rng) < o.coinbase_rate) {
      const Satoshi v = 100'000 + static_cast<Satoshi>(pick(10'000'000));
      ins.push_back(external(address_name(pick(o.addresses)), v));
      total = v;
    } else {
      const std::size_t k = 1 + pick(std::min(o.max_inputs, pool.size()));
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t at = pick(pool.size());
        ins.push_back(spend(pool[at].tx, pool[at].vout));
        total += pool[at].value;
        pool[at] = pool.back();
        pool.pop_back();
      }
    }
    const std::size_t n = 1 + pick(o.max_outputs);
    std::vector<RawOutput> outs;
    Satoshi left = total - std::min<Satoshi>(total / 100, 500);
    for (std::size_t j = 0; j < n; ++j) {
      const Satoshi v = j + 1 == n ? left : left / 2 + static_cast<Satoshi>(pick(static_cast<std::size_t>(left / 4 + 1)));
      left -= v;
      outs.push_back({address_name(pick(o.addresses)), v});
    }
    for (std::uint32_t j = 0; j < outs.size(); ++j) {
      if (outs[j].value > 0) pool.push_back({id, j, outs[j].value});
    }
    spec.add(id, std::move(ins), std::move(outs));
  }
  return std::move(spec.raw());
}

}  // namespace rwtrace::testing

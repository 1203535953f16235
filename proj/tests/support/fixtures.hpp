#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rwtrace/chain.hpp"

namespace rwtrace::testing {

// Deterministic 64-hex txid for a small integer id.
std::string txid(std::uint64_t n);

RawInput spend(std::uint64_t tx, std::uint32_t vout);
RawInput external(std::string address, Satoshi value);
RawInput dangling(std::uint64_t tx, Satoshi value);

// Transactions keyed by small integer ids; the timestamp defaults to 1000 * id so
// that the id order is the chain order.
class ChainSpec {
 public:
  RawTransaction& add(std::uint64_t id, std::vector<RawInput> inputs, std::vector<RawOutput> outputs);
  RawTransaction& add_at(std::uint64_t id, std::int64_t ts, std::vector<RawInput> inputs,
                         std::vector<RawOutput> outputs);

  std::vector<RawTransaction>& raw() { return txs_; }
  Chain build() const { return Chain::build(txs_, "fixture"); }
  std::string jsonl() const;

 private:
  std::vector<RawTransaction> txs_;
};

struct RandomChainOptions {
  std::size_t txs = 200;
  std::size_t addresses = 120;
  std::size_t max_inputs = 3;
  std::size_t max_outputs = 3;
  double coinbase_rate = 0.15;
};

// Random acyclic chain: every transaction spends earlier unspent outputs (or is
// funded externally) and pays addresses drawn from a fixed pool, so addresses are
// reused and clusters overlap.
std::vector<RawTransaction> random_chain(std::uint64_t seed, const RandomChainOptions& options = {});

std::string address_name(std::size_t i);

}  // namespace rwtrace::testing

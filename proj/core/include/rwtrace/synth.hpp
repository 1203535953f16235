#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rwtrace/chain.hpp"
#include "rwtrace/labels.hpp"
#include "rwtrace/prices.hpp"

namespace rwtrace::synth {

struct FamilySpec {
  std::string name;
  std::size_t seeds = 0;     // ransomwhere seed payments
  std::size_t orig = 0;      // payments from the anchor clusters, planted to pass the origin rule
  std::size_t expanded = 0;  // exchange-funded payments linked to known pools
  bool labeled = true;       // operator pool carries a detector label
  std::string feeder;        // labeled treasury family paying an unlabeled pool
  std::string pool_group;    // families sharing a downstream consolidation address
  double split_rate = 0.5;   // seeds and origin payments; expanded payments always split
  std::vector<int> split_grid{70, 75, 80, 85, 90};
};

struct SourceShares {
  double cluster_a = 0.37;
  double cluster_b = 0.04;
  double gemini = 0.22;
  double binance = 0.18;
  double coinbase = 0.15;
  double total() const noexcept { return cluster_a + cluster_b + gemini + binance + coinbase; }
};

struct DecoyCounts {
  std::size_t otc_no_link = 100;
  std::size_t otc_link_no_split = 50;
  std::size_t otc_split_no_link = 50;
  std::size_t exchange_round_split = 20;
  std::size_t exchange_95_5 = 20;
  std::size_t exchange_mixed_origin = 20;
  std::size_t irregular = 50;
};

struct RetailConfig {
  std::size_t wallets = 200;
  std::size_t txs = 2000;
  std::size_t max_inputs = 3;
  std::size_t max_initial_addresses = 4;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  double scale = 1.0;  // multiplies every family and decoy count
  std::vector<FamilySpec> families;
  SourceShares sources;
  std::size_t refound = 0;          // anchor-funded seeds planted to pass the origin rule
  double orig_cluster_b_share = 0.1;
  double mixer_share = 0.42;
  std::size_t cluster_a_size = 500;
  std::size_t cluster_b_size = 50;
  std::size_t exchange_size = 20;
  DecoyCounts decoys;
  RetailConfig retail;
  std::string start_date = "2019-01-01";
  std::string end_date = "2024-02-29";
  std::vector<std::pair<std::string, double>> price_points;  // date -> USD, linearly interpolated
  std::map<int, double> mean_usd_by_year;
  double size_sigma = 0.9;
  std::map<std::string, double> month_weights;  // "YYYY-MM" -> relative weight (default 1)

  // Throws Error on infeasible settings (shares above 1, grid outside [50, 95], ...).
  void validate() const;

  static ScenarioConfig paper_shape(std::uint64_t seed = 1);
  // Retail traffic only, for clustering fixtures.
  static ScenarioConfig retail_only(std::uint64_t seed, std::size_t txs, std::size_t wallets);
  static ScenarioConfig empty(std::uint64_t seed = 1);

  static ScenarioConfig from_json(std::string_view text);
  static ScenarioConfig load(const std::filesystem::path& path);
  std::string to_json() const;
};

struct PlantedPayment {
  std::string address;
  std::string family;
  Provenance dataset = Provenance::ransomwhere;
  std::string source;  // entity name, or "external"
  bool satisfies_origin = false;  // anchor-funded and planted to meet every origin criterion
  bool linkable = false;          // planted to meet every expanded criterion
  std::string fail_reason;        // anchor-funded seeds planted to fail: "below_min" or "too_many_txs"
  Satoshi total_sat = 0;
  Usd total_usd;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
  std::size_t incoming_tx_count = 0;
  bool split = false;
  int grid_pct = 0;
  std::string split_txid;
  std::string operator_pool;
  std::string group_pool;
  std::string affiliate;
  std::string cashout;
  Category cashout_category = Category::unlabeled;
  bool mixer = false;
};

struct PlantedDecoy {
  std::string address;
  std::string kind;
};

struct PlantedEntity {
  std::string name;
  std::string role;  // "negotiator", "exchange", "mixer"
  Category category = Category::unlabeled;
  std::vector<std::string> members;
};

struct PlantedPool {
  std::string family;
  std::string operator_pool;
  std::string group_pool;
  bool labeled = false;
  std::string treasury;  // feeder treasury address, if any
};

struct ChangeTag {
  std::string txid;
  std::string address;
};

struct Manifest {
  std::uint64_t seed = 0;
  std::size_t tx_count = 0;
  std::size_t address_count = 0;
  std::vector<PlantedEntity> entities;
  std::vector<PlantedPool> pools;
  std::vector<PlantedPayment> payments;
  std::vector<PlantedDecoy> decoys;
  std::vector<ChangeTag> change_outputs;
  std::vector<std::string> victims;

  const PlantedEntity* entity(std::string_view name) const;
  std::string to_json() const;
};

struct Scenario {
  std::vector<RawTransaction> transactions;  // timestamp order
  PriceTable prices;
  LabelSet labels;              // detector labels
  LabelSet independent_labels;  // validation labels, distinct source tag
  SeedSet seeds;                // ransomwhere seeds only
  SeedSet dataset;              // every planted payment tagged with its dataset
  Manifest manifest;
};

// Deterministic in config.seed. Throws Error for infeasible configs before generating.
Scenario generate(const ScenarioConfig& config);

// Writes chain.jsonl, prices.csv, labels.csv, labels_independent.csv, seeds.csv,
// dataset.csv and manifest.json into `dir` (created if needed).
void write_scenario(const Scenario& scenario, const std::filesystem::path& dir);

inline constexpr std::string_view kDetectorLabelSource = "vendor-a";
inline constexpr std::string_view kIndependentLabelSource = "vendor-b";

}  // namespace rwtrace::synth

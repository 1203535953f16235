#include "rwtrace/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "rwtrace/error.hpp"

namespace rwtrace::synth {

using ojson = nlohmann::ordered_json;

namespace {

std::int64_t day_start(Date d) {
  return std::chrono::duration_cast<std::chrono::seconds>(d.time_since_epoch()).count();
}

std::size_t scaled(std::size_t n, double scale) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * scale));
}

// Largest-remainder apportionment of n items over the given weights.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& weights) {
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] * static_cast<double>(n);
    out[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    used += out[i];
    rem.emplace_back(exact - static_cast<double>(out[i]), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n && k < rem.size(); ++k, ++used) ++out[rem[k].second];
  return out;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!(scale >= 0.0)) throw Error("scale must be non-negative");
  for (double s : {sources.cluster_a, sources.cluster_b, sources.gemini, sources.binance, sources.coinbase}) {
    if (s < 0.0) throw Error("source shares must be non-negative");
  }
  if (sources.total() > 1.0 + 1e-9) throw Error(fmt::format("source shares sum to {} (> 1)", sources.total()));
  for (double f : {orig_cluster_b_share, mixer_share}) {
    if (f < 0.0 || f > 1.0) throw Error("fractions must lie in [0, 1]");
  }
  if (cluster_a_size == 0 || cluster_b_size == 0 || exchange_size == 0) throw Error("entity sizes must be positive");
  if (!(size_sigma > 0.0)) throw Error("size_sigma must be positive");
  const Date start = parse_date(start_date), end = parse_date(end_date);
  if (!(start < end)) throw Error("start_date must precede end_date");
  for (const auto& [d, p] : price_points) {
    parse_date(d);
    if (!(p > 0.0)) throw Error("prices must be positive");
  }
  std::set<std::string> names;
  for (const auto& f : families) {
    if (f.name.empty()) throw Error("family name must not be empty");
    if (!names.insert(f.name).second) throw Error(fmt::format("duplicate family {}", f.name));
    if (f.split_rate < 0.0 || f.split_rate > 1.0) throw Error(fmt::format("{}: split_rate must lie in [0, 1]", f.name));
    if (f.split_grid.empty()) throw Error(fmt::format("{}: split grid is empty", f.name));
    for (int g : f.split_grid) {
      if (g < 50 || g > 95) throw Error(fmt::format("{}: split grid value {} outside [50, 95]", f.name, g));
    }
    if (f.expanded > 0 && std::none_of(f.split_grid.begin(), f.split_grid.end(), [](int g) { return g <= 85; })) {
      throw Error(fmt::format("{}: expanded payments need a grid value of at most 85", f.name));
    }
    if (!f.labeled && f.feeder.empty() && (f.orig > 0 || f.seeds > 0)) {
      throw Error(fmt::format("{}: an unlabeled family needs a feeder treasury", f.name));
    }
  }
}

ScenarioConfig ScenarioConfig::empty(std::uint64_t seed) {
  ScenarioConfig c;
  c.seed = seed;
  c.decoys = DecoyCounts{0, 0, 0, 0, 0, 0, 0};
  c.retail = RetailConfig{0, 0, 3, 4};
  c.cluster_a_size = 5;
  c.cluster_b_size = 5;
  c.exchange_size = 5;
  return c;
}

ScenarioConfig ScenarioConfig::retail_only(std::uint64_t seed, std::size_t txs, std::size_t wallets) {
  ScenarioConfig c = empty(seed);
  c.retail.txs = txs;
  c.retail.wallets = wallets;
  return c;
}

ScenarioConfig ScenarioConfig::paper_shape(std::uint64_t seed) {
  ScenarioConfig c;
  c.seed = seed;
  auto fam = [](std::string name, std::size_t s, std::size_t o, std::size_t e, double rate) {
    FamilySpec f;
    f.name = std::move(name);
    f.seeds = s;
    f.orig = o;
    f.expanded = e;
    f.split_rate = rate;
    return f;
  };
  c.families = {fam("Conti", 102, 130, 80, 0.6),      fam("NetWalker", 66, 84, 17, 0.7),
                fam("Ryuk", 25, 9, 7, 0.5),           fam("MedusaLocker", 21, 12, 6, 0.4),
                fam("Egregor", 9, 14, 3, 0.5),        fam("DarkSide", 3, 16, 7, 0.6),
                fam("LockBit 2.0", 2, 15, 6, 0.6),    fam("SamSam", 23, 0, 1, 0.3),
                fam("Cuba", 17, 1, 1, 0.4),           fam("Hive", 1, 15, 2, 0.5),
                fam("REvil", 23, 80, 60, 0.55),       fam("BlackMatter", 0, 50, 40, 0.6),
                fam("Avaddon", 0, 39, 26, 0.5)};
  for (auto& f : c.families) {
    if (f.name == "Ryuk") {
      f.labeled = false;
      f.feeder = "Conti";
      f.pool_group = "Conti";
    } else if (f.name == "Egregor") {
      f.labeled = false;
      f.feeder = "Maze";
    } else if (f.name == "Conti") {
      f.pool_group = "Conti";
    } else if (f.name == "DarkSide" || f.name == "LockBit 2.0") {
      f.pool_group = "DarkSide";
    }
  }
  c.refound = 76;
  c.mixer_share = 0.42;
  c.price_points = {{"2019-01-01", 3800},  {"2019-06-30", 11000}, {"2020-03-15", 5000},  {"2020-12-31", 29000},
                    {"2021-04-15", 63000}, {"2021-07-20", 30000}, {"2021-11-10", 67000}, {"2022-06-18", 19000},
                    {"2022-12-31", 16500}, {"2023-06-30", 30000}, {"2023-12-31", 42000}, {"2024-03-01", 62000}};
  c.mean_usd_by_year = {{2019, 250000}, {2020, 500000},  {2021, 1000000},
                        {2022, 2500000}, {2023, 1500000}, {2024, 1500000}};
  c.month_weights = {{"2020-11", 4}, {"2020-12", 4}, {"2021-01", 4}, {"2021-02", 4}, {"2022-06", 4}, {"2022-07", 4}};
  return c;
}

std::string ScenarioConfig::to_json() const {
  ojson j;
  j["seed"] = seed;
  j["scale"] = scale;
  ojson fams = ojson::array();
  for (const auto& f : families) {
    fams.push_back({{"name", f.name},
                    {"seeds", f.seeds},
                    {"orig", f.orig},
                    {"expanded", f.expanded},
                    {"labeled", f.labeled},
                    {"feeder", f.feeder},
                    {"pool_group", f.pool_group},
                    {"split_rate", f.split_rate},
                    {"split_grid", f.split_grid}});
  }
  j["families"] = fams;
  j["sources"] = {{"cluster_a", sources.cluster_a},
                  {"cluster_b", sources.cluster_b},
                  {"gemini", sources.gemini},
                  {"binance", sources.binance},
                  {"coinbase", sources.coinbase}};
  j["refound"] = refound;
  j["orig_cluster_b_share"] = orig_cluster_b_share;
  j["mixer_share"] = mixer_share;
  j["cluster_a_size"] = cluster_a_size;
  j["cluster_b_size"] = cluster_b_size;
  j["exchange_size"] = exchange_size;
  j["decoys"] = {{"otc_no_link", decoys.otc_no_link},
                 {"otc_link_no_split", decoys.otc_link_no_split},
                 {"otc_split_no_link", decoys.otc_split_no_link},
                 {"exchange_round_split", decoys.exchange_round_split},
                 {"exchange_95_5", decoys.exchange_95_5},
                 {"exchange_mixed_origin", decoys.exchange_mixed_origin},
                 {"irregular", decoys.irregular}};
  j["retail"] = {{"wallets", retail.wallets},
                 {"txs", retail.txs},
                 {"max_inputs", retail.max_inputs},
                 {"max_initial_addresses", retail.max_initial_addresses}};
  j["start_date"] = start_date;
  j["end_date"] = end_date;
  ojson pts = ojson::array();
  for (const auto& [d, p] : price_points) pts.push_back({{"date", d}, {"usd", p}});
  j["price_points"] = pts;
  ojson means = ojson::object();
  for (const auto& [y, m] : mean_usd_by_year) means[std::to_string(y)] = m;
  j["mean_usd_by_year"] = means;
  j["size_sigma"] = size_sigma;
  j["month_weights"] = month_weights;
  return j.dump(2) + "\n";
}

ScenarioConfig ScenarioConfig::from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::exception& e) {
    throw Error(fmt::format("scenario config: {}", e.what()));
  }
  ScenarioConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.scale = j.value("scale", c.scale);
    if (j.contains("families")) {
      for (const auto& f : j.at("families")) {
        FamilySpec s;
        s.name = f.at("name").get<std::string>();
        s.seeds = f.value("seeds", s.seeds);
        s.orig = f.value("orig", s.orig);
        s.expanded = f.value("expanded", s.expanded);
        s.labeled = f.value("labeled", s.labeled);
        s.feeder = f.value("feeder", s.feeder);
        s.pool_group = f.value("pool_group", s.pool_group);
        s.split_rate = f.value("split_rate", s.split_rate);
        s.split_grid = f.value("split_grid", s.split_grid);
        c.families.push_back(std::move(s));
      }
    }
    if (j.contains("sources")) {
      const auto& s = j.at("sources");
      c.sources.cluster_a = s.value("cluster_a", c.sources.cluster_a);
      c.sources.cluster_b = s.value("cluster_b", c.sources.cluster_b);
      c.sources.gemini = s.value("gemini", c.sources.gemini);
      c.sources.binance = s.value("binance", c.sources.binance);
      c.sources.coinbase = s.value("coinbase", c.sources.coinbase);
    }
    c.refound = j.value("refound", c.refound);
    c.orig_cluster_b_share = j.value("orig_cluster_b_share", c.orig_cluster_b_share);
    c.mixer_share = j.value("mixer_share", c.mixer_share);
    c.cluster_a_size = j.value("cluster_a_size", c.cluster_a_size);
    c.cluster_b_size = j.value("cluster_b_size", c.cluster_b_size);
    c.exchange_size = j.value("exchange_size", c.exchange_size);
    if (j.contains("decoys")) {
      const auto& d = j.at("decoys");
      c.decoys.otc_no_link = d.value("otc_no_link", c.decoys.otc_no_link);
      c.decoys.otc_link_no_split = d.value("otc_link_no_split", c.decoys.otc_link_no_split);
      c.decoys.otc_split_no_link = d.value("otc_split_no_link", c.decoys.otc_split_no_link);
      c.decoys.exchange_round_split = d.value("exchange_round_split", c.decoys.exchange_round_split);
      c.decoys.exchange_95_5 = d.value("exchange_95_5", c.decoys.exchange_95_5);
      c.decoys.exchange_mixed_origin = d.value("exchange_mixed_origin", c.decoys.exchange_mixed_origin);
      c.decoys.irregular = d.value("irregular", c.decoys.irregular);
    }
    if (j.contains("retail")) {
      const auto& r = j.at("retail");
      c.retail.wallets = r.value("wallets", c.retail.wallets);
      c.retail.txs = r.value("txs", c.retail.txs);
      c.retail.max_inputs = r.value("max_inputs", c.retail.max_inputs);
      c.retail.max_initial_addresses = r.value("max_initial_addresses", c.retail.max_initial_addresses);
    }
    c.start_date = j.value("start_date", c.start_date);
    c.end_date = j.value("end_date", c.end_date);
    if (j.contains("price_points")) {
      for (const auto& p : j.at("price_points")) {
        c.price_points.emplace_back(p.at("date").get<std::string>(), p.at("usd").get<double>());
      }
    }
    if (j.contains("mean_usd_by_year")) {
      for (const auto& [k, v] : j.at("mean_usd_by_year").items()) c.mean_usd_by_year[std::stoi(k)] = v.get<double>();
    }
    c.size_sigma = j.value("size_sigma", c.size_sigma);
    if (j.contains("month_weights")) {
      for (const auto& [k, v] : j.at("month_weights").items()) c.month_weights[k] = v.get<double>();
    }
  } catch (const ojson::exception& e) {
    throw Error(fmt::format("scenario config: {}", e.what()));
  } catch (const std::invalid_argument&) {
    throw Error("scenario config: mean_usd_by_year keys must be years");
  }
  return c;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open scenario config {}", path.string()));
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

const PlantedEntity* Manifest::entity(std::string_view name) const {
  for (const auto& e : entities) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::string Manifest::to_json() const {
  ojson j;
  j["seed"] = seed;
  j["tx_count"] = tx_count;
  j["address_count"] = address_count;
  ojson ents = ojson::array();
  for (const auto& e : entities) {
    ents.push_back(
        {{"name", e.name}, {"role", e.role}, {"category", std::string(to_string(e.category))}, {"members", e.members}});
  }
  j["entities"] = ents;
  ojson pools_j = ojson::array();
  for (const auto& p : pools) {
    pools_j.push_back({{"family", p.family},
                       {"operator_pool", p.operator_pool},
                       {"group_pool", p.group_pool},
                       {"labeled", p.labeled},
                       {"treasury", p.treasury}});
  }
  j["pools"] = pools_j;
  ojson pays = ojson::array();
  for (const auto& p : payments) {
    ojson o = {{"address", p.address},
               {"family", p.family},
               {"dataset", std::string(to_string(p.dataset))},
               {"source", p.source},
               {"satisfies_origin", p.satisfies_origin},
               {"linkable", p.linkable},
               {"fail_reason", p.fail_reason},
               {"total_sat", p.total_sat},
               {"total_usd_cents", p.total_usd.cents},
               {"first_seen", p.first_seen},
               {"last_seen", p.last_seen},
               {"incoming_tx_count", p.incoming_tx_count},
               {"split", p.split},
               {"grid_pct", p.grid_pct},
               {"split_txid", p.split_txid},
               {"operator_pool", p.operator_pool},
               {"group_pool", p.group_pool},
               {"affiliate", p.affiliate},
               {"cashout", p.cashout},
               {"cashout_category", std::string(to_string(p.cashout_category))},
               {"mixer", p.mixer}};
    pays.push_back(std::move(o));
  }
  j["payments"] = pays;
  ojson decs = ojson::array();
  for (const auto& d : decoys) decs.push_back({{"address", d.address}, {"kind", d.kind}});
  j["decoys"] = decs;
  ojson ch = ojson::array();
  for (const auto& c : change_outputs) ch.push_back({{"txid", c.txid}, {"address", c.address}});
  j["change_outputs"] = ch;
  j["victims"] = victims;
  return j.dump(2) + "\n";
}

namespace {

constexpr std::string_view kBase58 = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";
constexpr std::string_view kBech32 = "qpzry9x8gf2tvdw0s3jn54khce6mua7l";

struct Coin {
  std::string txid;
  std::uint32_t vout = 0;
  std::string address;
  Satoshi value = 0;
  double time = 0;
};

struct Entity {
  PlantedEntity info;
};

struct Family {
  const FamilySpec* spec = nullptr;
  std::string pool;
  std::string group_pool;
  std::vector<int> expanded_grid;
};

struct Receipts {
  std::vector<std::pair<std::string, std::uint32_t>> outpoints;
};

class Generator {
 public:
  explicit Generator(const ScenarioConfig& config) : cfg_(config), rng_(config.seed) {}

  Scenario run();

 private:
  // ---- primitives
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  int randint(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }

  std::string fresh_address() {
    for (;;) {
      std::string a;
      if (uniform(0, 1) < 0.7) {
        a = "1";
        for (int i = 0; i < 33; ++i) a += kBase58[pick(kBase58.size())];
      } else {
        a = "bc1q";
        for (int i = 0; i < 38; ++i) a += kBech32[pick(kBech32.size())];
      }
      if (used_.insert(a).second) return a;
    }
  }

  std::string fresh_txid() {
    for (;;) {
      std::string t;
      for (int i = 0; i < 4; ++i) t += fmt::format("{:016x}", rng_());
      if (txids_.insert(t).second) return t;
    }
  }

  RawInput spend(const Coin& c) {
    RawInput in;
    in.ref_txid = c.txid;
    in.ref_vout = c.vout;
    return in;
  }

  static RawInput external(const std::string& address, Satoshi value) {
    RawInput in;
    in.address = address;
    in.value = value;
    return in;
  }

  RawInput dangling(Satoshi value) {
    RawInput in;
    in.ref_txid = fresh_txid();
    in.ref_vout = 0;
    in.value = value;
    return in;
  }

  Satoshi small_fee(Satoshi value) { return std::min<Satoshi>(value / 1000, randint(500, 3000)); }

  // Adds a transaction and returns its outputs as coins.
  std::vector<Coin> add_tx(double time, std::vector<RawInput> inputs, const std::vector<RawOutput>& outputs) {
    RawTransaction t;
    t.txid = fresh_txid();
    t.inputs = std::move(inputs);
    t.outputs = outputs;
    planned_.push_back({std::move(t), time, planned_.size()});
    std::vector<Coin> coins;
    for (std::size_t o = 0; o < outputs.size(); ++o) {
      coins.push_back({planned_.back().raw.txid, static_cast<std::uint32_t>(o), outputs[o].address, outputs[o].value,
                       time});
    }
    return coins;
  }

  std::vector<Coin> pay_from_entity(Entity& e, const std::string& to, Satoshi amount, double time) {
    const std::string& from = e.info.members[pick(e.info.members.size())];
    return add_tx(time, {external(from, amount + small_fee(amount))}, {{to, amount}});
  }

  // Two outputs with the first taking `share` of value, fee drawn from either side;
  // output order is randomised. Returns the coins in (first, second) order.
  std::pair<Coin, Coin> two_way(double time, const std::vector<Coin>& inputs, const std::string& first,
                                const std::string& second, double share) {
    Satoshi total = 0;
    std::vector<RawInput> ins;
    for (const auto& c : inputs) {
      total += c.value;
      ins.push_back(spend(c));
    }
    Satoshi a = std::llround(share * static_cast<double>(total));
    Satoshi b = total - a;
    const Satoshi fee = std::llround(uniform(0.0, 0.001) * static_cast<double>(total));
    if (uniform(0, 1) < 0.5) {
      a -= std::min(fee, a - 1);
    } else {
      b -= std::min(fee, b - 1);
    }
    const bool swap = uniform(0, 1) < 0.5;
    std::vector<RawOutput> outs{{first, a}, {second, b}};
    if (swap) std::swap(outs[0], outs[1]);
    auto coins = add_tx(time, std::move(ins), outs);
    if (swap) std::swap(coins[0], coins[1]);
    return {coins[0], coins[1]};
  }

  Coin forward(double time, const Coin& c, const std::string& to) {
    return add_tx(time, {spend(c)}, {{to, c.value - small_fee(c.value)}})[0];
  }

  // ---- scenario pieces
  double sample_time();
  Satoshi usd_to_sat(double usd, double time);
  double sample_usd(double time);
  int grid_for_size(double usd, const std::vector<int>& grid);
  std::string deposit(Entity& e);
  void label(LabelSet& set, const std::string& address, const std::string& entity, Category c,
             const std::string& family, std::string_view source);
  void label_both(const std::string& address, const std::string& entity, Category c, const std::string& family = {});

  void build_prices();
  void build_entities();
  void build_families();
  void plant_payments();
  void plant_decoys();
  void plant_retail();
  void finalize(Scenario& out);

  struct Plan {
    std::size_t family = 0;
    Provenance dataset = Provenance::ransomwhere;
    std::string source;
    bool satisfies_origin = false;
    bool linkable = false;
    std::string fail_reason;
    enum class Spend { split, irregular, single } spend = Spend::single;
  };
  void plant(const Plan& plan, bool mixer);
  std::vector<Coin> fund(const std::string& source, const std::string& to, Satoshi amount, double time);

  struct Planned {
    RawTransaction raw;
    double time;
    std::size_t seq;
  };

  const ScenarioConfig& cfg_;
  std::mt19937_64 rng_;
  std::unordered_set<std::string> used_;
  std::unordered_set<std::string> txids_;
  std::vector<Planned> planned_;

  PriceTable prices_;
  double t_begin_ = 0, t_end_ = 0, t_genesis_ = 0;
  std::vector<std::pair<double, double>> month_cdf_;  // (cumulative weight, month start)
  std::vector<double> month_len_;

  std::map<std::string, Entity> entities_;  // by name
  std::vector<std::string> entity_order_;
  std::vector<Family> families_;
  std::map<std::string, std::string> treasuries_;  // feeder family -> address
  std::string broker_treasury_;

  LabelSet labels_, independent_;
  SeedSet seeds_, dataset_;
  Manifest manifest_;
  std::vector<Receipts> receipts_;        // per manifest payment
  std::vector<std::string> split_txids_;  // per manifest payment
};

void Generator::build_prices() {
  const Date start = parse_date(cfg_.start_date), end = parse_date(cfg_.end_date);
  t_begin_ = static_cast<double>(day_start(start));
  t_end_ = static_cast<double>(day_start(end));
  t_genesis_ = t_begin_ - 7 * 86400.0;

  std::vector<std::pair<Date, double>> pts;
  for (const auto& [d, p] : cfg_.price_points) pts.emplace_back(parse_date(d), p);
  std::sort(pts.begin(), pts.end());
  if (pts.empty()) pts.emplace_back(start, 20000.0);

  for (Date d = start - std::chrono::days{10}; d <= end + std::chrono::days{90}; d += std::chrono::days{1}) {
    double p;
    if (d <= pts.front().first) {
      p = pts.front().second;
    } else if (d >= pts.back().first) {
      p = pts.back().second;
    } else {
      auto hi = std::upper_bound(pts.begin(), pts.end(), d, [](Date x, const auto& e) { return x < e.first; });
      auto lo = hi - 1;
      const double f = static_cast<double>((d - lo->first).count()) / static_cast<double>((hi->first - lo->first).count());
      p = lo->second + f * (hi->second - lo->second);
    }
    prices_.set(d, std::llround(p * 100.0) * (PriceTable::kScale / 100));
  }

  // Months eligible for payments stop 30 days before the end so downstream flows fit.
  double cum = 0;
  using namespace std::chrono;
  for (year_month ym{year_month_day{start}.year(), year_month_day{start}.month()};; ym += months{1}) {
    const Date first = sys_days{ym / 1};
    const Date next = sys_days{(ym + months{1}) / 1};
    if (next + days{30} > end) break;
    const std::string key = fmt::format("{:04d}-{:02d}", static_cast<int>(ym.year()), static_cast<unsigned>(ym.month()));
    auto it = cfg_.month_weights.find(key);
    cum += it == cfg_.month_weights.end() ? 1.0 : it->second;
    month_cdf_.emplace_back(cum, static_cast<double>(day_start(first)));
    month_len_.push_back(static_cast<double>((next - first).count()) * 86400.0);
  }
  if (month_cdf_.empty()) {
    month_cdf_.emplace_back(1.0, t_begin_);
    month_len_.push_back(std::max(86400.0, (t_end_ - t_begin_) / 2));
  }
}

double Generator::sample_time() {
  const double u = uniform(0.0, month_cdf_.back().first);
  std::size_t i = 0;
  while (i + 1 < month_cdf_.size() && month_cdf_[i].first <= u) ++i;
  return month_cdf_[i].second + uniform(0.0, month_len_[i]);
}

Satoshi Generator::usd_to_sat(double usd, double time) {
  const double price = prices_.price(date_of(static_cast<std::int64_t>(time)));
  return std::llround(usd / price * static_cast<double>(kSatPerBtc));
}

double Generator::sample_usd(double time) {
  const int year = static_cast<int>(std::chrono::year_month_day{date_of(static_cast<std::int64_t>(time))}.year());
  double mean = 500000.0;
  if (!cfg_.mean_usd_by_year.empty()) {
    auto it = cfg_.mean_usd_by_year.upper_bound(year);
    mean = it == cfg_.mean_usd_by_year.begin() ? it->second : std::prev(it)->second;
  }
  const double sigma = cfg_.size_sigma;
  const double mu = std::log(mean) - sigma * sigma / 2;
  return std::exp(std::normal_distribution<double>(mu, sigma)(rng_));
}

// Larger payments get larger affiliate shares.
int Generator::grid_for_size(double usd, const std::vector<int>& grid) {
  std::vector<int> g = grid;
  std::sort(g.begin(), g.end());
  const double z = (std::log(usd) - std::log(1e6)) / 1.2;
  const double u = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const auto idx = std::min(g.size() - 1, static_cast<std::size_t>(u * static_cast<double>(g.size())));
  return g[idx];
}

void Generator::label(LabelSet& set, const std::string& address, const std::string& entity, Category c,
                      const std::string& family, std::string_view source) {
  set.add(LabelRecord{address, entity, c, family, std::string(source)});
}

void Generator::label_both(const std::string& address, const std::string& entity, Category c,
                           const std::string& family) {
  label(labels_, address, entity, c, family, kDetectorLabelSource);
  label(independent_, address, entity, c, family, kIndependentLabelSource);
}

std::string Generator::deposit(Entity& e) {
  const std::string a = fresh_address();
  label_both(a, e.info.name, e.info.category);
  return a;
}

void Generator::build_entities() {
  struct Def {
    std::string name, role;
    Category cat;
    std::size_t size;
    std::string anchor;
  };
  const std::vector<Def> defs{
      {"Cluster A", "negotiator", Category::unlabeled, cfg_.cluster_a_size, std::string(kClusterAAnchor)},
      {"Cluster B", "negotiator", Category::unlabeled, cfg_.cluster_b_size, std::string(kClusterBAnchor)},
      {"Gemini", "exchange", Category::exchange_low_risk, cfg_.exchange_size, {}},
      {"Binance", "exchange", Category::exchange_low_risk, cfg_.exchange_size, {}},
      {"Coinbase", "exchange", Category::exchange_low_risk, cfg_.exchange_size, {}},
      {"LocalExchange", "exchange", Category::exchange_low_risk, cfg_.exchange_size, {}},
      {"RiskyExchange", "exchange", Category::exchange_high_risk, cfg_.exchange_size, {}},
      {"MixerOne", "mixer", Category::mixer, cfg_.exchange_size, {}},
  };
  double t = t_genesis_;
  for (const auto& d : defs) {
    Entity e;
    e.info.name = d.name;
    e.info.role = d.role;
    e.info.category = d.cat;
    if (!d.anchor.empty()) {
      used_.insert(d.anchor);
      e.info.members.push_back(d.anchor);
    }
    while (e.info.members.size() < d.size) e.info.members.push_back(fresh_address());
    // One co-spend of every member ties the entity together.
    std::vector<RawInput> ins;
    for (const auto& m : e.info.members) ins.push_back(external(m, 10000));
    add_tx(t, std::move(ins),
           {{e.info.members.front(), static_cast<Satoshi>(e.info.members.size()) * 10000 - 1000}});
    t += 60;
    if (d.cat != Category::unlabeled) {
      for (const auto& m : e.info.members) label_both(m, d.name, d.cat);
    }
    entity_order_.push_back(d.name);
    entities_.emplace(d.name, std::move(e));
  }
}

void Generator::build_families() {
  std::map<std::string, std::string> groups;
  auto treasury = [&](const std::string& fam) -> const std::string& {
    auto it = treasuries_.find(fam);
    if (it == treasuries_.end()) {
      const std::string a = fresh_address();
      label_both(a, fam + " treasury", Category::ransomware, fam);
      it = treasuries_.emplace(fam, a).first;
    }
    return it->second;
  };

  double t = t_genesis_ + 86400;
  for (const auto& spec : cfg_.families) {
    Family f;
    f.spec = &spec;
    f.pool = fresh_address();
    const std::string group = spec.pool_group.empty() ? spec.name : spec.pool_group;
    auto g = groups.find(group);
    if (g == groups.end()) g = groups.emplace(group, fresh_address()).first;
    f.group_pool = g->second;
    for (int v : spec.split_grid) {
      if (v <= 85) f.expanded_grid.push_back(v);
    }
    if (spec.labeled) label(labels_, f.pool, spec.name + " operator", Category::ransomware, spec.name, kDetectorLabelSource);
    label(independent_, f.pool, spec.name + " operator", Category::ransomware, spec.name, kIndependentLabelSource);

    PlantedPool pool{spec.name, f.pool, f.group_pool, spec.labeled, {}};
    if (!spec.feeder.empty()) {
      pool.treasury = treasury(spec.feeder);
      add_tx(t, {external(pool.treasury, 1'000'000 + 1000)}, {{f.pool, 1'000'000}});
      t += 60;
    }
    manifest_.pools.push_back(pool);
    families_.push_back(std::move(f));
  }
  const std::size_t otc_links = scaled(cfg_.decoys.otc_link_no_split, cfg_.scale);
  if (otc_links > 0) {
    std::string fam = "Conti";
    for (const auto& spec : cfg_.families) {
      if (spec.labeled) {
        fam = spec.name;
        break;
      }
    }
    broker_treasury_ = treasury(fam);
  }
}

std::vector<Coin> Generator::fund(const std::string& source, const std::string& to, Satoshi amount, double time) {
  if (source != "external") return pay_from_entity(entities_.at(source), to, amount, time);
  // Victim wallet funded from outside the extract, paying with fresh change.
  const std::string victim = fresh_address();
  const std::string change = fresh_address();
  manifest_.victims.push_back(victim);
  const Satoshi extra = std::llround(static_cast<double>(amount) * uniform(0.05, 0.5)) + 1;
  const Satoshi fee = small_fee(amount);
  const double t_fund = time - uniform(86400.0, 5 * 86400.0);
  const Coin v = add_tx(t_fund, {dangling(amount + extra + fee + 1000)}, {{victim, amount + extra + fee}})[0];
  std::vector<RawOutput> outs{{to, amount}, {change, extra}};
  const bool swap = uniform(0, 1) < 0.5;
  if (swap) std::swap(outs[0], outs[1]);
  auto coins = add_tx(time, {spend(v)}, outs);
  return {coins[swap ? 1 : 0]};
}

void Generator::plant(const Plan& plan, bool mixer) {
  Family& fam = families_[plan.family];
  const FamilySpec& spec = *fam.spec;
  PlantedPayment pp;
  pp.address = fresh_address();
  pp.family = spec.name;
  pp.dataset = plan.dataset;
  pp.source = plan.source;
  pp.satisfies_origin = plan.satisfies_origin;
  pp.linkable = plan.linkable;
  pp.fail_reason = plan.fail_reason;
  pp.operator_pool = fam.pool;
  pp.group_pool = fam.group_pool;
  pp.mixer = mixer;

  const double t0 = sample_time();
  const double usd = sample_usd(t0);
  Satoshi sat = std::max<Satoshi>(usd_to_sat(usd, t0), 5'000'000);
  const bool anchor_funded = plan.source == "Cluster A" || plan.source == "Cluster B";
  if (plan.satisfies_origin || plan.dataset == Provenance::orig_cluster) sat = std::max<Satoshi>(sat, 105'000'000);
  if (plan.fail_reason == "below_min") sat = std::llround(uniform(0.2, 0.95) * kSatPerBtc);

  int k = anchor_funded ? randint(1, 4) : randint(1, 3);
  if (plan.fail_reason == "too_many_txs") {
    k = 6;
    sat = std::max<Satoshi>(sat, 105'000'000);
  }

  std::vector<double> w(k);
  for (auto& x : w) x = uniform(0.5, 1.5);
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<Coin> coins;
  Receipts rec;
  double t = t0;
  Satoshi left = sat;
  for (int i = 0; i < k; ++i) {
    const Satoshi part = i + 1 == k ? left : std::llround(static_cast<double>(sat) * w[i] / wsum);
    left -= part;
    for (auto& c : fund(plan.source, pp.address, part, t)) {
      rec.outpoints.emplace_back(c.txid, c.vout);
      coins.push_back(c);
    }
    t += uniform(600.0, 6 * 3600.0);
  }

  const std::string affiliate = fresh_address();
  pp.affiliate = affiliate;
  const double t_spend = t + uniform(3600.0, 48 * 3600.0);
  Coin aff;
  std::optional<Coin> op;
  std::string split_txid;
  switch (plan.spend) {
    case Plan::Spend::split: {
      const auto& grid = plan.dataset == Provenance::expanded ? fam.expanded_grid : spec.split_grid;
      const int g = grid_for_size(usd, grid);
      auto [a, o] = two_way(t_spend, coins, affiliate, fam.pool, g / 100.0);
      aff = a;
      op = o;
      pp.split = true;
      pp.grid_pct = g;
      split_txid = a.txid;
      break;
    }
    case Plan::Spend::irregular: {
      const int g = spec.split_grid[pick(spec.split_grid.size())];
      const double share = std::min(0.97, g / 100.0 + uniform(0.004, 0.006));
      auto [a, o] = two_way(t_spend, coins, affiliate, fam.pool, share);
      aff = a;
      op = o;
      break;
    }
    case Plan::Spend::single: {
      Satoshi total = 0;
      std::vector<RawInput> ins;
      for (const auto& c : coins) {
        total += c.value;
        ins.push_back(spend(c));
      }
      aff = add_tx(t_spend, std::move(ins), {{affiliate, total - small_fee(total)}})[0];
      break;
    }
  }
  if (op) forward(t_spend + uniform(3600.0, 72 * 3600.0), *op, fam.group_pool);

  Entity* dest;
  if (mixer) {
    dest = &entities_.at("MixerOne");
  } else {
    static const std::vector<std::string> kLow{"Gemini", "Binance", "Coinbase", "LocalExchange"};
    dest = uniform(0, 1) < 0.3 ? &entities_.at("RiskyExchange") : &entities_.at(kLow[pick(kLow.size())]);
  }
  pp.cashout = deposit(*dest);
  pp.cashout_category = dest->info.category;
  forward(t_spend + uniform(3600.0, 72 * 3600.0), aff, pp.cashout);

  if (plan.dataset == Provenance::ransomwhere) seeds_.records.push_back({pp.address, pp.family, plan.dataset});
  dataset_.records.push_back({pp.address, pp.family, plan.dataset});
  manifest_.payments.push_back(std::move(pp));
  receipts_.push_back(std::move(rec));
  split_txids_.push_back(split_txid);
}

void Generator::plant_payments() {
  const std::vector<std::string> kSources{"Cluster A", "Cluster B", "Gemini", "Binance", "Coinbase", "external"};
  const auto& s = cfg_.sources;
  const std::vector<double> shares{s.cluster_a, s.cluster_b, s.gemini, s.binance, s.coinbase,
                                   std::max(0.0, 1.0 - s.total())};

  std::vector<Plan> plans;
  std::vector<std::size_t> seed_idx;
  for (std::size_t fi = 0; fi < families_.size(); ++fi) {
    const FamilySpec& spec = *families_[fi].spec;
    const std::size_t n_seed = scaled(spec.seeds, cfg_.scale), n_orig = scaled(spec.orig, cfg_.scale),
                      n_exp = scaled(spec.expanded, cfg_.scale);
    // Exact split counts per family and dataset.
    auto spend_for = [&](std::size_t i, std::size_t n, bool orig) {
      const std::size_t splits = static_cast<std::size_t>(std::llround(spec.split_rate * static_cast<double>(n)));
      if (!spec.labeled && orig) return Plan::Spend::split;
      if (i < splits) return Plan::Spend::split;
      return orig ? Plan::Spend::irregular : Plan::Spend::single;
    };
    for (std::size_t i = 0; i < n_seed; ++i) {
      Plan p;
      p.family = fi;
      p.dataset = Provenance::ransomwhere;
      p.spend = spend_for(i, n_seed, false);
      seed_idx.push_back(plans.size());
      plans.push_back(p);
    }
    const auto orig_sources = apportion(n_orig, {1.0 - cfg_.orig_cluster_b_share, cfg_.orig_cluster_b_share});
    for (std::size_t i = 0; i < n_orig; ++i) {
      Plan p;
      p.family = fi;
      p.dataset = Provenance::orig_cluster;
      p.source = i < orig_sources[0] ? "Cluster A" : "Cluster B";
      p.satisfies_origin = true;
      p.spend = spend_for(i, n_orig, true);
      plans.push_back(p);
    }
    static const std::vector<std::string> kLowRisk{"Gemini", "Binance", "Coinbase"};
    for (std::size_t i = 0; i < n_exp; ++i) {
      Plan p;
      p.family = fi;
      p.dataset = Provenance::expanded;
      p.source = kLowRisk[i % kLowRisk.size()];
      p.linkable = true;
      p.spend = Plan::Spend::split;
      plans.push_back(p);
    }
  }

  // Seed sources: exact quotas, randomly assigned.
  const auto quota = apportion(seed_idx.size(), shares);
  std::vector<std::string> src;
  for (std::size_t i = 0; i < quota.size(); ++i) src.insert(src.end(), quota[i], kSources[i]);
  std::shuffle(src.begin(), src.end(), rng_);
  std::vector<std::size_t> anchored;
  for (std::size_t i = 0; i < seed_idx.size(); ++i) {
    plans[seed_idx[i]].source = src[i];
    if (src[i] == "Cluster A" || src[i] == "Cluster B") anchored.push_back(seed_idx[i]);
  }
  const std::size_t refound = std::min(anchored.size(), scaled(cfg_.refound, cfg_.scale));
  for (std::size_t i = 0; i < anchored.size(); ++i) {
    Plan& p = plans[anchored[i]];
    if (i < refound) {
      p.satisfies_origin = true;
      if (p.spend == Plan::Spend::single) p.spend = Plan::Spend::irregular;
      if (!families_[p.family].spec->labeled) p.spend = Plan::Spend::split;
    } else {
      p.fail_reason = (i - refound) % 2 == 0 ? "below_min" : "too_many_txs";
    }
  }

  std::shuffle(plans.begin(), plans.end(), rng_);
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto before = static_cast<std::size_t>(std::floor(static_cast<double>(i) * cfg_.mixer_share + 1e-9));
    const auto after = static_cast<std::size_t>(std::floor(static_cast<double>(i + 1) * cfg_.mixer_share + 1e-9));
    plant(plans[i], after > before);
  }
}

void Generator::plant_decoys() {
  const DecoyCounts& d = cfg_.decoys;
  auto decoy = [&](const std::string& addr, std::string kind) { manifest_.decoys.push_back({addr, std::move(kind)}); };
  auto grid_value = [&] { return randint(12, 18) * 5; };  // 60..90
  auto otc_funding = [&](const std::string& x, double t0) {
    Entity& e = entities_.at(uniform(0, 1) < 0.9 ? "Cluster A" : "Cluster B");
    const Satoshi sat = std::max<Satoshi>(usd_to_sat(sample_usd(t0), t0), 105'000'000);
    const int k = randint(1, 3);
    std::vector<Coin> coins;
    double t = t0;
    for (int i = 0; i < k; ++i) {
      const Satoshi part = i + 1 == k ? sat - (sat / k) * (k - 1) : sat / k;
      auto c = pay_from_entity(e, x, part, t);
      coins.insert(coins.end(), c.begin(), c.end());
      t += uniform(600.0, 3600.0);
    }
    return std::make_pair(coins, t);
  };
  auto exchange_funding = [&](const std::string& x, double t0) {
    static const std::vector<std::string> kLow{"Gemini", "Binance", "Coinbase"};
    Entity& e = entities_.at(kLow[pick(kLow.size())]);
    const Satoshi sat = usd_to_sat(sample_usd(t0), t0);
    return std::make_pair(pay_from_entity(e, x, std::max<Satoshi>(sat, 5'000'000), t0), t0);
  };
  auto some_family = [&]() -> Family& { return families_[pick(families_.size())]; };

  for (std::size_t i = 0; i < scaled(d.otc_no_link, cfg_.scale); ++i) {
    const std::string x = fresh_address();
    auto [coins, t] = otc_funding(x, sample_time());
    Satoshi total = 0;
    std::vector<RawInput> ins;
    for (const auto& c : coins) {
      total += c.value;
      ins.push_back(spend(c));
    }
    add_tx(t + uniform(3600.0, 86400.0), std::move(ins),
           {{deposit(entities_.at("Coinbase")), total - small_fee(total)}});
    decoy(x, "otc_no_link");
  }
  for (std::size_t i = 0; i < scaled(d.otc_link_no_split, cfg_.scale); ++i) {
    const std::string x = fresh_address(), broker = fresh_address();
    const double t0 = sample_time();
    add_tx(t0 - 86400.0, {external(broker_treasury_, 500'000 + 1000)}, {{broker, 500'000}});
    auto [coins, t] = otc_funding(x, t0);
    Satoshi total = 0;
    std::vector<RawInput> ins;
    for (const auto& c : coins) {
      total += c.value;
      ins.push_back(spend(c));
    }
    add_tx(t + uniform(3600.0, 86400.0), std::move(ins), {{broker, total - small_fee(total)}});
    decoy(x, "otc_link_no_split");
  }
  for (std::size_t i = 0; i < scaled(d.otc_split_no_link, cfg_.scale); ++i) {
    const std::string x = fresh_address();
    auto [coins, t] = otc_funding(x, sample_time());
    two_way(t + uniform(3600.0, 86400.0), coins, fresh_address(), fresh_address(), grid_value() / 100.0);
    decoy(x, "otc_split_no_link");
  }
  if (!families_.empty()) {
    for (std::size_t i = 0; i < scaled(d.exchange_95_5, cfg_.scale); ++i) {
      const std::string x = fresh_address();
      Family& f = some_family();
      auto [coins, t] = exchange_funding(x, sample_time());
      auto [big, small] = two_way(t + uniform(3600.0, 86400.0), coins, fresh_address(), f.pool, 0.95);
      forward(small.time + uniform(3600.0, 86400.0), small, f.group_pool);
      decoy(x, "exchange_95_5");
    }
    for (std::size_t i = 0; i < scaled(d.exchange_mixed_origin, cfg_.scale); ++i) {
      const std::string x = fresh_address();
      Family& f = some_family();
      const double t0 = sample_time();
      const Satoshi half = std::max<Satoshi>(usd_to_sat(sample_usd(t0), t0), 5'000'000) / 2;
      // Half from an exchange, half from an unlabeled wallet, in separate transactions.
      auto coins = pay_from_entity(entities_.at("Gemini"), x, half, t0);
      const std::string wallet = fresh_address();
      const Coin w = add_tx(t0 - 86400.0, {dangling(half + 2000)}, {{wallet, half + 1000}})[0];
      coins.push_back(add_tx(t0 + 600.0, {spend(w)}, {{x, half}})[0]);
      auto [pool_side, other] = two_way(t0 + uniform(3600.0, 86400.0), coins, f.pool, fresh_address(), 0.5);
      forward(pool_side.time + uniform(3600.0, 86400.0), pool_side, f.group_pool);
      decoy(x, "exchange_mixed_origin");
    }
  }
  for (std::size_t i = 0; i < scaled(d.exchange_round_split, cfg_.scale); ++i) {
    const std::string x = fresh_address();
    auto [coins, t] = exchange_funding(x, sample_time());
    two_way(t + uniform(3600.0, 86400.0), coins, fresh_address(), fresh_address(), grid_value() / 100.0);
    decoy(x, "exchange_round_split");
  }
  for (std::size_t i = 0; i < scaled(d.irregular, cfg_.scale); ++i) {
    const std::string x = fresh_address();
    auto [coins, t] = exchange_funding(x, sample_time());
    const double share = grid_value() / 100.0 + uniform(0.004, 0.006);
    two_way(t + uniform(3600.0, 86400.0), coins, fresh_address(), fresh_address(), share);
    decoy(x, "irregular");
  }
}

void Generator::plant_retail() {
  const RetailConfig& r = cfg_.retail;
  if (r.wallets == 0) return;
  struct Wallet {
    std::vector<Coin> utxos;
  };
  std::vector<Wallet> wallets(r.wallets);
  std::vector<std::pair<std::size_t, std::string>> known;  // (wallet, address)

  double t = t_genesis_ + 2 * 86400.0;
  for (std::size_t w = 0; w < wallets.size(); ++w) {
    const int n = randint(1, static_cast<int>(std::max<std::size_t>(1, r.max_initial_addresses)));
    std::vector<RawOutput> outs;
    for (int i = 0; i < n; ++i) {
      outs.push_back({fresh_address(), std::llround(uniform(0.01, 2.0) * kSatPerBtc)});
      known.emplace_back(w, outs.back().address);
    }
    for (auto& c : add_tx(t, {}, outs)) wallets[w].utxos.push_back(c);
    t += 1;
  }

  const double span = t_end_ - t_begin_;
  for (std::size_t i = 0; i < r.txs; ++i) {
    const double ti = t_begin_ + span * static_cast<double>(i + 1) / static_cast<double>(r.txs + 1);
    std::vector<std::size_t> ready;
    for (std::size_t w = 0; w < wallets.size(); ++w) {
      if (!wallets[w].utxos.empty()) ready.push_back(w);
    }
    if (ready.empty()) break;
    const std::size_t w = ready[pick(ready.size())];
    auto& utxos = wallets[w].utxos;
    const std::size_t k =
        std::min<std::size_t>(utxos.size(), static_cast<std::size_t>(randint(1, static_cast<int>(r.max_inputs))));
    std::vector<RawInput> ins;
    Satoshi total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t at = pick(utxos.size());
      total += utxos[at].value;
      ins.push_back(spend(utxos[at]));
      utxos[at] = utxos.back();
      utxos.pop_back();
    }
    // Pay an address already seen in another wallet.
    std::size_t mw = w;
    std::string merchant;
    for (int tries = 0; tries < 8 && mw == w; ++tries) {
      const auto& [kw, ka] = known[pick(known.size())];
      mw = kw;
      merchant = ka;
    }
    if (mw == w) {
      merchant = fresh_address();
      mw = pick(wallets.size());
      known.emplace_back(mw, merchant);
    }
    const Satoshi fee = std::min<Satoshi>(total / 100, 2000);
    const Satoshi spendable = total - fee;
    if (spendable < 20000) {
      auto coins = add_tx(ti, std::move(ins), {{merchant, spendable}});
      wallets[mw].utxos.push_back(coins[0]);
      continue;
    }
    const Satoshi pay = std::llround(uniform(0.1, 0.9) * static_cast<double>(spendable));
    const std::string change = fresh_address();
    std::vector<RawOutput> outs{{merchant, pay}, {change, spendable - pay}};
    const bool swap = uniform(0, 1) < 0.5;
    if (swap) std::swap(outs[0], outs[1]);
    auto coins = add_tx(ti, std::move(ins), outs);
    if (swap) std::swap(coins[0], coins[1]);
    wallets[mw].utxos.push_back(coins[0]);
    wallets[w].utxos.push_back(coins[1]);
    known.emplace_back(w, change);
    manifest_.change_outputs.push_back({coins[1].txid, change});
  }
}

void Generator::finalize(Scenario& out) {
  std::stable_sort(planned_.begin(), planned_.end(), [](const Planned& a, const Planned& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.seq < b.seq;
  });
  std::unordered_map<std::string, std::int64_t> ts_of;
  std::int64_t prev = std::numeric_limits<std::int64_t>::min();
  const auto origin = static_cast<std::int64_t>(std::floor(planned_.empty() ? 0.0 : planned_.front().time));
  std::set<std::string> addresses;
  for (auto& p : planned_) {
    std::int64_t ts = std::llround(p.time);
    if (prev != std::numeric_limits<std::int64_t>::min()) ts = std::max(ts, prev + 1);
    prev = ts;
    p.raw.timestamp = ts;
    p.raw.height = static_cast<std::uint64_t>((ts - origin) / 600);
    ts_of.emplace(p.raw.txid, ts);
    for (const auto& in : p.raw.inputs) {
      if (!in.address.empty()) addresses.insert(in.address);
    }
    for (const auto& o : p.raw.outputs) addresses.insert(o.address);
  }

  std::unordered_map<std::string, const RawTransaction*> by_txid;
  for (const auto& p : planned_) by_txid.emplace(p.raw.txid, &p.raw);
  for (std::size_t i = 0; i < manifest_.payments.size(); ++i) {
    PlantedPayment& pp = manifest_.payments[i];
    std::set<std::string> txs;
    pp.total_sat = 0;
    pp.total_usd = {};
    pp.first_seen = std::numeric_limits<std::int64_t>::max();
    pp.last_seen = std::numeric_limits<std::int64_t>::min();
    for (const auto& [txid, vout] : receipts_[i].outpoints) {
      const RawTransaction& t = *by_txid.at(txid);
      const Satoshi v = t.outputs.at(vout).value;
      pp.total_sat += v;
      pp.total_usd += usd_value(v, date_of(t.timestamp), prices_);
      pp.first_seen = std::min(pp.first_seen, t.timestamp);
      pp.last_seen = std::max(pp.last_seen, t.timestamp);
      txs.insert(txid);
    }
    pp.incoming_tx_count = txs.size();
    pp.split_txid = split_txids_[i];
  }

  manifest_.seed = cfg_.seed;
  manifest_.tx_count = planned_.size();
  manifest_.address_count = addresses.size();
  for (const auto& name : entity_order_) manifest_.entities.push_back(entities_.at(name).info);

  out.transactions.reserve(planned_.size());
  for (std::size_t i = 0; i < planned_.size(); ++i) {
    planned_[i].raw.line = i + 1;
    out.transactions.push_back(std::move(planned_[i].raw));
  }
  out.prices = std::move(prices_);
  out.labels = std::move(labels_);
  out.independent_labels = std::move(independent_);
  out.seeds = std::move(seeds_);
  out.dataset = std::move(dataset_);
  out.manifest = std::move(manifest_);
}

Scenario Generator::run() {
  cfg_.validate();
  build_prices();
  build_entities();
  build_families();
  plant_payments();
  plant_decoys();
  plant_retail();
  Scenario out;
  finalize(out);
  return out;
}

}  // namespace

Scenario generate(const ScenarioConfig& config) { return Generator(config).run(); }

void write_scenario(const Scenario& scenario, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(fmt::format("cannot write {}", (dir / name).string()));
    return f;
  };
  {
    auto f = open("chain.jsonl");
    write_chain_jsonl(f, Chain::build(scenario.transactions, "synth"));
  }
  {
    auto f = open("prices.csv");
    write_prices_csv(f, scenario.prices);
  }
  {
    auto f = open("labels.csv");
    write_labels_csv(f, scenario.labels);
  }
  {
    auto f = open("labels_independent.csv");
    write_labels_csv(f, scenario.independent_labels);
  }
  {
    auto f = open("seeds.csv");
    write_seeds_csv(f, scenario.seeds);
  }
  {
    auto f = open("dataset.csv");
    write_seeds_csv(f, scenario.dataset);
  }
  {
    auto f = open("manifest.json");
    f << scenario.manifest.to_json();
  }
}

}  // namespace rwtrace::synth

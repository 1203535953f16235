#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "rwtrace/analytics.hpp"
#include "rwtrace/chain.hpp"
#include "rwtrace/clustering.hpp"
#include "rwtrace/csv.hpp"
#include "rwtrace/detectors.hpp"
#include "rwtrace/error.hpp"
#include "rwtrace/flowgraph.hpp"
#include "rwtrace/labels.hpp"
#include "rwtrace/parallel.hpp"
#include "rwtrace/payments.hpp"
#include "rwtrace/prices.hpp"
#include "rwtrace/splitting.hpp"
#include "rwtrace/synth.hpp"
#include "rwtrace/validation.hpp"

namespace fs = std::filesystem;

namespace rwtrace::cli {
namespace {

struct Options {
  std::string out = "out";
  std::string chain, prices, labels, independent, seeds, dataset, scenario;
  unsigned threads = 1;
  int hops = 3;
  std::optional<double> min_btc, lowrisk_share, nontrivial_share;
  std::optional<std::size_t> max_incoming;
  bool change_clustering = false;
  bool cluster_keyed = false;
  bool absolute = false;
  bool row_normalized = false;
  bool resume = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> scale;
  std::string bucket = "quarter";
};

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Stage name -> files it writes; used for restart and for missing-input errors.
const std::map<std::string, std::vector<std::string>>& stage_outputs() {
  static const std::map<std::string, std::vector<std::string>> m{
      {"ingest", {"ingest_report.csv"}},
      {"cluster", {"clusters.csv"}},
      {"rank-sources", {"source_ranking.csv"}},
      {"detect-origin", {"payments_origin.csv", "refound.csv"}},
      {"detect-expanded", {"payments_expanded.csv", "payments.csv"}},
      {"splits", {"splits.csv"}},
      {"analyze",
       {"families.csv", "split_rates.csv", "timeseries.csv", "central_tendency.csv", "dest_types.csv",
        "overlap_matrix.csv", "split_percentile.csv"}},
      {"validate",
       {"validation.csv", "validation_summary.csv", "ecdf_ransomware.csv", "ecdf_highrisk.csv", "ecdf_lowrisk.csv"}},
  };
  return m;
}

class Session {
 public:
  Session(Options opt, std::ostream& out) : opt_(std::move(opt)), out_(out) {}

  const Options& options() const { return opt_; }
  std::ostream& console() { return out_; }

  fs::path out_path(const std::string& name) const { return fs::path(opt_.out) / name; }

  const Chain& chain() {
    if (!chain_) chain_ = ingest_chain(require_file(opt_.chain, "--chain"));
    return *chain_;
  }

  const ClusterAssignment& clusters() {
    if (!clusters_) clusters_ = cluster_with_change(chain(), opt_.change_clustering);
    return *clusters_;
  }

  const PriceTable& prices() {
    if (!prices_) prices_ = PriceTable::load(require_file(opt_.prices, "--prices"));
    return *prices_;
  }
  const PriceTable* prices_if_given() { return opt_.prices.empty() ? nullptr : &prices(); }

  const LabelSet& labels() {
    if (!labels_) labels_ = LabelSet::load(require_file(opt_.labels, "--labels"));
    return *labels_;
  }

  const LabelSet& independent() {
    if (!independent_) independent_ = LabelSet::load(require_file(opt_.independent, "--independent-labels"));
    return *independent_;
  }
  bool has_independent() const { return !opt_.independent.empty(); }

  const SeedSet& seeds() {
    if (!seeds_) {
      seeds_ = SeedSet::load(require_file(opt_.seeds, "--seeds"));
      if (seeds_->records.empty()) throw Error("empty seed set");
    }
    return *seeds_;
  }

  DetectionContext& context() {
    if (!context_) {
      context_.emplace(chain(), clusters(), labels(), seeds(), prices_if_given(), opt_.threads);
    }
    return *context_;
  }

  DetectorConfig detector_config() const {
    DetectorConfig c;
    if (opt_.min_btc) c.min_receipt_btc = *opt_.min_btc;
    if (opt_.max_incoming) c.max_incoming_txs = *opt_.max_incoming;
    if (opt_.lowrisk_share) c.low_risk_origin_share = *opt_.lowrisk_share;
    if (opt_.nontrivial_share) c.nontrivial_share = *opt_.nontrivial_share;
    c.hop_bound = opt_.hops;
    c.validate();
    return c;
  }

  // Reads an earlier stage's export, naming the stage when it has not run.
  std::vector<PaymentRecord> read_payments(const std::string& file, const std::string& stage) {
    std::ifstream in(require_stage(file, stage));
    return read_payments_csv(in, file);
  }

  fs::path require_stage(const std::string& file, const std::string& stage) const {
    const fs::path p = out_path(file);
    if (!fs::exists(p)) {
      throw StageError(stage, fmt::format("missing {}: run the '{}' stage first", p.string(), stage));
    }
    return p;
  }

  // Writes to a temporary file and renames it into place so a stage never leaves
  // a partial export behind.
  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    fs::create_directories(opt_.out);
    const fs::path target = out_path(name);
    const fs::path tmp = target.string() + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary);
      if (!f) throw Error(fmt::format("cannot write {}", tmp.string()));
      body(f);
      if (!f) throw Error(fmt::format("write failed for {}", tmp.string()));
    }
    fs::rename(tmp, target);
  }

 private:
  static fs::path require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw Error(fmt::format("missing input: {} is required", flag));
    if (!fs::exists(path)) throw Error(fmt::format("missing input: {} not found", path));
    return path;
  }

  Options opt_;
  std::ostream& out_;
  std::optional<Chain> chain_;
  std::optional<ClusterAssignment> clusters_;
  std::optional<PriceTable> prices_;
  std::optional<LabelSet> labels_, independent_;
  std::optional<SeedSet> seeds_;
  std::optional<DetectionContext> context_;
};

std::string fixed(double v, int digits = 6) { return fmt::format("{:.{}f}", v, digits); }

void stage_ingest(Session& s) {
  const Options& o = s.options();
  if (o.chain.empty() && o.dataset.empty()) throw Error("missing input: ingest needs --chain or --dataset");
  if (!o.chain.empty()) {
    const IngestReport& r = s.chain().report();
    s.write("ingest_report.csv", [&](std::ostream& f) {
      f << "transactions,addresses,resolved_inputs,external_inputs,dangling_inputs\n";
      f << fmt::format("{},{},{},{},{}\n", r.transactions, r.addresses, r.resolved_inputs, r.external_inputs,
                       r.dangling_inputs);
    });
    s.console() << fmt::format("ingested {} transactions, {} addresses ({} dangling inputs)\n", r.transactions,
                               r.addresses, r.dangling_inputs);
  }
  if (!o.dataset.empty()) {
    if (!fs::exists(o.dataset)) throw Error(fmt::format("missing input: {} not found", o.dataset));
    const SeedSet ds = SeedSet::load(fs::path(o.dataset));
    const DatasetShape shape = dataset_shape(ds);
    const Chain* chain = o.chain.empty() ? nullptr : &s.chain();
    const PriceTable* prices = chain ? s.prices_if_given() : nullptr;
    std::map<Provenance, Usd> usd;
    std::set<std::string> seen;
    if (prices) {
      for (const auto& r : ds.records) {
        if (!seen.insert(r.address).second || !chain->find_address(r.address)) continue;
        usd[r.tag] += address_totals(r.address, *chain, prices).total_usd.value_or(Usd{});
      }
    }
    s.write("dataset_summary.csv", [&](std::ostream& f) {
      f << "dataset,addresses,total_usd\n";
      Usd all;
      for (auto [tag, n] : {std::pair{Provenance::ransomwhere, shape.ransomwhere},
                            std::pair{Provenance::orig_cluster, shape.orig_cluster},
                            std::pair{Provenance::expanded, shape.expanded}}) {
        all += usd[tag];
        f << fmt::format("{},{},{}\n", to_string(tag), n, prices ? usd[tag].str() : "");
      }
      f << fmt::format("all,{},{}\n", shape.total(), prices ? all.str() : "");
    });
    s.console() << fmt::format("dataset: {} ransomwhere, {} orig_cluster, {} expanded, {} total\n", shape.ransomwhere,
                               shape.orig_cluster, shape.expanded, shape.total());
  }
}

void stage_cluster(Session& s) {
  const ClusterAssignment& a = s.clusters();
  s.write("clusters.csv", [&](std::ostream& f) { write_cluster_csv(f, s.chain(), a); });
  s.console() << fmt::format("{} addresses in {} clusters\n", a.address_count(), a.cluster_count());
}

void stage_rank_sources(Session& s) {
  const SeedSet& seeds = s.seeds();
  DetectionContext& ctx = s.context();
  const SourceRanking ranking = rank_source_clusters(seeds.records, ctx, s.options().hops);
  s.write("source_ranking.csv", [&](std::ostream& f) {
    f << "cluster,entity,category,share,payments\n";
    for (const auto& r : ranking.rows) {
      const std::string id = r.cluster == kExternalSource ? "external" : std::to_string(r.cluster);
      f << fmt::format("{},{},{},{},{}\n", id, csv::escape(r.entity), to_string(r.category), fixed(r.share),
                       fixed(r.payments, 3));
    }
  });
  s.console() << fmt::format("traced {} seeds; top sources:\n", ranking.traced);
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ranking.rows.size()); ++i) {
    const auto& r = ranking.rows[i];
    s.console() << fmt::format("  {:<24} {:>6.2f}%\n", r.entity.empty() ? "(unlabeled)" : r.entity, r.share * 100);
  }
}

void stage_detect_origin(Session& s) {
  const DetectorConfig config = s.detector_config();
  s.seeds();
  const auto found = classify_origin_payments(config, s.context());
  std::vector<PaymentRecord> fresh, refound;
  for (const auto& r : found) (r.already_known ? refound : fresh).push_back(r);
  s.write("payments_origin.csv", [&](std::ostream& f) { write_payments_csv(f, fresh); });
  s.write("refound.csv", [&](std::ostream& f) { write_payments_csv(f, refound); });
  s.console() << fmt::format("origin rule: {} new payments, {} seeds found again\n", fresh.size(), refound.size());
}

std::vector<PaymentRecord> seed_records(Session& s) {
  std::vector<PaymentRecord> out;
  std::set<std::string> seen;
  for (const auto& r : s.seeds().records) {
    if (r.tag != Provenance::ransomwhere || !seen.insert(r.address).second) continue;
    if (auto id = s.chain().find_address(r.address)) out.push_back(s.context().make_record(*id, Provenance::ransomwhere));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.address < b.address; });
  return out;
}

void stage_detect_expanded(Session& s) {
  const DetectorConfig config = s.detector_config();
  const auto origin = s.read_payments("payments_origin.csv", "detect-origin");
  const auto seeds = seed_records(s);
  std::vector<std::string> known;
  for (const auto& r : s.seeds().records) known.push_back(r.address);
  for (const auto& r : origin) known.push_back(r.address);
  const auto expanded = classify_expanded(config, s.context(), known);

  std::vector<PaymentRecord> all = seeds;
  all.insert(all.end(), origin.begin(), origin.end());
  all.insert(all.end(), expanded.begin(), expanded.end());
  s.write("payments_expanded.csv", [&](std::ostream& f) { write_payments_csv(f, expanded); });
  s.write("payments.csv", [&](std::ostream& f) { write_payments_csv(f, all); });
  s.console() << fmt::format("expanded rule: {} new payments; {} payments in total\n", expanded.size(), all.size());
}

void stage_splits(Session& s) {
  const auto payments = s.read_payments("payments.csv", "detect-expanded");
  SplitOptions opt;
  opt.max_hops = s.options().hops;
  std::vector<std::optional<SplitFinding>> found(payments.size());
  const Chain& chain = s.chain();
  parallel_for(payments.size(), s.options().threads, [&](std::size_t i) {
    if (auto id = chain.find_address(payments[i].address)) found[i] = detect_split(*id, chain, opt);
  });
  SplitMap splits;
  for (std::size_t i = 0; i < payments.size(); ++i) {
    if (found[i]) splits.emplace(payments[i].address, *found[i]);
  }
  s.write("splits.csv", [&](std::ostream& f) { write_splits_csv(f, chain, splits); });
  s.console() << fmt::format("{} of {} payments split\n", splits.size(), payments.size());
}

void stage_analyze(Session& s) {
  const Options& o = s.options();
  auto payments = s.read_payments("payments.csv", "detect-expanded");
  SplitMap splits;
  {
    std::ifstream in(s.require_stage("splits.csv", "splits"));
    splits = read_splits_csv(in, s.chain(), "splits.csv");
  }
  const auto bucket = parse_time_bucket(o.bucket);
  if (!bucket) throw Error(fmt::format("unknown time bucket '{}'", o.bucket));

  LabelSet family_labels = s.labels();
  if (s.has_independent()) family_labels.merge(s.independent());
  const LabelSet& dest_labels = s.has_independent() ? s.independent() : s.labels();

  AnalyticsOptions ao;
  ao.hops = o.hops;
  ao.threads = o.threads;
  const auto labeling = label_families(payments, s.chain(), family_labels, ao);
  apply_families(payments, labeling);

  const auto rates = split_rate_by_family(payments, splits);
  const auto series = payments_over_time(payments, s.chain(), s.prices(), *bucket);
  const auto tendency = central_tendency(payments);
  const auto dest = destination_type_tally(payments, s.chain(), dest_labels, ao);
  OverlapOptions oo;
  oo.hops = o.hops;
  oo.threads = o.threads;
  oo.absolute = o.absolute;
  oo.row_normalized = o.row_normalized;
  oo.cluster_keyed = o.cluster_keyed;
  const auto overlap = family_overlap(payments, s.chain(), oo, o.cluster_keyed ? &s.clusters() : nullptr);
  const auto curve = split_by_percentile(payments, splits);

  s.write("families.csv", [&](std::ostream& f) { write_families_csv(f, labeling); });
  s.write("split_rates.csv", [&](std::ostream& f) { write_split_rates_csv(f, rates); });
  s.write("timeseries.csv", [&](std::ostream& f) { write_timeseries_csv(f, series); });
  s.write("central_tendency.csv", [&](std::ostream& f) { write_central_tendency_csv(f, tendency); });
  s.write("dest_types.csv", [&](std::ostream& f) { write_dest_types_csv(f, dest); });
  s.write("overlap_matrix.csv", [&](std::ostream& f) { write_overlap_csv(f, overlap); });
  s.write("split_percentile.csv", [&](std::ostream& f) { write_split_percentile_csv(f, curve); });

  s.console() << fmt::format("{:<16} {:>8} {:>8} {:>7}\n", "family", "payments", "split", "rate");
  for (const auto& r : rates) {
    s.console() << fmt::format("{:<16} {:>8} {:>8} {:>6.1f}%\n", r.family, r.payments, r.splitting,
                               r.fraction * 100);
  }
  if (!tendency.empty()) {
    const auto& all = tendency.back();
    s.console() << fmt::format("mean ${:.0f}, median ${:.0f} over {} payments\n", all.mean_usd, all.median_usd,
                               all.payments);
  }
}

void stage_validate(Session& s) {
  const Options& o = s.options();
  const auto payments = s.read_payments("payments.csv", "detect-expanded");
  ValidationOptions vo;
  vo.hops = o.hops;
  vo.threads = o.threads;
  const ValidationResult result = validate(payments, s.chain(), s.independent(), s.labels().sources(), vo);

  s.write("validation.csv", [&](std::ostream& f) { write_validation_csv(f, result.outcomes); });
  s.write("validation_summary.csv", [&](std::ostream& f) { write_summary_csv(f, result.summary); });
  LabeledValueEcdf curves;
  if (!result.outcomes.empty()) curves = labeled_value_ecdf(result.outcomes);
  s.write("ecdf_ransomware.csv", [&](std::ostream& f) { write_ecdf_csv(f, curves.ransomware); });
  s.write("ecdf_highrisk.csv", [&](std::ostream& f) { write_ecdf_csv(f, curves.highrisk); });
  s.write("ecdf_lowrisk.csv", [&](std::ostream& f) { write_ecdf_csv(f, curves.lowrisk); });

  s.console() << fmt::format("{:<14} {:>8} {:>10} {:>10} {:>9}\n", "dataset", "payments", "rw-some", "illicit",
                             "susp-FP");
  for (const auto& r : result.summary) {
    s.console() << fmt::format("{:<14} {:>8} {:>10} {:>10} {:>9}\n", r.dataset, r.payments, r.ransomware_some,
                               r.illicit_some, r.suspected_fp);
  }
}

void stage_synth(Session& s) {
  const Options& o = s.options();
  synth::ScenarioConfig cfg =
      o.scenario.empty() ? synth::ScenarioConfig::paper_shape() : synth::ScenarioConfig::load(o.scenario);
  if (o.seed) cfg.seed = *o.seed;
  if (o.scale) cfg.scale = *o.scale;
  const synth::Scenario scenario = synth::generate(cfg);
  synth::write_scenario(scenario, o.out);
  s.console() << fmt::format("wrote {} transactions, {} planted payments, {} decoys to {}\n",
                             scenario.transactions.size(), scenario.manifest.payments.size(),
                             scenario.manifest.decoys.size(), o.out);
}

const std::vector<std::pair<std::string, void (*)(Session&)>>& pipeline_stages() {
  static const std::vector<std::pair<std::string, void (*)(Session&)>> stages{
      {"ingest", stage_ingest},
      {"cluster", stage_cluster},
      {"rank-sources", stage_rank_sources},
      {"detect-origin", stage_detect_origin},
      {"detect-expanded", stage_detect_expanded},
      {"splits", stage_splits},
      {"analyze", stage_analyze},
      {"validate", stage_validate},
  };
  return stages;
}

void stage_pipeline(Session& s) {
  for (const auto& [name, fn] : pipeline_stages()) {
    const auto& files = stage_outputs().at(name);
    const bool cached = std::all_of(files.begin(), files.end(), [&](const auto& f) { return fs::exists(s.out_path(f)); });
    if (s.options().resume && cached) {
      s.console() << fmt::format("[{}] cached\n", name);
      continue;
    }
    s.console() << fmt::format("[{}]\n", name);
    try {
      fn(s);
    } catch (const StageError&) {
      throw;
    } catch (const ParseError&) {
      throw;
    } catch (const NotFound&) {
      throw;
    } catch (const Error& e) {
      throw StageError(name, e.what());
    }
  }
}

void report(std::ostream& err, const std::string& stage, const std::string& kind, const std::string& message,
            const ParseError* pe = nullptr) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  if (!stage.empty()) j["stage"] = stage;
  j["message"] = message;
  if (pe) {
    j["source"] = pe->source();
    j["line"] = pe->line();
    j["field"] = pe->field();
  }
  err << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Ransomware payment tracing over a UTXO transaction graph", "rwtrace"};
  app.set_config("--config", "", "Flat key=value file of option defaults");
  app.require_subcommand(1);
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--chain", o.chain, "Transaction file (.jsonl or .csv)");
  app.add_option("--prices", o.prices, "Daily BTC/USD close CSV");
  app.add_option("--labels", o.labels, "Detector label CSV");
  app.add_option("--independent-labels", o.independent, "Independent label CSV used by validate");
  app.add_option("--seeds", o.seeds, "Seed payment CSV");
  app.add_option("--dataset", o.dataset, "Tagged dataset CSV to summarize");
  app.add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--hops", o.hops, "Hop bound")->check(CLI::Range(1, 3))->capture_default_str();
  app.add_option("--min-btc", o.min_btc, "Origin rule: minimum BTC received");
  app.add_option("--max-incoming", o.max_incoming, "Origin rule: maximum incoming transactions");
  app.add_option("--lowrisk-share", o.lowrisk_share, "Expanded rule: low-risk origin share to exceed");
  app.add_option("--nontrivial-share", o.nontrivial_share, "Expanded rule: non-trivial exposure share");
  app.add_flag("--change-clustering", o.change_clustering, "Add change-address clustering");
  app.add_flag("--cluster-keyed", o.cluster_keyed, "Compare exposure by destination cluster");
  app.add_flag("--absolute", o.absolute, "Overlap on value rather than share");
  app.add_flag("--row-normalized", o.row_normalized, "Normalize overlap rows by their maximum");
  app.add_option("--bucket", o.bucket, "Time series bucket: month, quarter or year")->capture_default_str();
  app.add_flag("--resume", o.resume, "pipeline: skip stages whose outputs exist");
  app.add_option("--seed", o.seed, "synth: RNG seed");
  app.add_option("--scale", o.scale, "synth: count multiplier");
  app.add_option("--scenario", o.scenario, "synth: scenario JSON (default paper-shape)");

  std::map<std::string, void (*)(Session&)> commands{
      {"ingest", stage_ingest},
      {"cluster", stage_cluster},
      {"rank-sources", stage_rank_sources},
      {"detect-origin", stage_detect_origin},
      {"detect-expanded", stage_detect_expanded},
      {"splits", stage_splits},
      {"analyze", stage_analyze},
      {"validate", stage_validate},
      {"synth", stage_synth},
      {"pipeline", stage_pipeline},
  };
  const std::map<std::string, std::string> help{
      {"ingest", "Load a chain and report its shape"},
      {"cluster", "Cluster addresses"},
      {"rank-sources", "Rank the clusters funding the seed payments"},
      {"detect-origin", "Find payments from the negotiator clusters"},
      {"detect-expanded", "Find payments linked to known ones through shared destinations"},
      {"splits", "Detect affiliate/operator splits"},
      {"analyze", "Families, time series, destinations and overlap"},
      {"validate", "Check payments against independent labels"},
      {"synth", "Write a synthetic scenario with ground truth"},
      {"pipeline", "Run every stage from ingest to validate"},
  };
  for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name))->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    report(err, "", "usage", e.what());
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Session session(o, out);
  try {
    commands.at(name)(session);
  } catch (const StageError& e) {
    report(err, e.stage(), "error", e.what());
    return 1;
  } catch (const ParseError& e) {
    report(err, name, "parse", e.what(), &e);
    return 1;
  } catch (const NotFound& e) {
    report(err, name, "not_found", e.what());
    return 1;
  } catch (const Error& e) {
    report(err, name, "error", e.what());
    return 1;
  } catch (const std::exception& e) {
    report(err, name, "internal", e.what());
    return 1;
  }
  return 0;
}

}  // namespace rwtrace::cli

#include "rwtrace/labels.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/core.h>

#include "rwtrace/csv.hpp"
#include "rwtrace/error.hpp"

namespace rwtrace {

std::string_view to_string(Category c) noexcept {
  switch (c) {
    case Category::ransomware: return "ransomware";
    case Category::exchange_low_risk: return "exchange-low-risk";
    case Category::exchange_high_risk: return "exchange-high-risk";
    case Category::mixer: return "mixer";
    case Category::other_illicit: return "other-illicit";
    case Category::other_licit: return "other-licit";
    case Category::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::optional<Category> parse_category(std::string_view s) noexcept {
  for (Category c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

bool is_illicit(Category c) noexcept {
  return c == Category::ransomware || c == Category::exchange_high_risk || c == Category::mixer ||
         c == Category::other_illicit;
}

bool is_low_risk(Category c) noexcept { return c == Category::exchange_low_risk || c == Category::other_licit; }

void LabelSet::add(LabelRecord rec) {
  if (rec.category != Category::ransomware && !rec.family.empty()) {
    throw Error(fmt::format("label for {}: family '{}' given for non-ransomware category", rec.subject, rec.family));
  }
  auto it = index_.find(rec.subject);
  if (it != index_.end()) {
    const LabelRecord& old = records_[it->second];
    if (old.entity == rec.entity && old.category == rec.category && old.family == rec.family && old.source == rec.source) {
      return;
    }
    throw Error(fmt::format("conflicting labels for address {}", rec.subject));
  }
  index_.emplace(rec.subject, records_.size());
  records_.push_back(std::move(rec));
}

const LabelRecord* LabelSet::find(std::string_view address) const {
  auto it = index_.find(std::string(address));
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::set<std::string> LabelSet::sources() const {
  std::set<std::string> s;
  for (const auto& r : records_) s.insert(r.source);
  return s;
}

std::set<std::string> LabelSet::families() const {
  std::set<std::string> s;
  for (const auto& r : records_) {
    if (!r.family.empty()) s.insert(r.family);
  }
  return s;
}

void LabelSet::merge(const LabelSet& other) {
  for (const auto& r : other.records_) {
    auto it = index_.find(r.subject);
    if (it != index_.end()) {
      records_[it->second] = r;
    } else {
      index_.emplace(r.subject, records_.size());
      records_.push_back(r);
    }
  }
}

LabelSet LabelSet::load(std::istream& in, const std::string& source) {
  LabelSet set;
  csv::Reader r(in, source);
  while (r.next()) {
    LabelRecord rec;
    rec.subject = r.at("address");
    if (rec.subject.empty()) throw ParseError(source, r.line(), "address", "empty address");
    rec.entity = r.at("entity");
    auto cat = parse_category(r.at("category"));
    if (!cat) throw ParseError(source, r.line(), "category", fmt::format("unknown category '{}'", r.at("category")));
    rec.category = *cat;
    rec.family = r.at("family");
    if (rec.category != Category::ransomware && !rec.family.empty()) {
      throw ParseError(source, r.line(), "family", "family is only allowed for ransomware labels");
    }
    rec.source = r.at("source");
    try {
      set.add(std::move(rec));
    } catch (const Error& e) {
      throw ParseError(source, r.line(), "address", e.what());
    }
  }
  return set;
}

LabelSet LabelSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open label file {}", path.string()));
  return load(in, path.string());
}

LabelIndex::LabelIndex(const Chain& chain, const LabelSet& labels) : by_address_(chain.address_count(), nullptr) {
  for (const LabelRecord& rec : labels.records()) {
    if (auto id = chain.find_address(rec.subject)) by_address_[*id] = &rec;
  }
}

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::ransomwhere: return "ransomwhere";
    case Provenance::orig_cluster: return "orig_cluster";
    case Provenance::expanded: return "expanded";
  }
  return "ransomwhere";
}

std::optional<Provenance> parse_provenance(std::string_view s) noexcept {
  for (Provenance p : {Provenance::ransomwhere, Provenance::orig_cluster, Provenance::expanded}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

bool SeedSet::contains(std::string_view address) const { return find(address) != nullptr; }

const SeedRecord* SeedSet::find(std::string_view address) const {
  for (const auto& r : records) {
    if (r.address == address) return &r;
  }
  return nullptr;
}

std::vector<SeedRecord> SeedSet::with_tag(Provenance tag) const {
  std::vector<SeedRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out), [&](const SeedRecord& r) { return r.tag == tag; });
  return out;
}

SeedSet SeedSet::load(std::istream& in, const std::string& source) {
  SeedSet set;
  csv::Reader r(in, source);
  const char* tag_col = r.has_column("dataset_tag") ? "dataset_tag" : "dataset";
  while (r.next()) {
    SeedRecord rec;
    rec.address = r.at("address");
    if (rec.address.empty()) throw ParseError(source, r.line(), "address", "empty address");
    rec.family = r.get("family").value_or("");
    auto tag = parse_provenance(r.at(tag_col));
    if (!tag) {
      throw ParseError(source, r.line(), tag_col,
                       fmt::format("unknown dataset tag '{}', expected ransomwhere|orig_cluster|expanded", r.at(tag_col)));
    }
    rec.tag = *tag;
    set.records.push_back(std::move(rec));
  }
  return set;
}

SeedSet SeedSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open seed file {}", path.string()));
  return load(in, path.string());
}

DatasetShape dataset_shape(const SeedSet& dataset) {
  DatasetShape shape;
  std::set<std::pair<std::string, Provenance>> seen;
  for (const auto& r : dataset.records) {
    if (!seen.emplace(r.address, r.tag).second) continue;
    switch (r.tag) {
      case Provenance::ransomwhere: ++shape.ransomwhere; break;
      case Provenance::orig_cluster: ++shape.orig_cluster; break;
      case Provenance::expanded: ++shape.expanded; break;
    }
  }
  return shape;
}

void write_labels_csv(std::ostream& out, const LabelSet& labels) {
  csv::Writer w(out);
  w.row({"address", "entity", "category", "family", "source"});
  for (const auto& r : labels.records()) {
    w.row({r.subject, r.entity, std::string(to_string(r.category)), r.family, r.source});
  }
}

void write_seeds_csv(std::ostream& out, const SeedSet& seeds) {
  csv::Writer w(out);
  w.row({"address", "family", "dataset_tag"});
  for (const auto& r : seeds.records) w.row({r.address, r.family, std::string(to_string(r.tag))});
}

}  // namespace rwtrace

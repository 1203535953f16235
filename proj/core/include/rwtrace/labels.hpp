#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rwtrace/chain.hpp"

namespace rwtrace {

enum class Category {
  ransomware,
  exchange_low_risk,
  exchange_high_risk,
  mixer,
  other_illicit,
  other_licit,
  unlabeled,
};

inline constexpr std::array kAllCategories{Category::ransomware,    Category::exchange_low_risk,
                                           Category::exchange_high_risk, Category::mixer,
                                           Category::other_illicit, Category::other_licit,
                                           Category::unlabeled};

std::string_view to_string(Category c) noexcept;
std::optional<Category> parse_category(std::string_view s) noexcept;

// Ransomware, high-risk exchanges, mixers and other illicit services.
bool is_illicit(Category c) noexcept;
bool is_low_risk(Category c) noexcept;

struct LabelRecord {
  std::string subject;  // address
  std::string entity;
  Category category = Category::unlabeled;
  std::string family;  // only for Category::ransomware
  std::string source;
};

// Address -> label. One record per address; a conflicting duplicate is an error.
class LabelSet {
 public:
  void add(LabelRecord rec);
  const LabelRecord* find(std::string_view address) const;

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::vector<LabelRecord>& records() const noexcept { return records_; }
  std::set<std::string> sources() const;
  std::set<std::string> families() const;

  // Records of `other` win over existing ones for the same address.
  void merge(const LabelSet& other);

  // CSV `address,entity,category,family,source`.
  static LabelSet load(std::istream& in, const std::string& source = "labels");
  static LabelSet load(const std::filesystem::path& path);

 private:
  std::vector<LabelRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Label lookups by chain address id; unlabeled addresses map to nullptr.
class LabelIndex {
 public:
  LabelIndex() = default;
  LabelIndex(const Chain& chain, const LabelSet& labels);

  const LabelRecord* at(AddressId id) const noexcept {
    return id < by_address_.size() ? by_address_[id] : nullptr;
  }
  Category category(AddressId id) const noexcept {
    const LabelRecord* r = at(id);
    return r ? r->category : Category::unlabeled;
  }

 private:
  std::vector<const LabelRecord*> by_address_;
};

enum class Provenance { ransomwhere, orig_cluster, expanded };

std::string_view to_string(Provenance p) noexcept;
std::optional<Provenance> parse_provenance(std::string_view s) noexcept;

inline constexpr std::string_view kClusterAAnchor = "19JyAkHKh36sFduqK4hMsMZhU6ZDoLotW";
inline constexpr std::string_view kClusterBAnchor = "3DtLWACQNiVFaXQyMS57PjVir19FRY32Hf";

struct SeedRecord {
  std::string address;
  std::string family;
  Provenance tag = Provenance::ransomwhere;
};

struct SeedSet {
  std::vector<SeedRecord> records;
  std::string anchor_a{kClusterAAnchor};
  std::string anchor_b{kClusterBAnchor};

  bool contains(std::string_view address) const;
  const SeedRecord* find(std::string_view address) const;
  std::vector<SeedRecord> with_tag(Provenance tag) const;

  // CSV `address,family,dataset_tag`. Also accepts a `dataset` column in place of
  // `dataset_tag` so released dataset files load unchanged.
  static SeedSet load(std::istream& in, const std::string& source = "seeds");
  static SeedSet load(const std::filesystem::path& path);
};

struct DatasetShape {
  std::size_t ransomwhere = 0;
  std::size_t orig_cluster = 0;
  std::size_t expanded = 0;
  std::size_t total() const noexcept { return ransomwhere + orig_cluster + expanded; }
};

void write_labels_csv(std::ostream& out, const LabelSet& labels);
void write_seeds_csv(std::ostream& out, const SeedSet& seeds);

// Distinct-address counts per provenance tag.
DatasetShape dataset_shape(const SeedSet& dataset);

}  // namespace rwtrace

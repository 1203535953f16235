#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

namespace rwtrace {

using Satoshi = std::int64_t;
inline constexpr Satoshi kSatPerBtc = 100'000'000;

using Date = std::chrono::sys_days;

// UTC calendar date of a unix timestamp.
Date date_of(std::int64_t unix_seconds);
std::string format_date(Date d);
// Accepts YYYY-MM-DD. Throws Error on anything else.
Date parse_date(std::string_view text);

// Whole US cents. Arithmetic is exact; conversion from BTC rounds once per receipt.
struct Usd {
  std::int64_t cents = 0;

  double dollars() const noexcept { return static_cast<double>(cents) / 100.0; }
  std::string str() const;  // "1234.56"

  friend Usd operator+(Usd a, Usd b) noexcept { return {a.cents + b.cents}; }
  Usd& operator+=(Usd o) noexcept {
    cents += o.cents;
    return *this;
  }
  friend auto operator<=>(Usd, Usd) = default;
};

// Closing BTC-USD prices keyed by UTC date. Prices are fixed-point with 8 decimals.
class PriceTable {
 public:
  static constexpr std::int64_t kScale = 100'000'000;

  void set(Date d, std::int64_t price_e8);
  bool contains(Date d) const { return prices_.count(d) != 0; }
  // Throws NotFound listing the nearest available dates.
  std::int64_t price_e8(Date d) const;
  double price(Date d) const { return static_cast<double>(price_e8(d)) / kScale; }

  std::size_t size() const noexcept { return prices_.size(); }
  bool empty() const noexcept { return prices_.empty(); }
  const std::map<Date, std::int64_t>& entries() const noexcept { return prices_; }

  // CSV `date,usd_close`.
  static PriceTable load(std::istream& in, const std::string& source = "prices");
  static PriceTable load(const std::filesystem::path& path);

 private:
  std::map<Date, std::int64_t> prices_;
};

// Parses a non-negative decimal with at most 8 fractional digits into 1e-8 units.
std::int64_t parse_fixed8(std::string_view text);

// amount x 1e-8 x price, rounded to cents half-to-even.
Usd usd_value_at(Satoshi amount, std::int64_t price_e8);
Usd usd_value(Satoshi amount, Date d, const PriceTable& prices);

std::string format_btc(Satoshi amount);

// CSV `date,usd_close`, loadable by PriceTable::load.
void write_prices_csv(std::ostream& out, const PriceTable& prices);  // "1.23456789"

}  // namespace rwtrace

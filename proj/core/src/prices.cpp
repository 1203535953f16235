#include "rwtrace/prices.hpp"

#include <cstdlib>
#include <fstream>

#include <fmt/core.h>

#include "rwtrace/csv.hpp"
#include "rwtrace/error.hpp"

namespace rwtrace {

Date date_of(std::int64_t unix_seconds) {
  using namespace std::chrono;
  return floor<days>(sys_seconds{seconds{unix_seconds}});
}

std::string format_date(Date d) {
  std::chrono::year_month_day ymd{d};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

Date parse_date(std::string_view text) {
  auto bad = [&] { return Error(fmt::format("invalid date '{}', expected YYYY-MM-DD", text)); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') throw bad();
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)}, std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                  std::chrono::day{static_cast<unsigned>(num(8, 2))}};
  if (!ymd.ok()) throw bad();
  return std::chrono::sys_days{ymd};
}

std::string Usd::str() const {
  std::int64_t c = cents < 0 ? -cents : cents;
  return fmt::format("{}{}.{:02d}", cents < 0 ? "-" : "", c / 100, c % 100);
}

void PriceTable::set(Date d, std::int64_t price_e8) {
  if (price_e8 <= 0) throw Error(fmt::format("price for {} must be positive", format_date(d)));
  prices_[d] = price_e8;
}

std::int64_t PriceTable::price_e8(Date d) const {
  auto it = prices_.find(d);
  if (it != prices_.end()) return it->second;
  std::string nearest;
  auto after = prices_.lower_bound(d);
  if (after != prices_.begin()) nearest += format_date(std::prev(after)->first);
  if (after != prices_.end()) {
    if (!nearest.empty()) nearest += ", ";
    nearest += format_date(after->first);
  }
  throw NotFound(fmt::format("no BTC-USD price for {}; nearest available: {}", format_date(d),
                             nearest.empty() ? "none (table empty)" : nearest));
}

std::int64_t parse_fixed8(std::string_view text) {
  auto bad = [&] { return Error(fmt::format("invalid decimal '{}'", text)); };
  if (text.empty()) throw bad();
  std::int64_t whole = 0, frac = 0;
  int frac_digits = 0;
  bool seen_dot = false, any_digit = false;
  for (char c : text) {
    if (c == '.') {
      if (seen_dot) throw bad();
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      any_digit = true;
      if (seen_dot) {
        if (++frac_digits > 8) throw bad();
        frac = frac * 10 + (c - '0');
      } else {
        if (whole > 9'000'000'000) throw bad();
        whole = whole * 10 + (c - '0');
      }
    } else {
      throw bad();
    }
  }
  if (!any_digit) throw bad();
  for (int i = frac_digits; i < 8; ++i) frac *= 10;
  return whole * PriceTable::kScale + frac;
}

PriceTable PriceTable::load(std::istream& in, const std::string& source) {
  PriceTable table;
  csv::Reader r(in, source);
  while (r.next()) {
    Date d;
    std::int64_t p;
    try {
      d = parse_date(r.at("date"));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, r.line(), "date", e.what());
    }
    try {
      p = parse_fixed8(r.at("usd_close"));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, r.line(), "usd_close", e.what());
    }
    if (p <= 0) throw ParseError(source, r.line(), "usd_close", "price must be positive");
    if (table.contains(d)) throw ParseError(source, r.line(), "date", "duplicate date");
    table.set(d, p);
  }
  return table;
}

PriceTable PriceTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open price file {}", path.string()));
  return load(in, path.string());
}

Usd usd_value_at(Satoshi amount, std::int64_t price_e8) {
  if (amount < 0) throw Error("negative satoshi amount");
  // sat * 1e-8 BTC * (p * 1e-8) USD/BTC = sat * p * 1e-16 USD = sat * p / 1e14 cents
  constexpr __int128 kDiv = static_cast<__int128>(100'000'000) * 1'000'000;
  __int128 num = static_cast<__int128>(amount) * price_e8;
  __int128 q = num / kDiv;
  __int128 rem = num % kDiv;
  __int128 twice = rem * 2;
  if (twice > kDiv || (twice == kDiv && (q % 2) == 1)) ++q;
  return Usd{static_cast<std::int64_t>(q)};
}

Usd usd_value(Satoshi amount, Date d, const PriceTable& prices) { return usd_value_at(amount, prices.price_e8(d)); }

std::string format_btc(Satoshi amount) {
  const char* sign = amount < 0 ? "-" : "";
  Satoshi a = amount < 0 ? -amount : amount;
  return fmt::format("{}{}.{:08d}", sign, a / kSatPerBtc, a % kSatPerBtc);
}

void write_prices_csv(std::ostream& out, const PriceTable& prices) {
  out << "date,usd_close\n";
  for (const auto& [d, p] : prices.entries()) {
    out << format_date(d) << ',' << fmt::format("{}.{:08d}", p / PriceTable::kScale, p % PriceTable::kScale) << '\n';
  }
}

}  // namespace rwtrace

#include "rwtrace/payments.hpp"

#include <chrono>
#include <charconv>
#include <istream>
#include <ostream>

#include <fmt/core.h>

#include "rwtrace/csv.hpp"
#include "rwtrace/error.hpp"

namespace rwtrace {

std::string format_timestamp(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{unix_seconds}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hms.hours().count(),
                     hms.minutes().count(), hms.seconds().count());
}

std::int64_t parse_timestamp(std::string_view text) {
  auto bad = [&] { return Error(fmt::format("invalid timestamp '{}' (expected YYYY-MM-DDTHH:MM:SSZ)", text)); };
  if (text.size() != 20 || text[10] != 'T' || text[19] != 'Z') throw bad();
  const Date d = parse_date(text.substr(0, 10));
  int parts[3];
  for (int i = 0; i < 3; ++i) {
    const auto field = text.substr(11 + 3 * i, 2);
    if (i < 2 && text[13 + 3 * i] != ':') throw bad();
    auto [p, ec] = std::from_chars(field.data(), field.data() + 2, parts[i]);
    if (ec != std::errc{} || p != field.data() + 2) throw bad();
  }
  if (parts[0] > 23 || parts[1] > 59 || parts[2] > 59) throw bad();
  return std::chrono::duration_cast<std::chrono::seconds>(d.time_since_epoch()).count() + parts[0] * 3600 +
         parts[1] * 60 + parts[2];
}

void write_payments_csv(std::ostream& out, std::span<const PaymentRecord> payments) {
  csv::Writer w(out);
  w.row({"address", "family", "total_btc", "total_usd", "first_seen", "last_seen", "provenance", "c1", "c2", "c3",
         "c4a", "c4b"});
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  for (const auto& p : payments) {
    w.row({p.address, p.family, format_btc(p.total_received), p.total_usd.str(), format_timestamp(p.first_seen),
           format_timestamp(p.last_seen), std::string(to_string(p.provenance)), b(p.criteria.c1), b(p.criteria.c2),
           b(p.criteria.c3), b(p.criteria.c4a), b(p.criteria.c4b)});
  }
}

namespace {

bool parse_bool(const csv::Reader& r, std::string_view col) {
  const std::string& v = r.at(col);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0" || v.empty()) return false;
  throw ParseError(r.source(), r.line(), std::string(col), "expected true or false");
}

}  // namespace

std::vector<PaymentRecord> read_payments_csv(std::istream& in, const std::string& source) {
  csv::Reader r(in, source);
  std::vector<PaymentRecord> out;
  while (r.next()) {
    PaymentRecord p;
    p.address = r.at("address");
    if (p.address.empty()) throw ParseError(source, r.line(), "address", "empty address");
    p.family = r.at("family");
    auto field = [&](std::string_view col, auto fn) {
      try {
        return fn(r.at(col));
      } catch (const ParseError&) {
        throw;
      } catch (const Error& e) {
        throw ParseError(source, r.line(), std::string(col), e.what());
      }
    };
    p.total_received = field("total_btc", [](const std::string& s) { return parse_fixed8(s); });
    p.total_usd.cents = field("total_usd", [](const std::string& s) {
      const bool neg = !s.empty() && s[0] == '-';
      const std::int64_t e8 = parse_fixed8(neg ? std::string_view(s).substr(1) : std::string_view(s));
      if (e8 % 1'000'000 != 0) throw Error("more than two decimals");
      return (neg ? -1 : 1) * e8 / 1'000'000;
    });
    p.first_seen = field("first_seen", [](const std::string& s) { return parse_timestamp(s); });
    p.last_seen = field("last_seen", [](const std::string& s) { return parse_timestamp(s); });
    const auto prov = parse_provenance(r.at("provenance"));
    if (!prov) throw ParseError(source, r.line(), "provenance", "unknown provenance");
    p.provenance = *prov;
    p.criteria = {parse_bool(r, "c1"), parse_bool(r, "c2"), parse_bool(r, "c3"), parse_bool(r, "c4a"),
                  parse_bool(r, "c4b")};
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace rwtrace

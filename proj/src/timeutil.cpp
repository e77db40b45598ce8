#include "nesy/timeutil.hpp"

#include <cctype>
#include <cstdio>

namespace nesy {

namespace {

// Days since 1970-01-01 from a civil date (proleptic Gregorian).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

bool read_uint(const std::string& s, std::size_t& pos, std::size_t digits, long& out) {
  if (pos + digits > s.size()) return false;
  long v = 0;
  for (std::size_t i = 0; i < digits; ++i) {
    char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
  }
  pos += digits;
  out = v;
  return true;
}

}  // namespace

std::optional<std::int64_t> parse_iso8601_ms(const std::string& raw) {
  // trim surrounding whitespace
  std::size_t b = raw.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return std::nullopt;
  std::size_t e = raw.find_last_not_of(" \t\r\n");
  std::string s = raw.substr(b, e - b + 1);

  std::size_t pos = 0;
  long year, month, day;
  if (!read_uint(s, pos, 4, year)) return std::nullopt;
  if (pos >= s.size() || s[pos] != '-') return std::nullopt;
  ++pos;
  if (!read_uint(s, pos, 2, month)) return std::nullopt;
  if (pos >= s.size() || s[pos] != '-') return std::nullopt;
  ++pos;
  if (!read_uint(s, pos, 2, day)) return std::nullopt;
  if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;

  long hh = 0, mm = 0, ss = 0, frac_ms = 0;
  long off_min = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!read_uint(s, pos, 2, hh)) return std::nullopt;
    if (pos >= s.size() || s[pos] != ':') return std::nullopt;
    ++pos;
    if (!read_uint(s, pos, 2, mm)) return std::nullopt;
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      if (!read_uint(s, pos, 2, ss)) return std::nullopt;
    }
    if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
      ++pos;
      std::size_t start = pos;
      long frac = 0;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        if (pos - start < 3) frac = frac * 10 + (s[pos] - '0');
        ++pos;
      }
      std::size_t ndig = std::min<std::size_t>(pos - start, 3);
      if (ndig == 0) return std::nullopt;
      for (std::size_t i = ndig; i < 3; ++i) frac *= 10;
      frac_ms = frac;
    }
    if (pos < s.size()) {
      char c = s[pos];
      if (c == 'Z' || c == 'z') {
        ++pos;
      } else if (c == '+' || c == '-') {
        int sign = c == '+' ? 1 : -1;
        ++pos;
        long oh, om = 0;
        if (!read_uint(s, pos, 2, oh)) return std::nullopt;
        if (pos < s.size() && s[pos] == ':') ++pos;
        if (pos < s.size()) {
          if (!read_uint(s, pos, 2, om)) return std::nullopt;
        }
        off_min = sign * (oh * 60 + om);
      }
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                      static_cast<unsigned>(day));
  std::int64_t ms = days * 86400000LL + hh * 3600000LL + mm * 60000LL +
                    ss * 1000LL + frac_ms;
  ms -= off_min * 60000LL;  // normalize to UTC
  return ms;
}

std::string format_iso8601_ms(std::int64_t ms) {
  std::int64_t days = ms / 86400000LL;
  std::int64_t rem = ms % 86400000LL;
  if (rem < 0) {
    rem += 86400000LL;
    --days;
  }
  std::int64_t y;
  unsigned mo, d;
  civil_from_days(days, y, mo, d);
  int hh = static_cast<int>(rem / 3600000LL);
  int mi = static_cast<int>(rem / 60000LL % 60);
  int ss = static_cast<int>(rem / 1000LL % 60);
  int mmm = static_cast<int>(rem % 1000LL);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02d.%03dZ",
                static_cast<long long>(y), mo, d, hh, mi, ss, mmm);
  return buf;
}

}  // namespace nesy

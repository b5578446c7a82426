#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

namespace stationcast {

// Timestamps are UTC-naive seconds since 1970-01-01 00:00:00. The text form
// used across all file interfaces is "YYYY-MM-DD HH:MM:SS".

namespace detail {

inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yr + (m <= 2));
}

}  // namespace detail

inline std::optional<std::int64_t> parse_timestamp(const std::string& s) {
  int y, mo, d, h, mi, se;
  char trail;
  int n = std::sscanf(s.c_str(), "%d-%d-%d %d:%d:%d%c", &y, &mo, &d, &h, &mi, &se, &trail);
  if (n != 6) return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 || se > 60) return std::nullopt;
  return detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
         h * 3600 + mi * 60 + se;
}

inline std::string format_timestamp(std::int64_t ts) {
  std::int64_t days = ts / 86400;
  std::int64_t rem = ts % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y;
  unsigned mo, d;
  detail::civil_from_days(days, y, mo, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02lld:%02lld:%02lld", y, mo, d,
                static_cast<long long>(rem / 3600), static_cast<long long>((rem / 60) % 60),
                static_cast<long long>(rem % 60));
  return buf;
}

inline std::int64_t floor_to_hour(std::int64_t ts) {
  std::int64_t h = ts / 3600;
  if (ts % 3600 < 0) --h;
  return h * 3600;
}

}  // namespace stationcast

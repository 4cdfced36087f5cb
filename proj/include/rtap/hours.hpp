// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RTAP_HOURS_HPP
#define RTAP_HOURS_HPP

#include <compare>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace rtap {

namespace detail {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
inline std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace detail

// Hour-aligned UTC instant. The dataset's minimal time interval is one
// hour, so all timestamps are carried as whole hours since the Unix epoch.
struct HourStamp {
  std::int64_t hours = 0;

  auto operator<=>(const HourStamp&) const = default;

  HourStamp next() const { return {hours + 1}; }
  HourStamp prev() const { return {hours - 1}; }
  friend HourStamp operator+(HourStamp h, std::int64_t n) { return {h.hours + n}; }
  friend HourStamp operator-(HourStamp h, std::int64_t n) { return {h.hours - n}; }
  friend std::int64_t operator-(HourStamp a, HourStamp b) { return a.hours - b.hours; }
};

// Accepts "YYYY-MM-DDTHH:MM[:SS][Z]" and "YYYY-MM-DD HH:MM[:SS]".
// Minutes and seconds are truncated to the containing hour bucket.
inline std::optional<HourStamp> parse_hour(std::string_view text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0, tail = 0;
  std::string buf(text);
  int n = std::sscanf(buf.c_str(), "%d-%d-%d%c%d:%d:%d%c", &y, &mo, &d, &sep, &h,
                      &mi, &s, &tail);
  if (n < 6) return std::nullopt;
  if (sep != 'T' && sep != ' ') return std::nullopt;
  if (n == 8 && tail != 'Z') return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || d > 31) return std::nullopt;
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return std::nullopt;
  // Reject trailing garbage after a "HH:MM" form (e.g. "10:15x").
  if (n == 6) {
    // Re-scan to find where the minutes field ended.
    char z = 0;
    if (std::sscanf(buf.c_str(), "%d-%d-%d%c%d:%d%c", &y, &mo, &d, &sep, &h, &mi,
                    &z) == 7 &&
        z != 'Z' && z != ':')
      return std::nullopt;
  }
  return HourStamp{detail::days_from_civil(y, mo, d) * 24 + h};
}

inline std::string format_hour(HourStamp t) {
  std::int64_t days = t.hours / 24;
  int hour = static_cast<int>(t.hours % 24);
  if (hour < 0) {
    hour += 24;
    --days;
  }
  int y, m, d;
  detail::civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00:00Z", y, m, d, hour);
  return buf;
}

}  // namespace rtap

#endif  // RTAP_HOURS_HPP

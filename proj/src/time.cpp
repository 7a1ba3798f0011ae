#include "vkg/time.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace vkg {
namespace {

// Reads exactly `width` digits at `pos`.
bool read_fixed(std::string_view s, std::size_t pos, std::size_t width, int& out) {
  if (pos + width > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

std::optional<Timestamp> compose(int y, int mo, int d, int h, int mi, int sec, int ms,
                                 int offset_min) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
  Timestamp t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{ms};
  return t - minutes{offset_min};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  const auto s = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;

  // DD/MM/YYYY HH:MM:SS
  if (s.size() == 19 && s[2] == '/' && s[5] == '/') {
    if (!read_fixed(s, 0, 2, d) || !read_fixed(s, 3, 2, mo) || !read_fixed(s, 6, 4, y) ||
        s[10] != ' ' || !read_fixed(s, 11, 2, h) || s[13] != ':' || !read_fixed(s, 14, 2, mi) ||
        s[16] != ':' || !read_fixed(s, 17, 2, sec))
      return std::nullopt;
    return compose(y, mo, d, h, mi, sec, 0, 0);
  }

  if (s.size() < 19) return std::nullopt;
  if (!read_fixed(s, 0, 4, y) || s[4] != '-' || !read_fixed(s, 5, 2, mo) || s[7] != '-' ||
      !read_fixed(s, 8, 2, d) || (s[10] != ' ' && s[10] != 'T') || !read_fixed(s, 11, 2, h) ||
      s[13] != ':' || !read_fixed(s, 14, 2, mi) || s[16] != ':' || !read_fixed(s, 17, 2, sec))
    return std::nullopt;

  std::size_t pos = 19;
  int ms = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    int frac = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (digits < 3) frac = frac * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (int i = digits; i < 3; ++i) frac *= 10;
    ms = frac;
  }

  int offset = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      ++pos;
    } else if ((s[pos] == '+' || s[pos] == '-') && s[10] == 'T') {
      const int sign = s[pos] == '-' ? -1 : 1;
      int oh = 0, om = 0;
      if (!read_fixed(s, pos + 1, 2, oh)) return std::nullopt;
      std::size_t p = pos + 3;
      if (p < s.size() && s[p] == ':') ++p;
      if (!read_fixed(s, p, 2, om) || p + 2 != s.size()) return std::nullopt;
      offset = sign * (oh * 60 + om);
      pos = s.size();
    } else {
      return std::nullopt;
    }
  }
  return compose(y, mo, d, h, mi, sec, ms, offset);
}

namespace {

std::string format_impl(Timestamp t, bool iso) {
  using namespace std::chrono;
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[40];
  const auto ms = static_cast<int>(hms.subseconds().count());
  if (!iso) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
  } else if (ms == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()), ms);
  }
  return buf;
}

}  // namespace

std::string format_timestamp(Timestamp t) { return format_impl(t, true); }
std::string format_timestamp_plain(Timestamp t) { return format_impl(t, false); }

std::optional<Date> parse_date(std::string_view text) {
  const auto s = trim(text);
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || !read_fixed(s, 0, 4, y) || s[4] != '-' || !read_fixed(s, 5, 2, m) ||
      s[7] != '-' || !read_fixed(s, 8, 2, d))
    return std::nullopt;
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::int64_t seconds_of_day(Timestamp t) {
  using namespace std::chrono;
  return duration_cast<seconds>(t - floor<days>(t)).count();
}

}  // namespace vkg

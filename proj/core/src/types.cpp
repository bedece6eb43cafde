#include "attnet/types.hpp"

#include <charconv>
#include <cstdio>

namespace attnet {
namespace {

constexpr std::array<std::string_view, kNumCategories> kCategoryLabels = {
    "Adult content",         "Arts & Entertainment", "Business",
    "Healthcare",            "Media",                "NGO",
    "Political Supporter",   "Government & Politics", "Public Services",
    "Religion",              "Science",              "Sports",
    "Other",
};

constexpr std::array<std::string_view, kNumSuperCommunities> kSuperNames = {
    "InternationalSciHealth", "NationalElite", "Political", "Other"};

// Days since 1970-01-01 for a proleptic Gregorian date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2 ? 1 : 0;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t y;
  unsigned m;
  unsigned d;
};

constexpr Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2 ? 1 : 0), m, d};
}

bool read_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  auto res = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return res.ec == std::errc{};
}

}  // namespace

std::string_view category_label(Category c) {
  return kCategoryLabels[static_cast<std::size_t>(c)];
}

std::optional<Category> parse_category(std::string_view label) {
  for (std::size_t i = 0; i < kCategoryLabels.size(); ++i) {
    if (kCategoryLabels[i] == label) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::string_view super_community_name(SuperCommunity s) {
  return kSuperNames[index_of(s)];
}

std::optional<SuperCommunity> parse_super_community(std::string_view name) {
  for (std::size_t i = 0; i < kSuperNames.size(); ++i) {
    if (kSuperNames[i] == name) return static_cast<SuperCommunity>(i);
  }
  return std::nullopt;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;

  // Plain epoch seconds, optionally negative.
  if (s.find('-', 1) == std::string_view::npos &&
      s.find(':') == std::string_view::npos) {
    Timestamp value = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{}) return std::nullopt;
    if (res.ptr == s.data() + s.size()) return value;
    // Allow a fractional part.
    if (*res.ptr != '.') return std::nullopt;
    for (const char* p = res.ptr + 1; p != s.data() + s.size(); ++p) {
      if (*p < '0' || *p > '9') return std::nullopt;
    }
    return value;
  }

  int year = 0, month = 0, day = 0;
  if (!read_fixed(s, 0, 4, year) || s.size() < 10 || s[4] != '-' ||
      !read_fixed(s, 5, 2, month) || s[7] != '-' || !read_fixed(s, 8, 2, day)) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;
  const auto back = civil_from_days(days_from_civil(year, month, day));
  if (back.m != static_cast<unsigned>(month) || back.d != static_cast<unsigned>(day)) {
    return std::nullopt;
  }
  Timestamp t = days_from_civil(year, month, day) * kSecondsPerDay;
  if (s.size() == 10) return t;

  if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!read_fixed(s, 11, 2, hh) || s.size() < 16 || s[13] != ':' ||
      !read_fixed(s, 14, 2, mm)) {
    return std::nullopt;
  }
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    if (!read_fixed(s, 17, 2, ss)) return std::nullopt;
    pos = 19;
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == start) return std::nullopt;
  }
  t += hh * 3600 + mm * 60 + ss;

  if (pos == s.size()) return t;
  if (s[pos] == 'Z' && pos + 1 == s.size()) return t;
  if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '+' ? 1 : -1;
    int oh = 0, om = 0;
    if (!read_fixed(s, pos + 1, 2, oh)) return std::nullopt;
    std::size_t p = pos + 3;
    if (p < s.size() && s[p] == ':') ++p;
    if (p < s.size()) {
      if (!read_fixed(s, p, 2, om)) return std::nullopt;
      p += 2;
    }
    if (p != s.size() || oh > 23 || om > 59) return std::nullopt;
    return t - sign * (oh * 3600 + om * 60);
  }
  return std::nullopt;
}

std::string format_timestamp(Timestamp t) {
  std::int64_t days = t / kSecondsPerDay;
  std::int64_t rem = t % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  const Civil c = civil_from_days(days);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<long long>(c.y), c.m, c.d, static_cast<int>(rem / 3600),
                static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

}  // namespace attnet

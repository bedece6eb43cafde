#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace attnet {

using UserId = std::string;

// UTC seconds since the epoch.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

// Thrown for malformed input files (category table, gazetteer, config).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when an operation's preconditions on its numeric input fail.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Category : std::uint8_t {
  kAdultContent,
  kArtsEntertainment,
  kBusiness,
  kHealthcare,
  kMedia,
  kNgo,
  kPoliticalSupporter,
  kGovernmentPolitics,
  kPublicServices,
  kReligion,
  kScience,
  kSports,
  kOther,
};

inline constexpr std::size_t kNumCategories = 13;

// Exact label text as it appears in category files.
std::string_view category_label(Category c);
std::optional<Category> parse_category(std::string_view label);
inline constexpr std::array<Category, kNumCategories> kAllCategories = {
    Category::kAdultContent,     Category::kArtsEntertainment,
    Category::kBusiness,         Category::kHealthcare,
    Category::kMedia,            Category::kNgo,
    Category::kPoliticalSupporter, Category::kGovernmentPolitics,
    Category::kPublicServices,   Category::kReligion,
    Category::kScience,          Category::kSports,
    Category::kOther,
};

enum class SuperCommunity : std::uint8_t {
  kInternationalSciHealth = 0,
  kNationalElite = 1,
  kPolitical = 2,
  kOther = 3,
};

inline constexpr std::size_t kNumSuperCommunities = 4;
inline constexpr std::array<SuperCommunity, kNumSuperCommunities>
    kAllSuperCommunities = {
        SuperCommunity::kInternationalSciHealth,
        SuperCommunity::kNationalElite,
        SuperCommunity::kPolitical,
        SuperCommunity::kOther,
};

std::string_view super_community_name(SuperCommunity s);
std::optional<SuperCommunity> parse_super_community(std::string_view name);

inline std::size_t index_of(SuperCommunity s) {
  return static_cast<std::size_t>(s);
}

// Parses "2020-01-13T00:00:00Z", "2020-01-13 00:00:00+02:00", "2020-01-13"
// or plain epoch seconds. Fractional seconds are truncated.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

}  // namespace attnet

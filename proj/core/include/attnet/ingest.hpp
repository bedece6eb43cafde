#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "attnet/types.hpp"

namespace attnet {

enum class EventKind : std::uint8_t { kOriginal, kRetweet };

struct TweetEvent {
  std::string tweet_id;
  UserId author_id;
  Timestamp timestamp = 0;
  EventKind kind = EventKind::kOriginal;
  // Set iff kind == kRetweet; the user whose content was retweeted.
  std::optional<UserId> retweeted_author_id;
  std::optional<std::string> retweeted_tweet_id;
  std::optional<std::string> raw_location;

  bool is_retweet() const { return kind == EventKind::kRetweet; }
  bool is_self_retweet() const {
    return is_retweet() && retweeted_author_id && *retweeted_author_id == author_id;
  }

  friend bool operator==(const TweetEvent&, const TweetEvent&) = default;
};

// Closed interval [start, end].
struct ObservationWindow {
  Timestamp start = std::numeric_limits<Timestamp>::min();
  Timestamp end = std::numeric_limits<Timestamp>::max();

  bool contains(Timestamp t) const { return t >= start && t <= end; }
};

struct IngestReport {
  std::uint64_t lines = 0;
  std::uint64_t events = 0;
  std::uint64_t retweets = 0;
  std::uint64_t originals = 0;
  std::uint64_t self_retweets = 0;
  std::uint64_t malformed = 0;
  std::uint64_t out_of_window = 0;
  std::uint64_t duplicates = 0;
  std::vector<std::string> warnings;

  // lines == events + malformed + out_of_window + duplicates
  bool balanced() const {
    return lines == events + malformed + out_of_window + duplicates;
  }
};

struct IngestResult {
  std::vector<TweetEvent> events;
  IngestReport report;
};

// Parses one JSONL record. Returns nullopt for anything that violates the
// event schema (including a retweet without a non-empty rt_author_id).
std::optional<TweetEvent> parse_event_line(std::string_view line);

// Time-sorted, deduplicated by tweet_id, restricted to the window. Lines are
// numbered globally across `lines`, so the result does not depend on how the
// input was chunked or on `threads`.
IngestResult parse_events(std::span<const std::string> lines,
                          const ObservationWindow& window, unsigned threads = 1);
IngestResult parse_events(std::istream& in, const ObservationWindow& window,
                          unsigned threads = 1);

// Writes events in the same JSONL schema (ts as epoch seconds).
void write_events(std::ostream& out, std::span<const TweetEvent> events);
std::string to_json_line(const TweetEvent& e);

// Binary event snapshot used between pipeline stages: "ATNE" magic, u32
// version, u64 count, then per event a flag byte, i64 timestamp and
// length-prefixed strings. Little-endian.
void write_event_snapshot(std::ostream& out, std::span<const TweetEvent> events);
std::vector<TweetEvent> read_event_snapshot(std::istream& in);

inline constexpr std::uint32_t kEventSnapshotVersion = 1;

// `user_id,category` CSV with header; unknown labels throw ParseError.
std::unordered_map<UserId, Category> load_categories(std::istream& in);

// Splits on non-alphanumerics after ASCII lowercasing. Bytes >= 0x80 are
// kept inside tokens so UTF-8 words survive.
std::vector<std::string> tokenize_location(std::string_view text);

class Gazetteer {
 public:
  struct Entry {
    std::vector<std::string> tokens;
    std::string country;
    int priority = 0;
  };

  Gazetteer() = default;

  // Validates uniqueness and that every pattern outranks its token prefixes.
  static Gazetteer from_entries(std::vector<Entry> entries);

  // TSV: pattern<TAB>country<TAB>priority. '#' comments and blank lines skipped.
  static Gazetteer load(std::istream& in);

  // Highest-priority matching pattern; ties go to the longer pattern, then to
  // the earlier entry.
  std::optional<std::string> resolve(std::string_view raw_location) const;

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> by_first_token_;
};

inline std::optional<std::string> resolve_country(std::string_view raw_location,
                                                  const Gazetteer& gazetteer) {
  return gazetteer.resolve(raw_location);
}

// Per author: the most frequent resolved country over their located events.
// Ties go to the country seen first in event order. Authors with no resolved
// location map to nullopt.
std::map<UserId, std::optional<std::string>> assign_user_countries(
    std::span<const TweetEvent> events, const Gazetteer& gazetteer);

// Per author: resolved-country counts over their events.
std::map<UserId, std::map<std::string, std::uint64_t>> located_tweet_counts(
    std::span<const TweetEvent> events, const Gazetteer& gazetteer);

}  // namespace attnet

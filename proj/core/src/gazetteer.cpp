#include "attnet/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <set>

#include "attnet/csv.hpp"

namespace attnet {

std::vector<std::string> tokenize_location(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                      (c >= 'A' && c <= 'Z') || c >= 0x80;
    if (word) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Gazetteer Gazetteer::from_entries(std::vector<Entry> entries) {
  Gazetteer g;
  std::map<std::vector<std::string>, std::size_t> index;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.tokens.empty()) throw ParseError("gazetteer pattern has no tokens");
    if (e.country.empty()) throw ParseError("gazetteer pattern has no country");
    if (!index.emplace(e.tokens, i).second) {
      std::string joined;
      for (const auto& t : e.tokens) joined += (joined.empty() ? "" : " ") + t;
      throw ParseError("duplicate gazetteer pattern '" + joined + "'");
    }
  }
  for (const auto& e : entries) {
    std::vector<std::string> prefix;
    for (std::size_t len = 1; len < e.tokens.size(); ++len) {
      prefix.assign(e.tokens.begin(), e.tokens.begin() + static_cast<std::ptrdiff_t>(len));
      auto it = index.find(prefix);
      if (it != index.end() && entries[it->second].priority >= e.priority) {
        std::string joined;
        for (const auto& t : e.tokens) joined += (joined.empty() ? "" : " ") + t;
        throw ParseError("gazetteer pattern '" + joined +
                         "' must have higher priority than its prefix");
      }
    }
  }
  g.entries_ = std::move(entries);
  for (std::uint32_t i = 0; i < g.entries_.size(); ++i) {
    g.by_first_token_[g.entries_[i].tokens.front()].push_back(i);
  }
  return g;
}

Gazetteer Gazetteer::load(std::istream& in) {
  std::vector<Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto fields = csv::split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError("gazetteer line " + std::to_string(line_no) +
                       ": expected pattern<TAB>country<TAB>priority");
    }
    Entry e;
    e.tokens = tokenize_location(fields[0]);
    e.country = fields[1];
    const auto& p = fields[2];
    auto res = std::from_chars(p.data(), p.data() + p.size(), e.priority);
    if (res.ec != std::errc{} || res.ptr != p.data() + p.size()) {
      throw ParseError("gazetteer line " + std::to_string(line_no) + ": bad priority '" +
                       p + "'");
    }
    entries.push_back(std::move(e));
  }
  return from_entries(std::move(entries));
}

std::optional<std::string> Gazetteer::resolve(std::string_view raw_location) const {
  if (raw_location.empty() || entries_.empty()) return std::nullopt;
  const auto tokens = tokenize_location(raw_location);
  const Entry* best = nullptr;
  std::uint32_t best_index = 0;
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    auto it = by_first_token_.find(tokens[pos]);
    if (it == by_first_token_.end()) continue;
    for (std::uint32_t idx : it->second) {
      const Entry& e = entries_[idx];
      if (pos + e.tokens.size() > tokens.size()) continue;
      bool match = true;
      for (std::size_t k = 1; k < e.tokens.size() && match; ++k) {
        match = tokens[pos + k] == e.tokens[k];
      }
      if (!match) continue;
      const bool better =
          best == nullptr || e.priority > best->priority ||
          (e.priority == best->priority &&
           (e.tokens.size() > best->tokens.size() ||
            (e.tokens.size() == best->tokens.size() && idx < best_index)));
      if (better) {
        best = &e;
        best_index = idx;
      }
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->country;
}

std::map<UserId, std::map<std::string, std::uint64_t>> located_tweet_counts(
    std::span<const TweetEvent> events, const Gazetteer& gazetteer) {
  std::map<UserId, std::map<std::string, std::uint64_t>> counts;
  std::unordered_map<std::string, std::optional<std::string>> cache;
  for (const auto& e : events) {
    auto& per_user = counts[e.author_id];
    if (!e.raw_location) continue;
    auto [it, fresh] = cache.try_emplace(*e.raw_location);
    if (fresh) it->second = gazetteer.resolve(*e.raw_location);
    if (it->second) ++per_user[*it->second];
  }
  return counts;
}

std::map<UserId, std::optional<std::string>> assign_user_countries(
    std::span<const TweetEvent> events, const Gazetteer& gazetteer) {
  struct Tally {
    // (country, count) in first-seen order.
    std::vector<std::pair<std::string, std::uint64_t>> seen;
  };
  std::map<UserId, Tally> tallies;
  std::unordered_map<std::string, std::optional<std::string>> cache;
  for (const auto& e : events) {
    auto& tally = tallies[e.author_id];
    if (!e.raw_location) continue;
    auto [it, fresh] = cache.try_emplace(*e.raw_location);
    if (fresh) it->second = gazetteer.resolve(*e.raw_location);
    if (!it->second) continue;
    auto slot = std::find_if(tally.seen.begin(), tally.seen.end(),
                             [&](const auto& p) { return p.first == *it->second; });
    if (slot == tally.seen.end()) {
      tally.seen.emplace_back(*it->second, 1);
    } else {
      ++slot->second;
    }
  }
  std::map<UserId, std::optional<std::string>> result;
  for (auto& [user, tally] : tallies) {
    std::optional<std::string> country;
    std::uint64_t best = 0;
    for (const auto& [c, n] : tally.seen) {
      if (n > best) {
        best = n;
        country = c;
      }
    }
    result.emplace(user, std::move(country));
  }
  return result;
}

}  // namespace attnet

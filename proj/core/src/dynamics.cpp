#include "attnet/dynamics.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "attnet/csv.hpp"
#include "parallel.hpp"

namespace attnet {

WindowSeries window_series(const TimeWindow& period, Timestamp width, Timestamp step) {
  if (width <= 0 || step <= 0) throw DomainError("window width and step must be positive");
  if (step > width) throw DomainError("window step must not exceed the width");
  if (period.end <= period.start) throw DomainError("observation period is empty");
  WindowSeries out;
  if (width > period.length()) {
    out.windows.push_back(period);
    out.warnings.push_back("window width exceeds the observation period; using one clipped window");
    return out;
  }
  for (Timestamp s = period.start; s < period.end; s += step) {
    out.windows.push_back({s, std::min(period.end, s + width)});
  }
  return out;
}

std::uint64_t MixingMatrix::row_sum(std::size_t i) const {
  std::uint64_t s = 0;
  for (auto v : w[i]) s += v;
  return s;
}

namespace {

std::span<const TweetEvent> slice(std::span<const TweetEvent> events, const TimeWindow& window) {
  auto lo = std::lower_bound(events.begin(), events.end(), window.start,
                             [](const TweetEvent& e, Timestamp t) { return e.timestamp < t; });
  auto hi = std::lower_bound(lo, events.end(), window.end,
                             [](const TweetEvent& e, Timestamp t) { return e.timestamp < t; });
  return {lo, hi};
}

std::size_t lookup(const UserSuperMap& map, const UserId& id, bool& unmapped) {
  auto it = map.find(id);
  unmapped = it == map.end();
  return index_of(unmapped ? SuperCommunity::kOther : it->second);
}

}  // namespace

MixingMatrix mixing_matrix(std::span<const TweetEvent> events, const TimeWindow& window,
                           const UserSuperMap& map) {
  MixingMatrix m;
  m.window = window;
  std::array<std::unordered_set<std::string_view>, kNumSuperCommunities> active;
  std::unordered_set<std::string_view> unmapped;
  for (const auto& e : slice(events, window)) {
    if (!e.is_retweet() || e.is_self_retweet()) continue;
    bool miss_src = false, miss_dst = false;
    const std::size_t i = lookup(map, *e.retweeted_author_id, miss_src);
    const std::size_t j = lookup(map, e.author_id, miss_dst);
    ++m.w[i][j];
    ++m.total;
    active[i].insert(*e.retweeted_author_id);
    active[j].insert(e.author_id);
    if (miss_src) unmapped.insert(*e.retweeted_author_id);
    if (miss_dst) unmapped.insert(e.author_id);
  }
  for (std::size_t s = 0; s < kNumSuperCommunities; ++s) m.n[s] = active[s].size();
  m.unmapped_users = unmapped.size();
  return m;
}

ActivityCounts window_activity(std::span<const TweetEvent> events, const TimeWindow& window,
                               const UserSuperMap& map) {
  ActivityCounts a;
  for (const auto& e : slice(events, window)) {
    bool miss = false;
    const std::size_t s = lookup(map, e.author_id, miss);
    ++a.posts[s];
    if (!e.is_retweet()) ++a.originals[s];
  }
  return a;
}

std::array<AttentionRow, kNumSuperCommunities> attention_metrics(const MixingMatrix& m,
                                                                 const ActivityCounts& activity,
                                                                 ActivityMode mode) {
  std::array<AttentionRow, kNumSuperCommunities> rows;
  for (std::size_t i = 0; i < kNumSuperCommunities; ++i) {
    AttentionRow& r = rows[i];
    const std::uint64_t row = m.row_sum(i);
    const std::uint64_t internal = m.w[i][i];
    const std::uint64_t external = row - internal;
    if (m.n[i] > 0) {
      const double n = static_cast<double>(m.n[i]);
      r.average_attention = static_cast<double>(row) / n;
      const auto tweets = mode == ActivityMode::kOriginals ? activity.originals[i] : activity.posts[i];
      r.activity = static_cast<double>(tweets) / n;
    }
    if (row > 0) {
      r.a_ext = static_cast<double>(external) / static_cast<double>(row);
      r.a_int = static_cast<double>(internal) / static_cast<double>(row);
    }
    if (m.total > 0) {
      r.a_ext_global = static_cast<double>(external) / static_cast<double>(m.total);
      r.a_int_global = static_cast<double>(internal) / static_cast<double>(m.total);
    }
  }
  return rows;
}

std::vector<WindowDynamics> dynamics_series(std::span<const TweetEvent> events,
                                            std::span<const TimeWindow> windows,
                                            const UserSuperMap& map, ActivityMode mode,
                                            unsigned threads) {
  std::vector<WindowDynamics> out(windows.size());
  detail::parallel_for(windows.size(), threads, [&](std::size_t k) {
    out[k].mixing = mixing_matrix(events, windows[k], map);
    out[k].activity = window_activity(events, windows[k], map);
    out[k].rows = attention_metrics(out[k].mixing, out[k].activity, mode);
  });
  return out;
}

namespace {

std::string opt(const std::optional<double>& v) {
  return v ? csv::format_double(*v) : std::string();
}

}  // namespace

void write_dynamics_csv(std::ostream& out, std::span<const WindowDynamics> series) {
  out << "window_start,super_community,N,A_u,a_ext,a_int,activity\n";
  for (const auto& wd : series) {
    for (auto s : kAllSuperCommunities) {
      const auto& r = wd.rows[index_of(s)];
      out << format_timestamp(wd.mixing.window.start) << ',' << super_community_name(s) << ','
          << wd.mixing.n[index_of(s)] << ',' << opt(r.average_attention) << ',' << opt(r.a_ext)
          << ',' << opt(r.a_int) << ',' << opt(r.activity) << '\n';
    }
  }
}

void write_mixing_json(std::ostream& out, std::span<const WindowDynamics> series) {
  using json = nlohmann::json;
  json doc = json::array();
  std::vector<std::string> names;
  for (auto s : kAllSuperCommunities) names.emplace_back(super_community_name(s));
  for (const auto& wd : series) {
    json w = json::array();
    for (const auto& row : wd.mixing.w) w.push_back(json(std::vector<std::uint64_t>(row.begin(), row.end())));
    json global = json::object();
    for (auto s : kAllSuperCommunities) {
      const auto& r = wd.rows[index_of(s)];
      global[std::string(super_community_name(s))] = {
          {"a_ext", r.a_ext_global ? json(*r.a_ext_global) : json(nullptr)},
          {"a_int", r.a_int_global ? json(*r.a_int_global) : json(nullptr)}};
    }
    doc.push_back({{"window_start", format_timestamp(wd.mixing.window.start)},
                   {"window_end", format_timestamp(wd.mixing.window.end)},
                   {"super_communities", names},
                   {"w", w},
                   {"N", std::vector<std::uint64_t>(wd.mixing.n.begin(), wd.mixing.n.end())},
                   {"W", wd.mixing.total},
                   {"unmapped_users", wd.mixing.unmapped_users},
                   {"global_attention", global}});
  }
  out << doc.dump(2) << '\n';
}

}  // namespace attnet

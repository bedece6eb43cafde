#include "attnet/attention.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "attnet/csv.hpp"
#include "attnet/rng.hpp"
#include "parallel.hpp"

namespace attnet {

std::uint64_t h_index(std::span<const std::uint64_t> counts) {
  // bucket[c] = number of tweets with min(count, n) == c
  const std::size_t n = counts.size();
  std::vector<std::uint64_t> bucket(n + 1, 0);
  for (auto c : counts) ++bucket[std::min<std::uint64_t>(c, n)];
  std::uint64_t at_least = 0;
  for (std::size_t h = n; h > 0; --h) {
    at_least += bucket[h];
    if (at_least >= h) return h;
  }
  return 0;
}

AttentionTally tally_attention(std::span<const TweetEvent> events, const UserSuperMap& map,
                               const std::optional<TimeWindow>& window,
                               const std::unordered_set<UserId>* authors) {
  if (window) {
    auto lo = std::lower_bound(events.begin(), events.end(), window->start,
                               [](const TweetEvent& e, Timestamp t) { return e.timestamp < t; });
    auto hi = std::lower_bound(lo, events.end(), window->end,
                               [](const TweetEvent& e, Timestamp t) { return e.timestamp < t; });
    events = {lo, hi};
  }
  std::unordered_map<std::string_view, std::unordered_map<std::string_view, std::uint64_t>> per_tweet;
  AttentionTally tally;
  for (const auto& e : events) {
    if (!e.is_retweet() || e.is_self_retweet()) continue;
    const UserId& author = *e.retweeted_author_id;
    if (authors != nullptr && !authors->contains(author)) continue;
    std::string_view tweet;
    if (e.retweeted_tweet_id) {
      tweet = *e.retweeted_tweet_id;
    } else {
      ++tally.unattributed_retweets;
    }
    ++per_tweet[author][tweet];
    ++tally.total_retweets;
  }

  tally.users.reserve(per_tweet.size());
  std::vector<std::uint64_t> counts;
  for (const auto& [author, tweets] : per_tweet) {
    UserAttention u;
    u.user = std::string(author);
    if (auto it = map.find(u.user); it != map.end()) u.super_community = it->second;
    counts.clear();
    for (const auto& [id, c] : tweets) {
      counts.push_back(c);
      u.retweets += c;
      u.max_tweet_retweets = std::max(u.max_tweet_retweets, c);
    }
    u.retweeted_tweets = counts.size();
    u.h_index = h_index(counts);
    tally.users.push_back(std::move(u));
  }
  std::sort(tally.users.begin(), tally.users.end(),
            [](const UserAttention& a, const UserAttention& b) { return a.user < b.user; });
  return tally;
}

Cohort select_top_users(const AttentionTally& tally, std::size_t k) {
  Cohort cohort;
  for (auto s : kAllSuperCommunities) {
    std::vector<const UserAttention*> group;
    for (const auto& u : tally.users) {
      if (u.super_community == s) group.push_back(&u);
    }
    std::sort(group.begin(), group.end(), [](const UserAttention* a, const UserAttention* b) {
      if (a->retweets != b->retweets) return a->retweets > b->retweets;
      if (a->h_index != b->h_index) return a->h_index > b->h_index;
      return a->user < b->user;
    });
    if (group.size() < k) {
      cohort.warnings.push_back(std::string(super_community_name(s)) + " has only " +
                                std::to_string(group.size()) + " retweeted users (< " +
                                std::to_string(k) + "); taking all");
    }
    const std::size_t take = std::min(k, group.size());
    for (std::size_t i = 0; i < take; ++i) {
      cohort.members.push_back(*group[i]);
      cohort.cohort_retweets += group[i]->retweets;
    }
  }
  if (tally.total_retweets > 0) {
    cohort.retweet_share =
        static_cast<double>(cohort.cohort_retweets) / static_cast<double>(tally.total_retweets);
  }
  return cohort;
}

std::vector<std::uint32_t> competition_ranks(std::span<const std::uint64_t> values) {
  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return values[a] > values[b]; });
  std::vector<std::uint32_t> ranks(values.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (pos > 0 && values[order[pos]] == values[order[pos - 1]]) {
      ranks[order[pos]] = ranks[order[pos - 1]];
    } else {
      ranks[order[pos]] = static_cast<std::uint32_t>(pos + 1);
    }
  }
  return ranks;
}

std::vector<std::optional<std::uint32_t>> competition_ranks(
    std::span<const std::optional<std::uint64_t>> values) {
  std::vector<std::uint64_t> present;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i]) {
      present.push_back(*values[i]);
      where.push_back(i);
    }
  }
  const auto ranks = competition_ranks(present);
  std::vector<std::optional<std::uint32_t>> out(values.size());
  for (std::size_t k = 0; k < where.size(); ++k) out[where[k]] = ranks[k];
  return out;
}

std::vector<double> RankTable::group_ranks(SuperCommunity s, RankMetric metric) const {
  std::vector<double> out;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (users[i].super_community != s) continue;
    out.push_back(metric == RankMetric::kRetweets ? r_rt[i] : r_h[i]);
  }
  return out;
}

std::optional<double> RankTable::mean_rank(SuperCommunity s, RankMetric metric) const {
  const auto ranks = group_ranks(s, metric);
  if (ranks.empty()) return std::nullopt;
  return std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(ranks.size());
}

RankTable rank_cohort(std::span<const UserAttention> users) {
  RankTable t;
  t.users.assign(users.begin(), users.end());
  std::vector<std::uint64_t> rt, h;
  for (const auto& u : users) {
    rt.push_back(u.retweets);
    h.push_back(u.h_index);
  }
  t.r_rt = competition_ranks(rt);
  t.r_h = competition_ranks(h);
  return t;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

BootstrapInterval bootstrap_mean_rank(std::span<const double> ranks, const BootstrapConfig& cfg,
                                      std::uint64_t stream) {
  if (ranks.empty()) throw DomainError("bootstrap needs a non-empty group");
  if (cfg.resamples == 0) throw DomainError("bootstrap needs at least one resample");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");

  BootstrapInterval out;
  out.mean = std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(ranks.size());
  if (ranks.size() == 1) {
    out.low = out.high = out.mean;
    out.degenerate = true;
    return out;
  }
  Rng rng(cfg.seed, stream);
  std::vector<double> means(cfg.resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) s += ranks[rng.below(ranks.size())];
    m = s / static_cast<double>(ranks.size());
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - cfg.level) / 2.0;
  out.low = quantile_sorted(means, tail);
  out.high = quantile_sorted(means, 1.0 - tail);
  return out;
}

GroupRanks group_statistics(const RankTable& table, SuperCommunity s, const BootstrapConfig& cfg,
                            std::uint64_t stream) {
  GroupRanks g;
  const auto rt = table.group_ranks(s, RankMetric::kRetweets);
  g.users = rt.size();
  if (rt.empty()) return g;
  const auto h = table.group_ranks(s, RankMetric::kHIndex);
  g.r_rt = bootstrap_mean_rank(rt, cfg, 2 * stream);
  g.r_h = bootstrap_mean_rank(h, cfg, 2 * stream + 1);
  return g;
}

std::vector<WindowRanks> rolling_attention(std::span<const TweetEvent> events, const Cohort& cohort,
                                           std::span<const TimeWindow> windows,
                                           const BootstrapConfig& cfg, unsigned threads) {
  std::unordered_set<UserId> members;
  UserSuperMap map;
  for (const auto& u : cohort.members) {
    members.insert(u.user);
    map.emplace(u.user, u.super_community);
  }
  std::vector<WindowRanks> out(windows.size());
  detail::parallel_for(windows.size(), threads, [&](std::size_t k) {
    const AttentionTally tally = tally_attention(events, map, windows[k], &members);
    std::unordered_map<std::string_view, const UserAttention*> found;
    for (const auto& u : tally.users) found.emplace(u.user, &u);
    std::vector<UserAttention> in_window;
    in_window.reserve(cohort.members.size());
    for (const auto& m : cohort.members) {
      UserAttention u{m.user, m.super_community, 0, 0, 0, 0};
      if (auto it = found.find(m.user); it != found.end()) {
        u.retweets = it->second->retweets;
        u.h_index = it->second->h_index;
        u.retweeted_tweets = it->second->retweeted_tweets;
        u.max_tweet_retweets = it->second->max_tweet_retweets;
      }
      in_window.push_back(std::move(u));
    }
    out[k].window = windows[k];
    out[k].table = rank_cohort(in_window);
    for (auto s : kAllSuperCommunities) {
      out[k].groups[index_of(s)] =
          group_statistics(out[k].table, s, cfg, k * kNumSuperCommunities + index_of(s));
    }
  });
  return out;
}

void write_cohort_csv(std::ostream& out, const RankTable& table) {
  out << "user_id,super_community,retweets,h_index,r_rt,r_h\n";
  for (std::size_t i = 0; i < table.users.size(); ++i) {
    const auto& u = table.users[i];
    out << csv::escape(u.user) << ',' << super_community_name(u.super_community) << ','
        << u.retweets << ',' << u.h_index << ',' << table.r_rt[i] << ',' << table.r_h[i] << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, std::span<const WindowRanks> series) {
  out << "window_start,super_community,mean_r_rt,ci_lo,ci_hi,mean_r_h,ci_lo,ci_hi\n";
  auto cells = [](const std::optional<BootstrapInterval>& b) {
    if (!b) return std::string(",,");
    return csv::format_double(b->mean) + ',' + csv::format_double(b->low) + ',' +
           csv::format_double(b->high);
  };
  for (const auto& w : series) {
    for (auto s : kAllSuperCommunities) {
      const auto& g = w.groups[index_of(s)];
      out << format_timestamp(w.window.start) << ',' << super_community_name(s) << ','
          << cells(g.r_rt) << ',' << cells(g.r_h) << '\n';
    }
  }
}

}  // namespace attnet

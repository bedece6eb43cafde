#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "attnet/attention.hpp"
#include "attnet/rng.hpp"

namespace attnet {
namespace {

// Largest h in [0, n] with at least h counts >= h, by trying every h.
std::uint64_t h_oracle(const std::vector<std::uint64_t>& c) {
  std::uint64_t best = 0;
  for (std::uint64_t h = 0; h <= c.size(); ++h) {
    std::uint64_t at_least = 0;
    for (auto x : c) at_least += x >= h;
    if (at_least >= h) best = h;
  }
  return best;
}

TEST(HIndex, Examples) {
  EXPECT_EQ(h_index({}), 0u);
  std::vector<std::uint64_t> one{1};
  EXPECT_EQ(h_index(one), 1u);
  std::vector<std::uint64_t> v{9, 7, 6, 2, 1};
  EXPECT_EQ(h_index(v), 3u);
  EXPECT_EQ(h_oracle(v), 3u);
  std::vector<std::uint64_t> zeros{0, 0, 0};
  EXPECT_EQ(h_index(zeros), 0u);
  std::vector<std::uint64_t> big{1000000, 1000000};
  EXPECT_EQ(h_index(big), 2u);
}

TEST(HIndex, RandomOracleBoundsAndMonotone) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::uint64_t> c(rng.below(60));
    const std::uint64_t cap = rng.bernoulli(0.5) ? 10 : 1000;
    for (auto& x : c) x = rng.below(cap);
    const auto h = h_index(c);
    EXPECT_EQ(h, h_oracle(c));
    const std::uint64_t mx = c.empty() ? 0 : *std::max_element(c.begin(), c.end());
    EXPECT_LE(h, std::min<std::uint64_t>(c.size(), mx));
    if (!c.empty()) {
      c[rng.below(c.size())] += 1;
      EXPECT_GE(h_index(c), h);
    }
  }
}

TweetEvent rt(const std::string& retweeter, const std::string& author, Timestamp ts,
              std::optional<std::string> tweet) {
  static int counter = 0;
  TweetEvent e;
  e.tweet_id = "r" + std::to_string(counter++);
  e.author_id = retweeter;
  e.timestamp = ts;
  e.kind = EventKind::kRetweet;
  e.retweeted_author_id = author;
  e.retweeted_tweet_id = std::move(tweet);
  return e;
}

TEST(Tally, CountsAndHIndex) {
  UserSuperMap map{{"a", SuperCommunity::kPolitical}};
  std::vector<TweetEvent> ev;
  // a: tweet x retweeted 3x, y 2x, z 1x -> h = 2; plus a self-retweet.
  for (int i = 0; i < 3; ++i) ev.push_back(rt("f" + std::to_string(i), "a", i, "x"));
  for (int i = 0; i < 2; ++i) ev.push_back(rt("g" + std::to_string(i), "a", 10 + i, "y"));
  ev.push_back(rt("h", "a", 20, "z"));
  ev.push_back(rt("a", "a", 21, "z"));
  // b: two retweets without a tweet id pool into one pseudo-tweet.
  ev.push_back(rt("f0", "b", 30, std::nullopt));
  ev.push_back(rt("f1", "b", 31, std::nullopt));

  auto t = tally_attention(ev, map);
  ASSERT_EQ(t.users.size(), 2u);
  EXPECT_EQ(t.users[0].user, "a");
  EXPECT_EQ(t.users[0].retweets, 6u);
  EXPECT_EQ(t.users[0].h_index, 2u);
  EXPECT_EQ(t.users[0].retweeted_tweets, 3u);
  EXPECT_EQ(t.users[0].max_tweet_retweets, 3u);
  EXPECT_EQ(t.users[0].super_community, SuperCommunity::kPolitical);
  EXPECT_EQ(t.users[1].user, "b");
  EXPECT_EQ(t.users[1].h_index, 1u);
  EXPECT_EQ(t.users[1].super_community, SuperCommunity::kOther);
  EXPECT_EQ(t.total_retweets, 8u);
  EXPECT_EQ(t.unattributed_retweets, 2u);

  auto windowed = tally_attention(ev, map, TimeWindow{10, 30});
  ASSERT_EQ(windowed.users.size(), 1u);
  EXPECT_EQ(windowed.users[0].retweets, 3u);
  EXPECT_EQ(windowed.users[0].h_index, 1u);
}

UserAttention user(const std::string& id, SuperCommunity s, std::uint64_t rts, std::uint64_t h) {
  UserAttention u;
  u.user = id;
  u.super_community = s;
  u.retweets = rts;
  u.h_index = h;
  return u;
}

TEST(SelectTopUsers, PerGroupWithTies) {
  AttentionTally t;
  using S = SuperCommunity;
  t.users = {user("a", S::kPolitical, 10, 1), user("b", S::kPolitical, 10, 3),
             user("c", S::kPolitical, 2, 1),  user("d", S::kNationalElite, 5, 2),
             user("e", S::kNationalElite, 7, 2), user("f", S::kNationalElite, 1, 1)};
  t.total_retweets = 35;
  auto c = select_top_users(t, 2);
  ASSERT_EQ(c.members.size(), 4u);
  std::vector<std::string> ids;
  for (const auto& m : c.members) ids.push_back(m.user);
  EXPECT_EQ(ids, (std::vector<std::string>{"e", "d", "b", "a"}));
  EXPECT_EQ(c.cohort_retweets, 32u);
  EXPECT_DOUBLE_EQ(c.retweet_share, 32.0 / 35.0);

  // Fewer than k in a group: everyone, with a warning.
  auto all = select_top_users(t, 5);
  EXPECT_EQ(all.members.size(), 6u);
  EXPECT_FALSE(all.warnings.empty());

  // Equal retweets and h-index fall back to user id.
  t.users = {user("z", S::kOther, 4, 2), user("y", S::kOther, 4, 2)};
  EXPECT_EQ(select_top_users(t, 1).members[0].user, "y");
}

// Competition rank by definition: 1 + number of strictly larger values.
std::vector<std::uint32_t> rank_oracle(const std::vector<std::uint64_t>& v) {
  std::vector<std::uint32_t> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    r[i] = 1;
    for (auto x : v) r[i] += x > v[i];
  }
  return r;
}

TEST(CompetitionRanks, Cases) {
  std::vector<std::uint64_t> v{10, 10, 5};
  EXPECT_EQ(competition_ranks(v), (std::vector<std::uint32_t>{1, 1, 3}));
  std::vector<std::uint64_t> d{3, 9, 1, 4};
  EXPECT_EQ(competition_ranks(d), (std::vector<std::uint32_t>{3, 1, 4, 2}));
  std::vector<std::optional<std::uint64_t>> o{5, std::nullopt, 7, 5};
  auto r = competition_ranks(o);
  EXPECT_EQ(r[0], 2u);
  EXPECT_EQ(r[1], std::nullopt);
  EXPECT_EQ(r[2], 1u);
  EXPECT_EQ(r[3], 2u);

  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint64_t> x(1 + rng.below(80));
    for (auto& e : x) e = rng.below(15);
    auto ranks = competition_ranks(x);
    EXPECT_EQ(ranks, rank_oracle(x));
    EXPECT_EQ(*std::min_element(ranks.begin(), ranks.end()), 1u);
  }
}

TEST(RankCohort, MeanRankMatchesGrouping) {
  Rng rng(3);
  std::vector<UserAttention> users;
  for (int i = 0; i < 300; ++i) {
    users.push_back(user("u" + std::to_string(i), kAllSuperCommunities[rng.below(4)],
                         rng.below(50), rng.below(8)));
  }
  auto table = rank_cohort(users);
  std::vector<std::uint64_t> rts, hs;
  for (const auto& u : table.users) {
    rts.push_back(u.retweets);
    hs.push_back(u.h_index);
  }
  EXPECT_EQ(table.r_rt, rank_oracle(rts));
  EXPECT_EQ(table.r_h, rank_oracle(hs));
  for (auto s : kAllSuperCommunities) {
    double sum_rt = 0, sum_h = 0;
    int n = 0;
    for (std::size_t i = 0; i < table.users.size(); ++i) {
      if (table.users[i].super_community != s) continue;
      sum_rt += table.r_rt[i];
      sum_h += table.r_h[i];
      ++n;
    }
    ASSERT_GT(n, 0);
    EXPECT_NEAR(*table.mean_rank(s, RankMetric::kRetweets), sum_rt / n, 1e-12);
    EXPECT_NEAR(*table.mean_rank(s, RankMetric::kHIndex), sum_h / n, 1e-12);
  }
  EXPECT_FALSE(rank_cohort({}).mean_rank(SuperCommunity::kOther, RankMetric::kRetweets));
}

TEST(Bootstrap, ConstantSingleResampleAndDeterminism) {
  std::vector<double> five{5, 5, 5};
  BootstrapConfig cfg;
  cfg.resamples = 200;
  auto ci = bootstrap_mean_rank(five, cfg);
  EXPECT_EQ(ci.mean, 5.0);
  EXPECT_EQ(ci.low, 5.0);
  EXPECT_EQ(ci.high, 5.0);

  std::vector<double> x{1, 2, 3, 4, 10};
  cfg.resamples = 1;
  auto one = bootstrap_mean_rank(x, cfg);
  EXPECT_EQ(one.low, one.high);
  // A resample mean is a multiple of 1/5 between min and max.
  EXPECT_GE(one.low, 1.0);
  EXPECT_LE(one.low, 10.0);
  EXPECT_NEAR(one.low * 5, std::round(one.low * 5), 1e-9);

  cfg.resamples = 500;
  auto a = bootstrap_mean_rank(x, cfg, 3);
  auto b = bootstrap_mean_rank(x, cfg, 3);
  EXPECT_EQ(a.low, b.low);
  EXPECT_EQ(a.high, b.high);
  EXPECT_LE(a.low, a.mean);
  EXPECT_GE(a.high, a.mean);

  std::vector<double> single{7};
  auto s = bootstrap_mean_rank(single, cfg);
  EXPECT_TRUE(s.degenerate);
  EXPECT_EQ(s.low, 7.0);
  EXPECT_EQ(s.high, 7.0);

  cfg.level = 1.5;
  EXPECT_THROW(bootstrap_mean_rank(x, cfg), DomainError);
  cfg.level = 0.95;
  EXPECT_THROW(bootstrap_mean_rank({}, cfg), DomainError);
}

TEST(Bootstrap, MatchesNormalApproximation) {
  Rng rng(4);
  std::vector<double> ranks(100);
  for (auto& r : ranks) r = 1 + static_cast<double>(rng.below(4000));
  const double mean = std::accumulate(ranks.begin(), ranks.end(), 0.0) / 100;
  double ss = 0;
  for (double r : ranks) ss += (r - mean) * (r - mean);
  const double se = std::sqrt(ss / 100) / std::sqrt(100.0);
  BootstrapConfig cfg;
  cfg.resamples = 10000;
  cfg.level = 0.95;
  auto ci = bootstrap_mean_rank(ranks, cfg);
  EXPECT_DOUBLE_EQ(ci.mean, mean);
  EXPECT_NEAR(ci.low, mean - 1.96 * se, 0.05 * (mean - 1.96 * se));
  EXPECT_NEAR(ci.high, mean + 1.96 * se, 0.05 * (mean + 1.96 * se));
  // Half-widths agree with 1.96 SE to within 10%.
  EXPECT_NEAR((ci.high - ci.low) / 2, 1.96 * se, 0.1 * 1.96 * se);
}

Cohort cohort_of(std::vector<UserAttention> members) {
  Cohort c;
  c.members = std::move(members);
  return c;
}

TEST(RollingAttention, QuietUserRanksLast) {
  using S = SuperCommunity;
  std::vector<TweetEvent> ev;
  for (int i = 0; i < 4; ++i) ev.push_back(rt("f" + std::to_string(i), "early", 5 + i, "t" + std::to_string(i % 2)));
  for (int i = 0; i < 3; ++i) ev.push_back(rt("g" + std::to_string(i), "late", 15 + i, "s"));
  ev.push_back(rt("g0", "late", 3, "s"));
  std::sort(ev.begin(), ev.end(), [](auto& a, auto& b) { return a.timestamp < b.timestamp; });
  auto cohort = cohort_of({user("early", S::kPolitical, 4, 2), user("late", S::kOther, 4, 1),
                           user("never", S::kOther, 0, 0)});
  std::vector<TimeWindow> windows{{0, 10}, {10, 20}};
  BootstrapConfig cfg;
  cfg.resamples = 50;
  auto series = rolling_attention(ev, cohort, windows, cfg);
  ASSERT_EQ(series.size(), 2u);
  const auto& w2 = series[1].table;
  ASSERT_EQ(w2.users.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    if (w2.users[i].user == "late") {
      EXPECT_EQ(w2.r_rt[i], 1u);
    } else {
      EXPECT_EQ(w2.users[i].retweets, 0u);
      EXPECT_EQ(w2.users[i].h_index, 0u);
      EXPECT_EQ(w2.r_rt[i], 2u);
      EXPECT_EQ(w2.r_h[i], 2u);
    }
  }
  const auto& w1 = series[0].table;
  for (std::size_t i = 0; i < 3; ++i) {
    if (w1.users[i].user == "early") {
      EXPECT_EQ(w1.users[i].retweets, 4u);
      EXPECT_EQ(w1.users[i].h_index, 2u);
    }
  }
  ASSERT_TRUE(series[0].groups[index_of(S::kPolitical)].r_rt);
  EXPECT_EQ(series[0].groups[index_of(S::kPolitical)].users, 1u);
  EXPECT_FALSE(series[0].groups[index_of(S::kNationalElite)].r_rt);
}

TEST(RollingAttention, OverlappingWindowsMatchRecount) {
  Rng rng(5);
  std::vector<TweetEvent> ev;
  UserSuperMap map;
  for (int u = 0; u < 40; ++u) map["a" + std::to_string(u)] = kAllSuperCommunities[u % 4];
  const Timestamp week = kWeek;
  for (int i = 0; i < 20000; ++i) {
    const auto author = "a" + std::to_string(rng.below(40));
    ev.push_back(rt("f" + std::to_string(rng.below(500)), author,
                    static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(5 * week))),
                    author + "_" + std::to_string(rng.below(30))));
  }
  std::sort(ev.begin(), ev.end(), [](auto& a, auto& b) { return a.timestamp < b.timestamp; });
  auto full = tally_attention(ev, map);
  auto cohort = select_top_users(full, 5);
  std::vector<TimeWindow> windows{{0, 4 * week}, {week, 5 * week}};
  BootstrapConfig cfg;
  cfg.resamples = 20;
  auto series = rolling_attention(ev, cohort, windows, cfg);

  // Recount: shared three weeks plus each window's private week.
  std::map<std::string, std::map<std::string, std::uint64_t>> shared, head, tail;
  for (const auto& e : ev) {
    auto& bucket = e.timestamp < week ? head : e.timestamp >= 4 * week ? tail : shared;
    ++bucket[*e.retweeted_author_id][*e.retweeted_tweet_id];
  }
  auto metrics = [](std::map<std::string, std::uint64_t> a,
                    const std::map<std::string, std::uint64_t>& b) {
    for (const auto& [k, v] : b) a[k] += v;
    std::vector<std::uint64_t> c;
    std::uint64_t total = 0;
    for (const auto& [k, v] : a) {
      c.push_back(v);
      total += v;
    }
    return std::pair{total, h_index(c)};
  };
  std::map<std::string, std::uint64_t> full_h;
  for (const auto& u : full.users) full_h[u.user] = u.h_index;
  for (std::size_t w = 0; w < 2; ++w) {
    const auto& table = series[w].table;
    ASSERT_EQ(table.users.size(), cohort.members.size());
    for (const auto& u : table.users) {
      auto [total, h] = metrics(shared[u.user], w == 0 ? head[u.user] : tail[u.user]);
      EXPECT_EQ(u.retweets, total) << u.user;
      EXPECT_EQ(u.h_index, h) << u.user;
      EXPECT_LE(u.h_index, full_h[u.user]);
    }
  }
  auto threaded = rolling_attention(ev, cohort, windows, cfg, 4);
  EXPECT_EQ(threaded[1].table.r_h, series[1].table.r_h);
  EXPECT_EQ(threaded[1].groups[0].r_rt->low, series[1].groups[0].r_rt->low);
}

TEST(AttentionCsv, Headers) {
  auto table = rank_cohort(std::vector<UserAttention>{user("a", SuperCommunity::kOther, 3, 1)});
  std::ostringstream out;
  write_cohort_csv(out, table);
  EXPECT_EQ(out.str(), "user_id,super_community,retweets,h_index,r_rt,r_h\na,Other,3,1,1,1\n");
  std::ostringstream traj;
  write_trajectory_csv(traj, {});
  EXPECT_EQ(traj.str(), "window_start,super_community,mean_r_rt,ci_lo,ci_hi,mean_r_h,ci_lo,ci_hi\n");
}

}  // namespace
}  // namespace attnet

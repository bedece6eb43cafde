#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "attnet/dynamics.hpp"
#include "attnet/rng.hpp"

namespace attnet {
namespace {

constexpr auto kSci = SuperCommunity::kInternationalSciHealth;
constexpr auto kElite = SuperCommunity::kNationalElite;
constexpr auto kPol = SuperCommunity::kPolitical;
constexpr auto kOth = SuperCommunity::kOther;

TweetEvent rt(const std::string& retweeter, const std::string& author, Timestamp ts) {
  static int counter = 0;
  TweetEvent e;
  e.tweet_id = "r" + std::to_string(counter++);
  e.author_id = retweeter;
  e.timestamp = ts;
  e.kind = EventKind::kRetweet;
  e.retweeted_author_id = author;
  return e;
}

TweetEvent tweet(const std::string& author, Timestamp ts) {
  static int counter = 0;
  TweetEvent e;
  e.tweet_id = "t" + std::to_string(counter++);
  e.author_id = author;
  e.timestamp = ts;
  return e;
}

void sort_events(std::vector<TweetEvent>& ev) {
  std::stable_sort(ev.begin(), ev.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
}

TEST(WindowSeries, Examples) {
  const Timestamp d = kSecondsPerDay;
  auto weekly = window_series({0, 21 * d}, kWeek, kWeek);
  ASSERT_EQ(weekly.windows.size(), 3u);
  EXPECT_EQ(weekly.windows[2], (TimeWindow{14 * d, 21 * d}));

  auto rolling = window_series({0, 28 * d}, kMonth, kWeek);
  ASSERT_EQ(rolling.windows.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(rolling.windows[k].start, static_cast<Timestamp>(7 * k) * d);
    EXPECT_EQ(rolling.windows[k].end, 28 * d);
  }

  auto wide = window_series({0, 10 * d}, kMonth, kWeek);
  ASSERT_EQ(wide.windows.size(), 1u);
  EXPECT_EQ(wide.windows[0], (TimeWindow{0, 10 * d}));
  EXPECT_FALSE(wide.warnings.empty());

  EXPECT_THROW(window_series({0, 10}, 0, 1), DomainError);
  EXPECT_THROW(window_series({0, 10}, 2, 3), DomainError);
}

TEST(WindowSeries, CoverageSweep) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const Timestamp start = static_cast<Timestamp>(rng.below(1000000));
    const Timestamp len = 1 + static_cast<Timestamp>(rng.below(5000000));
    const Timestamp width = 1 + static_cast<Timestamp>(rng.below(1000000));
    const Timestamp step = 1 + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(width)));
    const TimeWindow period{start, start + len};
    auto s = window_series(period, width, step);
    // Sweep: windows sorted by start, each starting no later than the
    // furthest end reached so far, together reaching the period end.
    Timestamp reach = period.start;
    for (const auto& w : s.windows) {
      EXPECT_LE(w.start, reach);
      EXPECT_LT(w.start, w.end);
      EXPECT_GE(w.start, period.start);
      EXPECT_LE(w.end, period.end);
      reach = std::max(reach, w.end);
    }
    EXPECT_EQ(reach, period.end);

    auto weekly = window_series(period, width, width);
    for (std::size_t k = 1; k < weekly.windows.size(); ++k) {
      EXPECT_EQ(weekly.windows[k].start, weekly.windows[k - 1].end);
    }
  }
}

TEST(MixingMatrix, SingleEventAndEmpty) {
  UserSuperMap map{{"s", kSci}, {"p", kPol}};
  std::vector<TweetEvent> ev{rt("p", "s", 5)};
  auto m = mixing_matrix(ev, {0, 10}, map);
  EXPECT_EQ(m.w[index_of(kSci)][index_of(kPol)], 1u);
  EXPECT_EQ(m.total, 1u);
  EXPECT_EQ(m.n[index_of(kSci)], 1u);
  EXPECT_EQ(m.n[index_of(kPol)], 1u);
  EXPECT_EQ(m.n[index_of(kElite)], 0u);

  auto empty = mixing_matrix({}, {0, 10}, map);
  EXPECT_EQ(empty.total, 0u);
  for (auto v : empty.n) EXPECT_EQ(v, 0u);
  for (const auto& r : empty.w)
    for (auto v : r) EXPECT_EQ(v, 0u);
}

TEST(MixingMatrix, UnmappedAndSelfRetweets) {
  UserSuperMap map{{"s", kSci}};
  std::vector<TweetEvent> ev{rt("x", "s", 1), rt("s", "s", 2), rt("x", "y", 3)};
  auto m = mixing_matrix(ev, {0, 10}, map);
  EXPECT_EQ(m.w[index_of(kSci)][index_of(kOth)], 1u);
  EXPECT_EQ(m.w[index_of(kOth)][index_of(kOth)], 1u);
  EXPECT_EQ(m.total, 2u);
  EXPECT_EQ(m.unmapped_users, 2u);
  EXPECT_EQ(m.n[index_of(kOth)], 2u);
}

struct LabeledStream {
  std::vector<TweetEvent> events;
  UserSuperMap map;
};

LabeledStream labeled_stream(std::size_t retweets, std::uint64_t seed, Timestamp span) {
  Rng rng(seed);
  LabeledStream s;
  for (int u = 0; u < 400; ++u) {
    // A few users stay unmapped.
    if (u % 37 != 0) s.map["u" + std::to_string(u)] = kAllSuperCommunities[rng.below(4)];
  }
  for (std::size_t i = 0; i < retweets; ++i) {
    const auto ts = static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(span)));
    s.events.push_back(rt("u" + std::to_string(rng.below(400)), "u" + std::to_string(rng.below(400)), ts));
    if (rng.bernoulli(0.2)) s.events.push_back(tweet("u" + std::to_string(rng.below(400)), ts));
  }
  sort_events(s.events);
  return s;
}

SuperCommunity group_of(const UserSuperMap& map, const std::string& u) {
  auto it = map.find(u);
  return it == map.end() ? kOth : it->second;
}

TEST(MixingMatrix, MatchesTally) {
  auto s = labeled_stream(100000, 3, 1000000);
  const TimeWindow win{200000, 800000};
  auto m = mixing_matrix(s.events, win, s.map);
  std::array<SuperArray, 4> w{};
  std::array<std::set<std::string>, 4> active;
  std::uint64_t total = 0;
  for (const auto& e : s.events) {
    if (!e.is_retweet() || e.is_self_retweet() || !win.contains(e.timestamp)) continue;
    const auto a = group_of(s.map, *e.retweeted_author_id);
    const auto b = group_of(s.map, e.author_id);
    ++w[index_of(a)][index_of(b)];
    active[index_of(a)].insert(*e.retweeted_author_id);
    active[index_of(b)].insert(e.author_id);
    ++total;
  }
  EXPECT_EQ(m.w, w);
  EXPECT_EQ(m.total, total);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(m.n[i], active[i].size());
}

TEST(MixingMatrix, AdditiveOverSplits) {
  auto s = labeled_stream(20000, 4, 500000);
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const Timestamp a = static_cast<Timestamp>(rng.below(250000));
    const Timestamp b = a + 1 + static_cast<Timestamp>(rng.below(250000));
    const Timestamp cut = a + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(b - a + 1)));
    auto whole = mixing_matrix(s.events, {a, b}, s.map);
    auto left = mixing_matrix(s.events, {a, cut}, s.map);
    auto right = mixing_matrix(s.events, {cut, b}, s.map);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(whole.w[i][j], left.w[i][j] + right.w[i][j]);
      EXPECT_LE(std::max(left.n[i], right.n[i]), whole.n[i]);
      EXPECT_LE(whole.n[i], left.n[i] + right.n[i]);
    }
    EXPECT_EQ(whole.total, left.total + right.total);
  }
}

TEST(MixingMatrix, WeeklySeriesSumsToPeriodTotal) {
  const TimeWindow period{0, 10 * kWeek + 3 * kSecondsPerDay};
  auto s = labeled_stream(30000, 6, period.end);
  auto windows = window_series(period, kWeek, kWeek).windows;
  auto series = dynamics_series(s.events, windows, s.map);
  std::uint64_t sum = 0;
  for (const auto& wd : series) sum += wd.mixing.total;
  std::uint64_t expected = 0;
  for (const auto& e : s.events) expected += e.is_retweet() && !e.is_self_retweet();
  EXPECT_EQ(sum, expected);

  auto threaded = dynamics_series(s.events, windows, s.map, ActivityMode::kOriginals, 4);
  for (std::size_t k = 0; k < series.size(); ++k) {
    EXPECT_EQ(threaded[k].mixing.w, series[k].mixing.w);
    EXPECT_EQ(threaded[k].mixing.n, series[k].mixing.n);
  }
}

TEST(AttentionMetrics, WorkedExample) {
  // w = [[2,2],[0,4]] over (sci, elite), N = [2,4], replayed from events.
  UserSuperMap map{{"s1", kSci}, {"s2", kSci}, {"e1", kElite}, {"e2", kElite},
                   {"e3", kElite}, {"e4", kElite}};
  std::vector<TweetEvent> ev{rt("s2", "s1", 1), rt("s1", "s2", 2), rt("e1", "s1", 3),
                             rt("e2", "s1", 4), rt("e2", "e1", 5), rt("e3", "e4", 6),
                             rt("e4", "e3", 7), rt("e1", "e2", 8)};
  auto m = mixing_matrix(ev, {0, 10}, map);
  EXPECT_EQ(m.w[0][0], 2u);
  EXPECT_EQ(m.w[0][1], 2u);
  EXPECT_EQ(m.w[1][0], 0u);
  EXPECT_EQ(m.w[1][1], 4u);
  EXPECT_EQ(m.n[0], 2u);
  EXPECT_EQ(m.n[1], 4u);

  auto rows = attention_metrics(m, {});
  EXPECT_EQ(rows[0].average_attention, 2.0);
  EXPECT_EQ(rows[1].average_attention, 1.0);
  EXPECT_EQ(rows[0].a_int, 0.5);
  EXPECT_EQ(rows[0].a_ext, 0.5);
  EXPECT_EQ(rows[1].a_int, 1.0);
  EXPECT_EQ(rows[1].a_ext, 0.0);
  EXPECT_EQ(rows[0].a_ext_global, 2.0 / 8.0);
  EXPECT_EQ(rows[1].a_int_global, 4.0 / 8.0);
  EXPECT_FALSE(rows[2].average_attention);
  EXPECT_FALSE(rows[2].a_ext);
}

TEST(AttentionMetrics, DiagonalAndZeroRow) {
  MixingMatrix m;
  m.w[0][0] = 5;
  m.w[2][2] = 3;
  m.w[3][2] = 0;
  m.n = {2, 1, 3, 0};
  m.total = 8;
  auto rows = attention_metrics(m, {});
  EXPECT_EQ(rows[0].a_ext, 0.0);
  EXPECT_EQ(rows[2].a_ext, 0.0);
  // Elite has users but a zero row: attention 0, shares undefined.
  EXPECT_EQ(rows[1].average_attention, 0.0);
  EXPECT_FALSE(rows[1].a_ext);
  EXPECT_FALSE(rows[1].a_int);
  EXPECT_FALSE(rows[3].average_attention);
}

TEST(AttentionMetrics, IdentitiesOnRandomMatrices) {
  Rng rng(7);
  for (int t = 0; t < 1000; ++t) {
    MixingMatrix m;
    for (auto& r : m.w)
      for (auto& v : r) v = rng.bernoulli(0.3) ? 0 : rng.below(1000000);
    for (std::size_t i = 0; i < 4; ++i) {
      m.total += m.row_sum(i);
      m.n[i] = 1 + rng.below(5000);
    }
    auto rows = attention_metrics(m, {});
    double global = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto rs = m.row_sum(i);
      ASSERT_TRUE(rows[i].average_attention);
      const double a = *rows[i].average_attention;
      EXPECT_EQ(a, static_cast<double>(rs) / static_cast<double>(m.n[i]));
      EXPECT_EQ(std::llround(a * static_cast<double>(m.n[i])), static_cast<long long>(rs));
      if (rs > 0) {
        EXPECT_NEAR(*rows[i].a_ext + *rows[i].a_int, 1.0, 1e-12);
      } else {
        EXPECT_FALSE(rows[i].a_ext);
      }
      if (m.total > 0) global += *rows[i].a_ext_global + *rows[i].a_int_global;
    }
    if (m.total > 0) EXPECT_NEAR(global, 1.0, 1e-12);
  }
}

TEST(Activity, OriginalsAndPosts) {
  UserSuperMap map{{"a", kPol}, {"b", kPol}, {"c", kPol}};
  std::vector<TweetEvent> ev{tweet("a", 1), tweet("a", 2), tweet("c", 3), rt("b", "a", 4)};
  sort_events(ev);
  auto series = dynamics_series(ev, std::vector<TimeWindow>{{0, 10}}, map);
  // c only tweeted, so it is not an active user of the window.
  EXPECT_EQ(series[0].mixing.n[index_of(kPol)], 2u);
  EXPECT_EQ(series[0].activity.originals[index_of(kPol)], 3u);
  EXPECT_EQ(series[0].activity.posts[index_of(kPol)], 4u);
  EXPECT_EQ(series[0].rows[index_of(kPol)].activity, 1.5);
  auto posts = dynamics_series(ev, std::vector<TimeWindow>{{0, 10}}, map, ActivityMode::kAllPosts);
  EXPECT_EQ(posts[0].rows[index_of(kPol)].activity, 2.0);
}

TEST(DynamicsCsv, Layout) {
  UserSuperMap map{{"s", kSci}, {"p", kPol}};
  std::vector<TweetEvent> ev{rt("p", "s", 5)};
  auto series = dynamics_series(ev, std::vector<TimeWindow>{{0, 10}}, map);
  std::ostringstream out;
  write_dynamics_csv(out, series);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "window_start,super_community,N,A_u,a_ext,a_int,activity");
  int rows = 0;
  for (std::string l; std::getline(in, l);) ++rows;
  EXPECT_EQ(rows, 4);
  std::ostringstream js;
  write_mixing_json(js, series);
  EXPECT_NE(js.str().find("\"w\""), std::string::npos);
}

}  // namespace
}  // namespace attnet

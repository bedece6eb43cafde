#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "attnet/dynamics.hpp"
#include "attnet/ingest.hpp"

namespace attnet {

// Largest h such that at least h of the counts are >= h.
std::uint64_t h_index(std::span<const std::uint64_t> retweets_per_tweet);

struct UserAttention {
  UserId user;
  SuperCommunity super_community = SuperCommunity::kOther;
  std::uint64_t retweets = 0;
  std::uint64_t h_index = 0;
  // Distinct original tweets with at least one retweet.
  std::uint64_t retweeted_tweets = 0;
  std::uint64_t max_tweet_retweets = 0;
};

struct AttentionTally {
  // Every retweeted author in scope, sorted by user id.
  std::vector<UserAttention> users;
  std::uint64_t total_retweets = 0;
  // Retweets without rt_id, pooled into one pseudo-tweet per author.
  std::uint64_t unattributed_retweets = 0;
};

// Retweets received per author from the (time-sorted) events, optionally
// restricted to a window and to a set of authors. Self-retweets are skipped.
AttentionTally tally_attention(std::span<const TweetEvent> events, const UserSuperMap& map,
                               const std::optional<TimeWindow>& window = std::nullopt,
                               const std::unordered_set<UserId>* authors = nullptr);

struct Cohort {
  // Grouped by super-community, each group in selection order.
  std::vector<UserAttention> members;
  std::uint64_t cohort_retweets = 0;
  double retweet_share = 0.0;
  std::vector<std::string> warnings;
};

// Top k per super-community by retweets, then h-index, then user id.
Cohort select_top_users(const AttentionTally& tally, std::size_t k);

// Competition ranking, highest value first: [10, 10, 5] -> [1, 1, 3].
std::vector<std::uint32_t> competition_ranks(std::span<const std::uint64_t> values);
// Same, leaving nullopt entries unranked.
std::vector<std::optional<std::uint32_t>> competition_ranks(
    std::span<const std::optional<std::uint64_t>> values);

enum class RankMetric { kRetweets, kHIndex };

struct RankTable {
  std::vector<UserAttention> users;
  std::vector<std::uint32_t> r_rt;
  std::vector<std::uint32_t> r_h;

  // Mean rank of a super-community's members; nullopt for empty groups.
  std::optional<double> mean_rank(SuperCommunity s, RankMetric metric) const;
  std::vector<double> group_ranks(SuperCommunity s, RankMetric metric) const;
};

RankTable rank_cohort(std::span<const UserAttention> users);

struct BootstrapConfig {
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct BootstrapInterval {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
  bool degenerate = false;  // singleton group
};

// Percentile bootstrap of the mean; `stream` selects an independent substream.
BootstrapInterval bootstrap_mean_rank(std::span<const double> ranks, const BootstrapConfig& cfg,
                                      std::uint64_t stream = 0);

struct GroupRanks {
  std::size_t users = 0;
  std::optional<BootstrapInterval> r_rt;
  std::optional<BootstrapInterval> r_h;
};

struct WindowRanks {
  TimeWindow window;
  RankTable table;
  std::array<GroupRanks, kNumSuperCommunities> groups;
};

GroupRanks group_statistics(const RankTable& table, SuperCommunity s, const BootstrapConfig& cfg,
                            std::uint64_t stream);

// Cohort metrics recomputed from in-window retweets only (window membership
// by retweet timestamp), ranked within the cohort.
std::vector<WindowRanks> rolling_attention(std::span<const TweetEvent> events, const Cohort& cohort,
                                           std::span<const TimeWindow> windows,
                                           const BootstrapConfig& cfg, unsigned threads = 1);

// user_id,super_community,retweets,h_index,r_rt,r_h
void write_cohort_csv(std::ostream& out, const RankTable& table);
// window_start,super_community,mean_r_rt,ci_lo,ci_hi,mean_r_h,ci_lo,ci_hi
void write_trajectory_csv(std::ostream& out, std::span<const WindowRanks> series);

}  // namespace attnet

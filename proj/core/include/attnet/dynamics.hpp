#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "attnet/ingest.hpp"
#include "attnet/types.hpp"

namespace attnet {

// Half-open [start, end).
struct TimeWindow {
  Timestamp start = 0;
  Timestamp end = 0;

  bool contains(Timestamp t) const { return t >= start && t < end; }
  Timestamp length() const { return end - start; }
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

inline constexpr Timestamp kWeek = 7 * kSecondsPerDay;
// Rolling "month" windows are exactly four weeks.
inline constexpr Timestamp kMonth = 28 * kSecondsPerDay;

struct WindowSeries {
  std::vector<TimeWindow> windows;
  std::vector<std::string> warnings;
};

// Windows [start + k*step, start + k*step + width) clipped to the period, for
// every k whose start lies inside the period.
WindowSeries window_series(const TimeWindow& period, Timestamp width, Timestamp step);

using UserSuperMap = std::unordered_map<UserId, SuperCommunity>;
using SuperArray = std::array<std::uint64_t, kNumSuperCommunities>;

struct MixingMatrix {
  TimeWindow window;
  // w[i][j]: retweets of super-community i's content by super-community j.
  std::array<SuperArray, kNumSuperCommunities> w{};
  // Users of each super-community retweeting or being retweeted in the window.
  SuperArray n{};
  std::uint64_t total = 0;
  // Distinct in-window users absent from the map (routed to Other).
  std::uint64_t unmapped_users = 0;

  std::uint64_t row_sum(std::size_t i) const;
};

// `events` must be sorted by timestamp. Self-retweets are not counted.
MixingMatrix mixing_matrix(std::span<const TweetEvent> events, const TimeWindow& window,
                           const UserSuperMap& map);

struct ActivityCounts {
  SuperArray originals{};
  // Originals plus retweets authored by members.
  SuperArray posts{};
};

ActivityCounts window_activity(std::span<const TweetEvent> events, const TimeWindow& window,
                               const UserSuperMap& map);

enum class ActivityMode { kOriginals, kAllPosts };

struct AttentionRow {
  // Row sum of w over N_i.
  std::optional<double> average_attention;
  // Normalized by the row sum, so a_ext + a_int = 1.
  std::optional<double> a_ext;
  std::optional<double> a_int;
  // Normalized by the window total W.
  std::optional<double> a_ext_global;
  std::optional<double> a_int_global;
  // Tweets per active user of the super-community.
  std::optional<double> activity;
};

std::array<AttentionRow, kNumSuperCommunities> attention_metrics(
    const MixingMatrix& m, const ActivityCounts& activity,
    ActivityMode mode = ActivityMode::kOriginals);

struct WindowDynamics {
  MixingMatrix mixing;
  ActivityCounts activity;
  std::array<AttentionRow, kNumSuperCommunities> rows;
};

std::vector<WindowDynamics> dynamics_series(std::span<const TweetEvent> events,
                                            std::span<const TimeWindow> windows,
                                            const UserSuperMap& map,
                                            ActivityMode mode = ActivityMode::kOriginals,
                                            unsigned threads = 1);

// Long format: window_start,super_community,N,A_u,a_ext,a_int,activity
void write_dynamics_csv(std::ostream& out, std::span<const WindowDynamics> series);
void write_mixing_json(std::ostream& out, std::span<const WindowDynamics> series);

}  // namespace attnet

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "attnet/community.hpp"
#include "attnet/graph.hpp"
#include "attnet/types.hpp"

namespace attnet {

struct CommunityProfile {
  std::string label;
  CommunityId community = 0;
  std::size_t size = 0;
  std::array<double, kNumCategories> category_share{};
  // Weighted out-degree of members over total graph weight.
  double retweet_share = 0.0;
  // Shannon entropy (natural log) of the members' country distribution;
  // nullopt when no member is located.
  std::optional<double> internationality;
  std::size_t located_users = 0;
  std::size_t distinct_countries = 0;
};

enum class EntropyMode { kUsers, kTweets };

// -sum p ln p over the non-zero counts.
double shannon_entropy(std::span<const std::uint64_t> counts);

struct ProfileSources {
  const std::unordered_map<UserId, Category>* categories = nullptr;
  const std::map<UserId, std::optional<std::string>>* user_countries = nullptr;
  // Per-user located tweet counts; required for EntropyMode::kTweets.
  const std::map<UserId, std::map<std::string, std::uint64_t>>* tweet_countries = nullptr;
  EntropyMode mode = EntropyMode::kUsers;
};

// One profile per labeled community, in rank order. Users missing from the
// category table count as Other; users without a country are left out of
// the entropy.
std::vector<CommunityProfile> profile_communities(const RankedCommunities& ranked,
                                                  const NodeRegistry& registry,
                                                  const RetweetGraph& graph,
                                                  const ProfileSources& sources);

enum class Feature : std::uint8_t {
  kScience,
  kHealthcare,
  kMedia,
  kGovernmentPolitics,
  kPublicServices,
  kPoliticalSupporter,
  kInternationality,
};
inline constexpr std::size_t kNumFeatures = 7;
using FeatureRow = std::array<double, kNumFeatures>;

std::string_view feature_name(Feature f);
std::optional<Feature> parse_feature(std::string_view name);

struct FeatureMatrix {
  std::vector<std::string> labels;
  std::vector<FeatureRow> raw;
  std::vector<FeatureRow> z;
  // Rows whose internationality was missing and replaced by the column mean.
  std::vector<bool> imputed;
  std::vector<std::string> warnings;

  std::size_t rows() const { return raw.size(); }
};

FeatureRow feature_row(const CommunityProfile& p);

// Per-column (x - mean) / std with the population std. Constant columns
// become zeros with a warning. Throws DomainError for fewer than 2 rows.
FeatureMatrix standardize(std::span<const CommunityProfile> profiles);
FeatureMatrix standardize_rows(std::vector<std::string> labels, std::vector<FeatureRow> raw,
                               std::vector<bool> imputed = {});

struct Merge {
  // Leaves are 0..n-1; the cluster formed by merge i is n + i.
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;
};

// Ward minimum-variance agglomeration on Euclidean distances via the
// Lance-Williams update. Merge heights are Ward distances, so two singletons
// merge at their Euclidean distance.
Dendrogram ward_cluster(std::span<const std::vector<double>> points);
Dendrogram ward_cluster(const FeatureMatrix& fm);

// Flat clusters per leaf after undoing the last k-1 merges, numbered by
// smallest member leaf.
std::vector<std::uint32_t> cut_dendrogram(const Dendrogram& d, std::size_t k);

struct KneeResult {
  std::size_t k = 0;
  bool clear_knee = true;
  // distance[k-1]: height of the merge that joins k+1 clusters into k.
  std::vector<double> distance;
  // second_difference[i] belongs to cluster count i + 2.
  std::vector<double> second_difference;
};

// Cluster count maximizing the discrete second difference of merge height
// versus cluster count. Ties go to the smallest k; a flat curve is flagged.
KneeResult knee_point(const Dendrogram& d);

struct Condition {
  enum class Op : std::uint8_t { kGreater, kAtMost };
  Feature feature;
  Op op = Op::kGreater;
  double threshold = 0.0;

  bool holds(const FeatureRow& z) const;
};
using Conjunction = std::vector<Condition>;

struct NamingRule {
  SuperCommunity name;
  // Matches when any conjunction holds.
  std::vector<Conjunction> any_of;

  bool matches(const FeatureRow& z) const;
};

struct SplitRule {
  bool enabled = true;
  // Communities with Z > 0 on any of these...
  std::vector<Feature> categories{Feature::kScience};
  // ...and, when set, Z > 0 on Internationality leave their cluster.
  bool require_internationality = true;
};

struct Rulebook {
  std::vector<NamingRule> rules;
  // Resolves clusters that match several names. Empty or strict: ambiguous
  // clusters are an error.
  std::vector<SuperCommunity> precedence;
  bool strict = false;
  // Name for clusters no rule matches; nullopt makes that an error.
  std::optional<SuperCommunity> fallback = SuperCommunity::kOther;
  SplitRule split;

  static Rulebook defaults();
  // JSON document; see README for the schema.
  static Rulebook load(std::istream& in);
};

struct NamedCluster {
  std::vector<std::size_t> members;  // FeatureMatrix row indices
  FeatureRow mean_z{};
  std::vector<SuperCommunity> matched;
  SuperCommunity name = SuperCommunity::kOther;
  bool from_split = false;
};

struct SuperCommunityAssignment {
  std::vector<NamedCluster> clusters;
  // Per FeatureMatrix row.
  std::vector<SuperCommunity> by_row;
  std::map<std::string, SuperCommunity> by_label;
  std::vector<std::string> warnings;
};

// Cuts at k, applies the split rule, then names clusters from the mean Z of
// their members. Throws DomainError on ambiguous or unnamed clusters when the
// rulebook does not resolve them.
SuperCommunityAssignment assign_super_communities(const FeatureMatrix& fm, const Dendrogram& d,
                                                  std::size_t k, const Rulebook& rulebook);

void write_profiles_csv(std::ostream& out, std::span<const CommunityProfile> profiles);
void write_features_csv(std::ostream& out, const FeatureMatrix& fm);
void write_dendrogram_json(std::ostream& out, const Dendrogram& d,
                           std::span<const std::string> labels, const KneeResult* knee);
void write_super_communities_csv(std::ostream& out, const FeatureMatrix& fm,
                                 const SuperCommunityAssignment& a);
std::map<std::string, SuperCommunity> read_super_communities_csv(std::istream& in);

}  // namespace attnet

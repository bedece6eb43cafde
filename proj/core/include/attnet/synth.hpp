#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "attnet/dynamics.hpp"
#include "attnet/graph.hpp"
#include "attnet/ingest.hpp"
#include "attnet/types.hpp"

namespace attnet {

struct BlockSpec {
  std::size_t size = 1;
  // Weights, normalized on use. An empty mix means every user is Other.
  std::vector<std::pair<Category, double>> category_mix;
  // Country names the gazetteer resolves. Empty: nobody is located.
  std::vector<std::pair<std::string, double>> country_mix;
  // Fraction of users that carry a location string.
  double location_rate = 1.0;
  // Ground-truth label used by the dynamics oracles.
  SuperCommunity super_community = SuperCommunity::kOther;
};

struct RateSegment {
  // Relative length of the segment within the period.
  double duration = 1.0;
  // rates[a][b]: relative rate at which block a's content is retweeted by a
  // member of block b.
  std::vector<std::vector<double>> rates;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  std::vector<BlockSpec> blocks;
  std::vector<RateSegment> segments;
  // Author popularity within a block follows rank^-exponent over a seeded
  // permutation of the members.
  double popularity_exponent = 1.0;
  // Which of an author's tweets gets retweeted: rank^-exponent over them.
  double tweet_exponent = 1.0;
  std::size_t tweets_per_user = 5;
  TimeWindow period{0, 28 * kSecondsPerDay};
  std::uint64_t retweets = 10000;
  // Extra two-user components (one retweet each), outside every block.
  std::size_t isolated_pairs = 0;

  // Throws DomainError on sizes < 1, negative or non-finite rates,
  // mismatched matrix shapes, or segments whose rates are all zero.
  void validate() const;

  // JSON object; see README for the schema.
  static SynthConfig parse(std::string_view json_text);
};

struct SynthUser {
  UserId id;
  std::uint32_t block = 0;  // blocks.size() marks isolated-pair users
  Category category = Category::kOther;
  std::optional<std::string> country;
};

struct ExpectedSegment {
  TimeWindow window;
  // Probability of a retweet landing in cell (a, b), given it falls in the
  // segment.
  std::vector<std::vector<double>> cell_probability;
};

struct SynthData {
  // Originals and retweets, sorted by (timestamp, tweet_id).
  std::vector<TweetEvent> events;
  std::vector<SynthUser> users;
  std::vector<ExpectedSegment> expected;
  // Realized retweets per (author block, retweeter block), isolated pairs
  // excluded.
  std::vector<std::vector<std::uint64_t>> realized;
  // Groups of blocks linked by a non-zero rate in either direction at any
  // time; each isolated pair adds one more component.
  std::vector<std::vector<std::uint32_t>> block_components;
  std::size_t expected_components = 0;
};

SynthData generate(const SynthConfig& cfg);

// Ground-truth block per user, for NMI checks.
UserSuperMap super_map(const SynthData& data, const SynthConfig& cfg);

// user_id,category
void write_synth_categories(std::ostream& out, const SynthData& data);
// user_id,block,super_community,category,country
void write_ground_truth_csv(std::ostream& out, const SynthData& data, const SynthConfig& cfg);
void write_expected_mixing_json(std::ostream& out, const SynthData& data);

// Ready-made configuration: three blocks per super-community with distinct
// category and country profiles, and a rate change half-way through.
SynthConfig planted_config(std::size_t users, std::uint64_t retweets, std::uint64_t seed);

struct PlantedGraph {
  SymmetricGraph graph;
  std::vector<std::uint32_t> truth;
};

// Undirected planted partition: each pair joins with p_in inside a block and
// p_out across blocks, unit weights.
PlantedGraph planted_partition_graph(std::span<const std::size_t> sizes, double p_in,
                                     double p_out, std::uint64_t seed);

}  // namespace attnet

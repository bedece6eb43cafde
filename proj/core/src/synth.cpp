#include "attnet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "attnet/csv.hpp"
#include "attnet/rng.hpp"

namespace attnet {
namespace {

using nlohmann::json;

// Draw streams; fixed so golden outputs stay put when code moves around.
enum Stream : std::uint64_t {
  kUsersStream = 1,
  kPopularityStream = 2,
  kTimeStream = 3,
  kCellStream = 4,
  kAuthorStream = 5,
  kRetweeterStream = 6,
  kOriginalStream = 7,
  kPairStream = 8,
};

std::string padded(char prefix, std::uint64_t value, std::size_t width) {
  std::string digits = std::to_string(value);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

std::size_t digits_of(std::uint64_t n) { return std::to_string(n == 0 ? 0 : n - 1).size(); }

// Inverse-CDF sampling from unnormalized non-negative weights.
class Cdf {
 public:
  Cdf() = default;
  explicit Cdf(std::span<const double> weights) : cum_(weights.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      cum_[i] = acc;
    }
  }
  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform() * cum_.back();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    if (it == cum_.end()) --it;
    return static_cast<std::size_t>(it - cum_.begin());
  }
  double total() const { return cum_.empty() ? 0.0 : cum_.back(); }

 private:
  std::vector<double> cum_;
};

std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  for (std::size_t r = 0; r < n; ++r) w[r] = std::pow(static_cast<double>(r + 1), -exponent);
  return w;
}

template <typename T>
T draw_from_mix(const std::vector<std::pair<T, double>>& mix, Rng& rng) {
  std::vector<double> w;
  w.reserve(mix.size());
  for (const auto& [value, weight] : mix) w.push_back(weight);
  return mix[Cdf(w).sample(rng)].first;
}

Timestamp json_time(const json& v) {
  if (v.is_number_integer()) return v.get<Timestamp>();
  if (v.is_string()) {
    if (auto t = parse_timestamp(v.get<std::string>())) return *t;
  }
  throw ParseError("synth: bad timestamp " + v.dump());
}

}  // namespace

void SynthConfig::validate() const {
  if (blocks.empty()) throw DomainError("synth: at least one block is required");
  if (segments.empty()) throw DomainError("synth: at least one rate segment is required");
  if (period.end <= period.start) throw DomainError("synth: empty period");
  if (tweets_per_user < 1) throw DomainError("synth: tweets_per_user must be at least 1");
  if (!std::isfinite(popularity_exponent) || popularity_exponent < 0.0 ||
      !std::isfinite(tweet_exponent) || tweet_exponent < 0.0) {
    throw DomainError("synth: exponents must be finite and non-negative");
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    if (block.size < 1) throw DomainError("synth: block " + std::to_string(b) + " is empty");
    if (!(block.location_rate >= 0.0 && block.location_rate <= 1.0)) {
      throw DomainError("synth: location_rate must lie in [0, 1]");
    }
    double cat = 0.0, cty = 0.0;
    for (const auto& [c, w] : block.category_mix) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("synth: bad category weight");
      cat += w;
    }
    for (const auto& [c, w] : block.country_mix) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("synth: bad country weight");
      cty += w;
    }
    if (!block.category_mix.empty() && cat <= 0.0) {
      throw DomainError("synth: category mix of block " + std::to_string(b) + " sums to zero");
    }
    if (!block.country_mix.empty() && cty <= 0.0) {
      throw DomainError("synth: country mix of block " + std::to_string(b) + " sums to zero");
    }
  }
  const std::size_t s = blocks.size();
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& seg = segments[k];
    if (!(seg.duration > 0.0) || !std::isfinite(seg.duration)) {
      throw DomainError("synth: segment durations must be positive");
    }
    if (seg.rates.size() != s) throw DomainError("synth: rate matrix must be blocks x blocks");
    double total = 0.0;
    for (std::size_t a = 0; a < s; ++a) {
      if (seg.rates[a].size() != s) throw DomainError("synth: rate matrix must be blocks x blocks");
      for (std::size_t b = 0; b < s; ++b) {
        const double r = seg.rates[a][b];
        if (!(r >= 0.0) || !std::isfinite(r)) {
          throw DomainError("synth: rates must be finite and non-negative");
        }
        if (a == b && r > 0.0 && blocks[a].size < 2) {
          throw DomainError("synth: block " + std::to_string(a) +
                            " has one member but a non-zero internal rate");
        }
        total += r;
      }
    }
    if (total <= 0.0) {
      throw DomainError("synth: infeasible rates (segment " + std::to_string(k) + " is all zero)");
    }
  }
}

SynthConfig SynthConfig::parse(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("synth: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("synth: config must be an object");

  try {
    if (doc.contains("planted")) {
      const auto& p = doc.at("planted");
      return planted_config(p.at("users").get<std::size_t>(), p.at("retweets").get<std::uint64_t>(),
                            p.value("seed", std::uint64_t{0}));
    }

    SynthConfig cfg;
    cfg.seed = doc.value("seed", std::uint64_t{0});
    cfg.retweets = doc.value("retweets", cfg.retweets);
    cfg.popularity_exponent = doc.value("popularity_exponent", cfg.popularity_exponent);
    cfg.tweet_exponent = doc.value("tweet_exponent", cfg.tweet_exponent);
    cfg.tweets_per_user = doc.value("tweets_per_user", cfg.tweets_per_user);
    cfg.isolated_pairs = doc.value("isolated_pairs", cfg.isolated_pairs);
    if (doc.contains("period")) {
      cfg.period.start = json_time(doc["period"].at("start"));
      cfg.period.end = json_time(doc["period"].at("end"));
    }
    for (const auto& jb : doc.at("blocks")) {
      BlockSpec b;
      b.size = jb.at("size").get<std::size_t>();
      b.location_rate = jb.value("location_rate", 1.0);
      if (jb.contains("super_community")) {
        const auto name = jb["super_community"].get<std::string>();
        auto s = parse_super_community(name);
        if (!s) throw ParseError("synth: unknown super_community '" + name + "'");
        b.super_community = *s;
      }
      if (jb.contains("categories")) {
        for (const auto& [label, w] : jb["categories"].items()) {
          auto c = parse_category(label);
          if (!c) throw ParseError("synth: unknown category '" + label + "'");
          b.category_mix.emplace_back(*c, w.get<double>());
        }
      }
      if (jb.contains("countries")) {
        for (const auto& [name, w] : jb["countries"].items()) {
          b.country_mix.emplace_back(name, w.get<double>());
        }
      }
      cfg.blocks.push_back(std::move(b));
    }
    for (const auto& js : doc.at("segments")) {
      RateSegment seg;
      seg.duration = js.value("duration", 1.0);
      seg.rates = js.at("rates").get<std::vector<std::vector<double>>>();
      cfg.segments.push_back(std::move(seg));
    }
    return cfg;
  } catch (const json::exception& e) {
    throw ParseError(std::string("synth: ") + e.what());
  }
}

SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t s = cfg.blocks.size();
  SynthData out;

  // Users, block by block.
  std::size_t block_users = 0;
  for (const auto& b : cfg.blocks) block_users += b.size;
  const std::size_t width = digits_of(block_users);
  const std::size_t pair_width = digits_of(2 * cfg.isolated_pairs);
  std::vector<std::size_t> block_begin(s + 1, 0);
  {
    Rng rng(cfg.seed, kUsersStream);
    out.users.reserve(block_users + 2 * cfg.isolated_pairs);
    for (std::uint32_t b = 0; b < s; ++b) {
      const auto& spec = cfg.blocks[b];
      block_begin[b] = out.users.size();
      for (std::size_t i = 0; i < spec.size; ++i) {
        SynthUser u;
        u.id = padded('u', out.users.size(), width);
        u.block = b;
        if (!spec.category_mix.empty()) u.category = draw_from_mix(spec.category_mix, rng);
        if (!spec.country_mix.empty() && rng.bernoulli(spec.location_rate)) {
          u.country = draw_from_mix(spec.country_mix, rng);
        }
        out.users.push_back(std::move(u));
      }
    }
    block_begin[s] = out.users.size();
    for (std::size_t i = 0; i < 2 * cfg.isolated_pairs; ++i) {
      SynthUser u;
      u.id = padded('x', i, pair_width);
      u.block = static_cast<std::uint32_t>(s);
      out.users.push_back(std::move(u));
    }
  }

  // Popularity order within each block.
  std::vector<std::vector<std::uint32_t>> ranked(s);
  std::vector<Cdf> popularity(s);
  {
    Rng rng(cfg.seed, kPopularityStream);
    for (std::size_t b = 0; b < s; ++b) {
      auto& members = ranked[b];
      members.resize(cfg.blocks[b].size);
      std::iota(members.begin(), members.end(), static_cast<std::uint32_t>(block_begin[b]));
      rng.shuffle(std::span<std::uint32_t>(members));
      popularity[b] = Cdf(zipf_weights(members.size(), cfg.popularity_exponent));
    }
  }
  const Cdf tweet_pick(zipf_weights(cfg.tweets_per_user, cfg.tweet_exponent));

  // Segment boundaries and cell distributions.
  const Timestamp length = cfg.period.length();
  double total_duration = 0.0;
  for (const auto& seg : cfg.segments) total_duration += seg.duration;
  std::vector<Timestamp> bounds{cfg.period.start};
  std::vector<Cdf> cells;
  double acc = 0.0;
  for (std::size_t k = 0; k < cfg.segments.size(); ++k) {
    acc += cfg.segments[k].duration;
    const Timestamp end =
        k + 1 == cfg.segments.size()
            ? cfg.period.end
            : cfg.period.start + static_cast<Timestamp>(std::llround(acc / total_duration *
                                                                     static_cast<double>(length)));
    ExpectedSegment ex;
    ex.window = {bounds.back(), end};
    std::vector<double> flat;
    double total = 0.0;
    for (const auto& row : cfg.segments[k].rates) {
      for (double r : row) {
        flat.push_back(r);
        total += r;
      }
    }
    ex.cell_probability.assign(s, std::vector<double>(s, 0.0));
    for (std::size_t a = 0; a < s; ++a) {
      for (std::size_t b = 0; b < s; ++b) ex.cell_probability[a][b] = cfg.segments[k].rates[a][b] / total;
    }
    out.expected.push_back(std::move(ex));
    cells.emplace_back(flat);
    bounds.push_back(end);
  }

  auto tweet_id_of = [&](std::uint32_t user, std::size_t k) {
    return out.users[user].id + "_" + std::to_string(k);
  };

  out.realized.assign(s, std::vector<std::uint64_t>(s, 0));
  out.events.reserve(cfg.retweets + block_users * cfg.tweets_per_user + 3 * cfg.isolated_pairs);
  {
    Rng time_rng(cfg.seed, kTimeStream);
    Rng cell_rng(cfg.seed, kCellStream);
    Rng author_rng(cfg.seed, kAuthorStream);
    Rng retweeter_rng(cfg.seed, kRetweeterStream);
    const std::size_t rt_width = digits_of(cfg.retweets);
    for (std::uint64_t i = 0; i < cfg.retweets; ++i) {
      const Timestamp t = cfg.period.start + static_cast<Timestamp>(
                                                 time_rng.below(static_cast<std::uint64_t>(length)));
      auto seg = static_cast<std::size_t>(std::upper_bound(bounds.begin(), bounds.end(), t) -
                                          bounds.begin()) - 1;
      // Zero-length segments can leave t on a later boundary.
      seg = std::min(seg, cells.size() - 1);
      const std::size_t cell = cells[seg].sample(cell_rng);
      const std::size_t a = cell / s, b = cell % s;
      const std::uint32_t author = ranked[a][popularity[a].sample(author_rng)];
      const std::size_t k = tweet_pick.sample(author_rng);
      std::uint32_t retweeter = 0;
      do {
        retweeter = static_cast<std::uint32_t>(block_begin[b] +
                                               retweeter_rng.below(cfg.blocks[b].size));
      } while (retweeter == author);

      TweetEvent e;
      e.tweet_id = padded('r', i, rt_width);
      e.author_id = out.users[retweeter].id;
      e.timestamp = t;
      e.kind = EventKind::kRetweet;
      e.retweeted_author_id = out.users[author].id;
      e.retweeted_tweet_id = tweet_id_of(author, k);
      e.raw_location = out.users[retweeter].country;
      out.events.push_back(std::move(e));
      ++out.realized[a][b];
    }
  }
  {
    Rng rng(cfg.seed, kOriginalStream);
    for (std::uint32_t u = 0; u < block_begin[s]; ++u) {
      for (std::size_t k = 0; k < cfg.tweets_per_user; ++k) {
        TweetEvent e;
        e.tweet_id = tweet_id_of(u, k);
        e.author_id = out.users[u].id;
        e.timestamp = cfg.period.start + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(length)));
        e.raw_location = out.users[u].country;
        out.events.push_back(std::move(e));
      }
    }
  }
  {
    Rng rng(cfg.seed, kPairStream);
    for (std::size_t p = 0; p < cfg.isolated_pairs; ++p) {
      const auto a = static_cast<std::uint32_t>(block_begin[s] + 2 * p);
      const std::uint32_t b = a + 1;
      TweetEvent orig;
      orig.tweet_id = tweet_id_of(a, 0);
      orig.author_id = out.users[a].id;
      orig.timestamp = cfg.period.start + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(length)));
      TweetEvent rt;
      rt.tweet_id = out.users[b].id + "_rt";
      rt.author_id = out.users[b].id;
      rt.timestamp = cfg.period.start + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(length)));
      rt.kind = EventKind::kRetweet;
      rt.retweeted_author_id = out.users[a].id;
      rt.retweeted_tweet_id = orig.tweet_id;
      out.events.push_back(std::move(orig));
      out.events.push_back(std::move(rt));
    }
  }
  std::sort(out.events.begin(), out.events.end(), [](const TweetEvent& x, const TweetEvent& y) {
    return x.timestamp != y.timestamp ? x.timestamp < y.timestamp : x.tweet_id < y.tweet_id;
  });

  // Block-level connectivity.
  std::vector<std::uint32_t> parent(s);
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& seg : cfg.segments) {
    for (std::uint32_t a = 0; a < s; ++a) {
      for (std::uint32_t b = 0; b < s; ++b) {
        if (a != b && (seg.rates[a][b] > 0.0 || seg.rates[b][a] > 0.0)) {
          const auto ra = find(a), rb = find(b);
          if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        }
      }
    }
  }
  std::vector<std::int64_t> slot(s, -1);
  for (std::uint32_t b = 0; b < s; ++b) {
    const auto r = find(b);
    if (slot[r] < 0) {
      slot[r] = static_cast<std::int64_t>(out.block_components.size());
      out.block_components.emplace_back();
    }
    out.block_components[static_cast<std::size_t>(slot[r])].push_back(b);
  }
  out.expected_components = out.block_components.size() + cfg.isolated_pairs;
  return out;
}

UserSuperMap super_map(const SynthData& data, const SynthConfig& cfg) {
  UserSuperMap map;
  for (const auto& u : data.users) {
    map[u.id] = u.block < cfg.blocks.size() ? cfg.blocks[u.block].super_community
                                            : SuperCommunity::kOther;
  }
  return map;
}

void write_synth_categories(std::ostream& out, const SynthData& data) {
  out << "user_id,category\n";
  for (const auto& u : data.users) {
    out << u.id << ',' << csv::escape(category_label(u.category)) << '\n';
  }
}

void write_ground_truth_csv(std::ostream& out, const SynthData& data, const SynthConfig& cfg) {
  out << "user_id,block,super_community,category,country\n";
  for (const auto& u : data.users) {
    const bool isolated = u.block >= cfg.blocks.size();
    out << u.id << ',' << (isolated ? std::string("isolated") : std::to_string(u.block)) << ','
        << super_community_name(isolated ? SuperCommunity::kOther
                                         : cfg.blocks[u.block].super_community)
        << ',' << csv::escape(category_label(u.category)) << ','
        << csv::escape(u.country.value_or("")) << '\n';
  }
}

void write_expected_mixing_json(std::ostream& out, const SynthData& data) {
  json doc;
  doc["segments"] = json::array();
  for (const auto& seg : data.expected) {
    doc["segments"].push_back({{"start", format_timestamp(seg.window.start)},
                               {"end", format_timestamp(seg.window.end)},
                               {"cell_probability", seg.cell_probability}});
  }
  doc["realized"] = data.realized;
  doc["block_components"] = data.block_components;
  doc["expected_components"] = data.expected_components;
  out << doc.dump(2) << '\n';
}

SynthConfig planted_config(std::size_t users, std::uint64_t retweets, std::uint64_t seed) {
  constexpr std::size_t kPerType = 3;
  constexpr std::size_t kBlocks = kNumSuperCommunities * kPerType;
  if (users < 2 * kBlocks) throw DomainError("synth: planted config needs at least 24 users");
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.retweets = retweets;
  cfg.popularity_exponent = 0.8;
  cfg.tweet_exponent = 1.0;
  cfg.tweets_per_user = 4;
  cfg.period = {*parse_timestamp("2020-01-06"), *parse_timestamp("2020-05-04")};

  using C = Category;
  using S = SuperCommunity;
  const std::vector<std::pair<std::string, double>> worldwide = {
      {"United States", 3}, {"United Kingdom", 2}, {"Germany", 1}, {"France", 1}, {"Italy", 1},
      {"Spain", 1},         {"Canada", 1},         {"India", 1},   {"Brazil", 1}, {"Australia", 1}};
  const std::vector<std::pair<std::string, double>> national = {{"Slovenia", 20}, {"Croatia", 1}};

  // Three variants per super-community; the variant index nudges the mix.
  auto block_for = [&](S type, std::size_t v, std::size_t size) {
    const double x = static_cast<double>(v);
    BlockSpec b;
    b.size = size;
    b.super_community = type;
    switch (type) {
      case S::kInternationalSciHealth:
        b.category_mix = {{C::kScience, 4 - x}, {C::kHealthcare, 2 + x}, {C::kMedia, 1}, {C::kOther, 4}};
        b.country_mix = worldwide;
        b.location_rate = 0.6;
        break;
      case S::kNationalElite:
        b.category_mix = {{C::kMedia, 3 - x}, {C::kGovernmentPolitics, 1 + x}, {C::kPublicServices, 2},
                          {C::kHealthcare, 1}, {C::kOther, 4}};
        b.country_mix = national;
        b.location_rate = 0.6;
        break;
      case S::kPolitical:
        b.category_mix = {{C::kPoliticalSupporter, 5 - x}, {C::kGovernmentPolitics, 1}, {C::kOther, 5 + x}};
        b.country_mix = {{"Slovenia", 1}};
        b.location_rate = 0.4;
        break;
      case S::kOther:
        b.category_mix = {{C::kSports, 2 + x}, {C::kArtsEntertainment, 2}, {C::kOther, 8 - x}};
        b.country_mix = {{"Slovenia", 5}, {"Austria", 1}};
        b.location_rate = 0.3;
        break;
    }
    return b;
  };
  for (std::size_t i = 0; i < kBlocks; ++i) {
    const std::size_t size = users / kBlocks + (i < users % kBlocks ? 1 : 0);
    cfg.blocks.push_back(block_for(kAllSuperCommunities[i / kPerType], i % kPerType, size));
  }

  // Super-community level rates (rows: authors, columns: retweeters). In the
  // second half attention shifts from the elite toward the science blocks.
  const double first[4][4] = {{1.0, 0.03, 0.01, 0.02},
                              {0.03, 1.0, 0.02, 0.03},
                              {0.01, 0.02, 1.0, 0.02},
                              {0.01, 0.02, 0.02, 0.8}};
  const double second[4][4] = {{1.4, 0.06, 0.02, 0.05},
                               {0.02, 0.7, 0.02, 0.02},
                               {0.01, 0.02, 1.0, 0.02},
                               {0.01, 0.02, 0.02, 0.8}};
  for (const auto* m : {first, second}) {
    RateSegment seg;
    seg.rates.assign(kBlocks, std::vector<double>(kBlocks, 0.0));
    for (std::size_t a = 0; a < kBlocks; ++a) {
      for (std::size_t b = 0; b < kBlocks; ++b) {
        const std::size_t ta = a / kPerType, tb = b / kPerType;
        if (a == b) {
          seg.rates[a][b] = m[ta][tb];
        } else if (ta == tb) {
          seg.rates[a][b] = 0.01 * m[ta][tb];
        } else {
          seg.rates[a][b] = m[ta][tb] / kPerType;
        }
      }
    }
    cfg.segments.push_back(std::move(seg));
  }
  return cfg;
}

PlantedGraph planted_partition_graph(std::span<const std::size_t> sizes, double p_in,
                                     double p_out, std::uint64_t seed) {
  if (!(p_in >= 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0)) {
    throw DomainError("planted partition: probabilities must lie in [0, 1]");
  }
  PlantedGraph pg;
  for (std::uint32_t b = 0; b < sizes.size(); ++b) pg.truth.insert(pg.truth.end(), sizes[b], b);
  const std::size_t n = pg.truth.size();
  Rng rng(seed);
  std::vector<SymmetricGraph::Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = pg.truth[u] == pg.truth[v] ? p_in : p_out;
      if (rng.uniform() < p) {
        edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), 1.0});
      }
    }
  }
  pg.graph = SymmetricGraph::from_edges(n, std::move(edges));
  return pg;
}

}  // namespace attnet

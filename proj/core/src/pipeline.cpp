#include "attnet/pipeline.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "attnet/community.hpp"
#include "attnet/csv.hpp"
#include "attnet/graph.hpp"
#include "attnet/stats.hpp"

namespace attnet::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumStages> kStageNames = {
    "synth", "ingest", "graph", "communities", "profile", "dynamics", "attention", "stats"};

constexpr std::string_view kFormat = "attnet-run/1";

std::size_t si(Stage s) { return static_cast<std::size_t>(s); }

// ---- hashing and files -------------------------------------------------

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256: digest init failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_, data, n) != 1) throw std::runtime_error("sha256: update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_, md, &len) != 1) throw std::runtime_error("sha256: final failed");
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out += kDigits[md[i] >> 4];
      out += kDigits[md[i] & 15];
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    fill(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

// ---- config helpers ----------------------------------------------------

Timestamp json_time(const json& v, const char* what) {
  if (v.is_number_integer()) return v.get<Timestamp>();
  if (v.is_string()) {
    if (auto t = parse_timestamp(v.get<std::string>())) return *t;
  }
  throw ConfigError(std::string("config: bad timestamp for ") + what + ": " + v.dump());
}

Timestamp days(const json& section, const char* key, Timestamp fallback) {
  if (!section.contains(key)) return fallback;
  const double d = section.at(key).get<double>();
  if (!(d > 0.0)) throw ConfigError(std::string("config: ") + key + " must be positive");
  return static_cast<Timestamp>(d * static_cast<double>(kSecondsPerDay));
}

json synth_to_json(const SynthConfig& s) {
  json blocks = json::array();
  for (const auto& b : s.blocks) {
    json cats = json::object(), countries = json::object();
    for (const auto& [c, w] : b.category_mix) cats[std::string(category_label(c))] = w;
    for (const auto& [c, w] : b.country_mix) countries[c] = w;
    blocks.push_back({{"size", b.size},
                      {"categories", cats},
                      {"countries", countries},
                      {"location_rate", b.location_rate},
                      {"super_community", super_community_name(b.super_community)}});
  }
  json segments = json::array();
  for (const auto& seg : s.segments) segments.push_back({{"duration", seg.duration}, {"rates", seg.rates}});
  return {{"seed", s.seed},
          {"blocks", blocks},
          {"segments", segments},
          {"popularity_exponent", s.popularity_exponent},
          {"tweet_exponent", s.tweet_exponent},
          {"tweets_per_user", s.tweets_per_user},
          {"period", {{"start", s.period.start}, {"end", s.period.end}}},
          {"retweets", s.retweets},
          {"isolated_pairs", s.isolated_pairs}};
}

json window_json(const ObservationWindow& w) { return {{"start", w.start}, {"end", w.end}}; }

// ---- stage layout ------------------------------------------------------

struct Layout {
  fs::path root;

  fs::path dir(Stage s) const { return root / std::string(stage_name(s)); }
  fs::path file(Stage s, std::string_view name) const { return dir(s) / std::string(name); }
  fs::path manifest() const { return root / "manifest.json"; }
  fs::path report(Stage s) const { return file(s, "report.json"); }
};

std::vector<Stage> direct_deps(Stage s, const RunConfig& cfg) {
  switch (s) {
    case Stage::kSynth: return {};
    case Stage::kIngest:
      return cfg.events_from_synth() ? std::vector<Stage>{Stage::kSynth} : std::vector<Stage>{};
    case Stage::kGraph: return {Stage::kIngest};
    case Stage::kCommunities: return {Stage::kGraph};
    case Stage::kProfile: return {Stage::kCommunities, Stage::kIngest};
    case Stage::kDynamics:
    case Stage::kAttention: return {Stage::kProfile, Stage::kIngest};
    case Stage::kStats: return {Stage::kGraph};
  }
  return {};
}

std::vector<Stage> all_deps(Stage s, const RunConfig& cfg) {
  std::array<bool, kNumStages> seen{};
  std::vector<Stage> stack = direct_deps(s, cfg);
  while (!stack.empty()) {
    const Stage d = stack.back();
    stack.pop_back();
    if (seen[si(d)]) continue;
    seen[si(d)] = true;
    for (Stage e : direct_deps(d, cfg)) stack.push_back(e);
  }
  std::vector<Stage> out;
  for (std::size_t i = 0; i < kNumStages; ++i) {
    if (seen[i]) out.push_back(static_cast<Stage>(i));
  }
  return out;
}

std::optional<fs::path> categories_path(const RunConfig& cfg, const Layout& lay) {
  if (cfg.categories) return cfg.categories;
  if (cfg.events_from_synth()) return lay.file(Stage::kSynth, "categories.csv");
  return std::nullopt;
}

std::vector<fs::path> stage_inputs(Stage s, const RunConfig& cfg, const Layout& lay) {
  std::vector<fs::path> in;
  switch (s) {
    case Stage::kSynth: break;
    case Stage::kIngest:
      if (cfg.events_from_synth()) {
        in.push_back(lay.file(Stage::kSynth, "events.jsonl"));
      } else {
        in.insert(in.end(), cfg.events.begin(), cfg.events.end());
      }
      if (cfg.gazetteer) in.push_back(*cfg.gazetteer);
      break;
    case Stage::kGraph: in.push_back(lay.file(Stage::kIngest, "events.bin")); break;
    case Stage::kCommunities: in.push_back(lay.file(Stage::kGraph, "giant.bin")); break;
    case Stage::kProfile:
      in.push_back(lay.file(Stage::kGraph, "giant.bin"));
      in.push_back(lay.file(Stage::kCommunities, "partition.csv"));
      in.push_back(lay.file(Stage::kCommunities, "communities.csv"));
      in.push_back(lay.file(Stage::kIngest, "user_countries.csv"));
      in.push_back(lay.file(Stage::kIngest, "tweet_countries.csv"));
      if (auto c = categories_path(cfg, lay)) in.push_back(*c);
      if (cfg.rulebook) in.push_back(*cfg.rulebook);
      break;
    case Stage::kDynamics:
    case Stage::kAttention:
      in.push_back(lay.file(Stage::kIngest, "events.bin"));
      in.push_back(lay.file(Stage::kCommunities, "partition.csv"));
      in.push_back(lay.file(Stage::kProfile, "super_communities.csv"));
      break;
    case Stage::kStats: in.push_back(lay.file(Stage::kGraph, "graph.bin")); break;
  }
  return in;
}

std::string key_of(const fs::path& p, const Layout& lay) {
  const auto rel = p.lexically_normal().lexically_relative(lay.root.lexically_normal());
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.lexically_normal().generic_string();
}

// ---- shared readers ----------------------------------------------------

std::vector<TweetEvent> read_events(const fs::path& path) {
  auto in = open_input(path);
  return read_event_snapshot(in);
}

std::pair<NodeRegistry, RetweetGraph> read_graph(const fs::path& path) {
  auto in = open_input(path);
  return read_snapshot(in);
}

struct CommunityTable {
  std::vector<LabeledCommunity> labeled;
};

CommunityTable read_communities_csv(const fs::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!csv::read_line(in, line) || line != "label,community,size,node_share") {
    throw std::runtime_error(path.string() + ": unexpected header");
  }
  CommunityTable t;
  while (csv::read_line(in, line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 4) throw std::runtime_error(path.string() + ": expected 4 fields");
    t.labeled.push_back({f[0], static_cast<CommunityId>(std::stoul(f[1])),
                         static_cast<std::size_t>(std::stoull(f[2]))});
  }
  return t;
}

RankedCommunities reconstruct_ranking(const NodeRegistry& registry, const fs::path& partition,
                                      const fs::path& communities) {
  RankedCommunities r;
  r.labeled = read_communities_csv(communities).labeled;
  std::map<std::string, std::uint32_t> rank_of;
  for (std::uint32_t i = 0; i < r.labeled.size(); ++i) rank_of[r.labeled[i].label] = i;

  auto in = open_input(partition);
  const auto rows = read_partition_csv(in);
  if (rows.size() != registry.size()) {
    throw std::runtime_error("partition and giant component cover different node sets");
  }
  r.node_rank.resize(rows.size());
  std::size_t covered = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].user_id != registry.id(static_cast<NodeId>(i))) {
      throw std::runtime_error("partition rows are not in graph node order");
    }
    if (rows[i].label == kResidualLabel) {
      ++r.residual_nodes;
      continue;
    }
    auto it = rank_of.find(rows[i].label);
    if (it == rank_of.end()) throw std::runtime_error("unknown community label " + rows[i].label);
    r.node_rank[i] = it->second;
    ++covered;
  }
  r.coverage = rows.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(rows.size());
  return r;
}

UserSuperMap read_user_super_map(const Layout& lay) {
  std::map<std::string, SuperCommunity> by_label;
  {
    auto in = open_input(lay.file(Stage::kProfile, "super_communities.csv"));
    by_label = read_super_communities_csv(in);
  }
  auto in = open_input(lay.file(Stage::kCommunities, "partition.csv"));
  UserSuperMap map;
  for (const auto& row : read_partition_csv(in)) {
    auto it = by_label.find(row.label);
    if (it != by_label.end()) map.emplace(row.user_id, it->second);
  }
  return map;
}

TimeWindow analysis_period(const RunConfig& cfg, std::span<const TweetEvent> events) {
  Timestamp start = cfg.window.start, end = cfg.window.end;
  if (start == std::numeric_limits<Timestamp>::min()) {
    start = events.empty() ? 0 : events.front().timestamp;
  }
  if (end == std::numeric_limits<Timestamp>::max()) {
    end = events.empty() ? start : events.back().timestamp;
  }
  // The observation window is closed; analysis windows are half-open.
  return {start, end + 1};
}

json warnings_json(const std::vector<std::string>& w) { return json(w); }

json interval_json(const std::optional<BootstrapInterval>& b) {
  if (!b) return nullptr;
  return {{"mean", b->mean}, {"low", b->low}, {"high", b->high}, {"degenerate", b->degenerate}};
}

// ---- the stages --------------------------------------------------------

struct StageRun {
  std::vector<fs::path> outputs;
  json metrics = json::object();
};

class Runner {
 public:
  Runner(const RunConfig& cfg, const RunOptions& opts)
      : cfg_(cfg), opts_(opts), lay_{cfg.out_dir}, threads_(opts.threads) {}

  StageOutcome run(Stage s) {
    check_prerequisites(s);
    load_manifest();

    const auto inputs = stage_inputs(s, cfg_, lay_);
    json input_hashes = json::object();
    for (const auto& p : inputs) {
      if (!fs::exists(p)) {
        throw DependencyError("stage '" + std::string(stage_name(s)) + "' is missing input " +
                              p.string());
      }
      input_hashes[key_of(p, lay_)] = sha256_file(p);
    }
    const std::string config_hash = sha256_hex(cfg_.section_json(s));

    if (cache_valid(s, config_hash, input_hashes)) {
      log(std::string(stage_name(s)) + ": cache hit, nothing to do");
      return {s, true, lay_.report(s)};
    }

    log(std::string(stage_name(s)) + ": running");
    fs::create_directories(lay_.dir(s));
    StageRun r = dispatch(s);

    json outputs = json::object();
    for (const auto& p : r.outputs) outputs[key_of(p, lay_)] = sha256_file(p);

    json report = {{"format", kFormat},
                   {"stage", stage_name(s)},
                   {"config_hash", config_hash},
                   {"config", json::parse(cfg_.section_json(s))},
                   {"input_hashes", input_hashes},
                   {"output_hashes", outputs},
                   {"cache_hit", false},
                   {"metrics", r.metrics}};
    atomic_write(lay_.report(s), [&](std::ostream& out) { out << report.dump(2) << '\n'; });

    manifest_["format"] = kFormat;
    manifest_["stages"][std::string(stage_name(s))] = {
        {"config_hash", config_hash}, {"inputs", input_hashes}, {"outputs", outputs}};
    atomic_write(lay_.manifest(), [&](std::ostream& out) { out << manifest_.dump(2) << '\n'; });
    log(std::string(stage_name(s)) + ": done");
    return {s, false, lay_.report(s)};
  }

 private:
  void log(const std::string& msg) const {
    if (opts_.verbose && opts_.log != nullptr) *opts_.log << "attnet: " << msg << '\n';
  }

  void load_manifest() {
    manifest_ = json::object();
    if (!fs::exists(lay_.manifest())) return;
    auto in = open_input(lay_.manifest());
    manifest_ = json::parse(in, nullptr, false);
    if (manifest_.is_discarded() || !manifest_.is_object() ||
        manifest_.value("format", std::string()) != kFormat) {
      manifest_ = json::object();
    }
  }

  const json* record(Stage s) const {
    if (!manifest_.contains("stages")) return nullptr;
    const auto& stages = manifest_["stages"];
    auto it = stages.find(std::string(stage_name(s)));
    return it == stages.end() ? nullptr : &*it;
  }

  bool outputs_present(const json& rec) const {
    for (const auto& [key, hash] : rec.at("outputs").items()) {
      if (!fs::exists(lay_.root / key)) return false;
    }
    return true;
  }

  void check_prerequisites(Stage s) {
    load_manifest();
    for (Stage d : all_deps(s, cfg_)) {
      const json* rec = record(d);
      if (rec == nullptr || !outputs_present(*rec)) {
        throw DependencyError("stage '" + std::string(stage_name(s)) + "' needs the outputs of '" +
                              std::string(stage_name(d)) + "'; run `attnet " +
                              std::string(stage_name(d)) + "` first");
      }
    }
  }

  bool cache_valid(Stage s, const std::string& config_hash, const json& inputs) const {
    const json* rec = record(s);
    if (rec == nullptr) return false;
    if (rec->value("config_hash", std::string()) != config_hash) return false;
    if (rec->at("inputs") != inputs) return false;
    for (const auto& [key, hash] : rec->at("outputs").items()) {
      const fs::path p = lay_.root / key;
      if (!fs::exists(p) || sha256_file(p) != hash.get<std::string>()) return false;
    }
    return fs::exists(lay_.report(s));
  }

  StageRun dispatch(Stage s) {
    switch (s) {
      case Stage::kSynth: return synth();
      case Stage::kIngest: return ingest();
      case Stage::kGraph: return graph();
      case Stage::kCommunities: return communities();
      case Stage::kProfile: return profile();
      case Stage::kDynamics: return dynamics();
      case Stage::kAttention: return attention();
      case Stage::kStats: return stats();
    }
    throw std::logic_error("unknown stage");
  }

  fs::path out(Stage s, std::string_view name, const std::function<void(std::ostream&)>& fill,
               StageRun& r) {
    const fs::path p = lay_.file(s, name);
    atomic_write(p, fill);
    r.outputs.push_back(p);
    return p;
  }

  StageRun synth() {
    if (!cfg_.synth) throw ConfigError("config has no synth section");
    StageRun r;
    const SynthData data = generate(*cfg_.synth);
    out(Stage::kSynth, "events.jsonl", [&](std::ostream& o) { write_events(o, data.events); }, r);
    out(Stage::kSynth, "categories.csv", [&](std::ostream& o) { write_synth_categories(o, data); }, r);
    out(Stage::kSynth, "ground_truth.csv",
        [&](std::ostream& o) { write_ground_truth_csv(o, data, *cfg_.synth); }, r);
    out(Stage::kSynth, "expected_mixing.json",
        [&](std::ostream& o) { write_expected_mixing_json(o, data); }, r);
    r.metrics = {{"events", data.events.size()},
                 {"retweets", cfg_.synth->retweets},
                 {"users", data.users.size()},
                 {"expected_components", data.expected_components}};
    return r;
  }

  StageRun ingest() {
    std::vector<fs::path> files;
    if (cfg_.events_from_synth()) {
      files.push_back(lay_.file(Stage::kSynth, "events.jsonl"));
    } else {
      files = cfg_.events;
    }
    if (files.empty()) throw ConfigError("no event files configured (paths.events)");

    std::vector<std::string> lines;
    for (const auto& f : files) {
      auto in = open_input(f);
      std::string line;
      while (csv::read_line(in, line)) lines.push_back(std::move(line));
    }
    IngestResult result = parse_events(lines, cfg_.window, threads_);
    lines.clear();
    lines.shrink_to_fit();

    Gazetteer gz;
    if (cfg_.gazetteer) {
      auto in = open_input(*cfg_.gazetteer);
      gz = Gazetteer::load(in);
    } else {
      result.report.warnings.push_back("no gazetteer configured; no user is located");
    }
    const auto countries = assign_user_countries(result.events, gz);
    const auto tweet_counts = located_tweet_counts(result.events, gz);

    StageRun r;
    out(Stage::kIngest, "events.jsonl", [&](std::ostream& o) { write_events(o, result.events); }, r);
    out(Stage::kIngest, "events.bin",
        [&](std::ostream& o) { write_event_snapshot(o, result.events); }, r);
    out(Stage::kIngest, "user_countries.csv",
        [&](std::ostream& o) {
          o << "user_id,country\n";
          for (const auto& [user, country] : countries) {
            o << csv::escape(user) << ',' << csv::escape(country.value_or("")) << '\n';
          }
        },
        r);
    out(Stage::kIngest, "tweet_countries.csv",
        [&](std::ostream& o) {
          o << "user_id,country,tweets\n";
          for (const auto& [user, per] : tweet_counts) {
            for (const auto& [country, n] : per) {
              o << csv::escape(user) << ',' << csv::escape(country) << ',' << n << '\n';
            }
          }
        },
        r);
    std::size_t located = 0;
    for (const auto& [user, c] : countries) located += c.has_value() ? 1 : 0;
    const auto& rep = result.report;
    r.metrics = {{"lines", rep.lines},
                 {"events", rep.events},
                 {"retweets", rep.retweets},
                 {"originals", rep.originals},
                 {"self_retweets", rep.self_retweets},
                 {"malformed", rep.malformed},
                 {"out_of_window", rep.out_of_window},
                 {"duplicates", rep.duplicates},
                 {"balanced", rep.balanced()},
                 {"users", countries.size()},
                 {"located_users", located},
                 {"warnings", warnings_json(rep.warnings)}};
    return r;
  }

  StageRun graph() {
    const auto events = read_events(lay_.file(Stage::kIngest, "events.bin"));
    const BuiltGraph built = build_graph(events);
    const GiantComponent giant = giant_component(built.graph);
    const NodeRegistry giant_registry = built.registry.subset(giant.kept);
    const DegreeDistribution dist(built.graph);

    StageRun r;
    out(Stage::kGraph, "graph.bin",
        [&](std::ostream& o) { write_snapshot(o, built.registry, built.graph); }, r);
    out(Stage::kGraph, "giant.bin",
        [&](std::ostream& o) { write_snapshot(o, giant_registry, giant.graph); }, r);
    out(Stage::kGraph, "edges.tsv",
        [&](std::ostream& o) { write_edge_list(o, giant_registry, giant.graph); }, r);
    out(Stage::kGraph, "degree_histogram.csv",
        [&](std::ostream& o) {
          o << "out_degree,users\n";
          for (const auto& [deg, n] : dist.histogram()) o << deg << ',' << n << '\n';
        },
        r);
    const auto& c = giant.report;
    const auto top = dist.top_fraction(0.001);
    r.metrics = {{"nodes", built.graph.num_nodes()},
                 {"edges", built.graph.num_edges()},
                 {"total_weight", built.graph.total_weight()},
                 {"retweets_used", built.retweets_used},
                 {"self_retweets_skipped", built.self_retweets_skipped},
                 {"components", c.components},
                 {"giant_nodes", c.kept_nodes},
                 {"giant_edges", c.kept_edges},
                 {"discarded_components", c.discarded_components},
                 {"discarded_min_size", c.discarded_min_size},
                 {"discarded_median_size", c.discarded_median_size},
                 {"discarded_max_size", c.discarded_max_size},
                 {"discarded_node_fraction", c.discarded_node_fraction},
                 {"discarded_edge_fraction", c.discarded_edge_fraction},
                 {"top_0_1_percent", {{"users", top.users}, {"retweet_share", top.retweet_share}}}};
    return r;
  }

  StageRun communities() {
    const auto [registry, g] = read_graph(lay_.file(Stage::kGraph, "giant.bin"));
    if (g.num_nodes() == 0) throw DomainError("the giant component is empty");
    const SymmetricGraph sym = symmetrize(g);
    LouvainConfig lc;
    lc.resolution = cfg_.resolution;
    lc.seed = cfg_.louvain_seed;
    lc.max_passes = cfg_.max_passes;
    lc.tolerance = cfg_.tolerance;
    const ConsensusPartition cp = consensus(sym, lc, cfg_.runs, threads_);
    const RankedCommunities ranked = rank_communities(cp, cfg_.min_community_size);

    StageRun r;
    out(Stage::kCommunities, "partition.csv",
        [&](std::ostream& o) { write_partition_csv(o, registry, cp, ranked); }, r);
    out(Stage::kCommunities, "communities.csv",
        [&](std::ostream& o) {
          o << "label,community,size,node_share\n";
          for (const auto& c : ranked.labeled) {
            o << c.label << ',' << c.community << ',' << c.size << ','
              << csv::format_double(static_cast<double>(c.size) /
                                    static_cast<double>(cp.assignment.size()))
              << '\n';
          }
        },
        r);
    const double mean_agreement =
        cp.agreement.empty() ? 0.0
                             : std::accumulate(cp.agreement.begin(), cp.agreement.end(), 0.0) /
                                   static_cast<double>(cp.agreement.size());
    json info = {{"runs", cp.runs},
                 {"seeds", cp.seeds},
                 {"run_modularity", cp.run_modularity},
                 {"reference_seed", cp.reference_seed},
                 {"modularity", cp.modularity},
                 {"communities", cp.sizes.size()},
                 {"labeled_communities", ranked.labeled.size()},
                 {"coverage", ranked.coverage},
                 {"residual_nodes", ranked.residual_nodes},
                 {"residual_communities", ranked.residual_communities},
                 {"mean_agreement", mean_agreement},
                 {"warnings", warnings_json(ranked.warnings)}};
    out(Stage::kCommunities, "consensus.json", [&](std::ostream& o) { o << info.dump(2) << '\n'; }, r);
    r.metrics = info;
    r.metrics.erase("seeds");
    r.metrics.erase("run_modularity");
    return r;
  }

  StageRun profile() {
    const auto [registry, g] = read_graph(lay_.file(Stage::kGraph, "giant.bin"));
    const RankedCommunities ranked =
        reconstruct_ranking(registry, lay_.file(Stage::kCommunities, "partition.csv"),
                            lay_.file(Stage::kCommunities, "communities.csv"));

    std::vector<std::string> warnings;
    std::unordered_map<UserId, Category> categories;
    if (auto path = categories_path(cfg_, lay_)) {
      auto in = open_input(*path);
      categories = load_categories(in);
    } else {
      warnings.push_back("no category table configured; every user counts as Other");
    }

    std::map<UserId, std::optional<std::string>> user_countries;
    {
      auto in = open_input(lay_.file(Stage::kIngest, "user_countries.csv"));
      std::string line;
      csv::read_line(in, line);
      while (csv::read_line(in, line)) {
        if (line.empty()) continue;
        auto f = csv::split(line);
        if (f.size() != 2) throw std::runtime_error("user_countries.csv: expected 2 fields");
        user_countries[f[0]] = f[1].empty() ? std::nullopt : std::optional<std::string>(f[1]);
      }
    }
    std::map<UserId, std::map<std::string, std::uint64_t>> tweet_countries;
    {
      auto in = open_input(lay_.file(Stage::kIngest, "tweet_countries.csv"));
      std::string line;
      csv::read_line(in, line);
      while (csv::read_line(in, line)) {
        if (line.empty()) continue;
        auto f = csv::split(line);
        if (f.size() != 3) throw std::runtime_error("tweet_countries.csv: expected 3 fields");
        tweet_countries[f[0]][f[1]] = std::stoull(f[2]);
      }
    }

    ProfileSources sources{&categories, &user_countries, &tweet_countries, cfg_.entropy};
    const auto profiles = profile_communities(ranked, registry, g, sources);
    if (profiles.size() < 2) {
      throw DomainError("super-community clustering needs at least 2 labeled communities, found " +
                        std::to_string(profiles.size()));
    }
    const FeatureMatrix fm = standardize(profiles);
    const Dendrogram d = ward_cluster(fm);
    std::optional<KneeResult> knee;
    if (d.merges.size() >= 3) knee = knee_point(d);
    std::size_t k = fm.rows();
    if (cfg_.clusters) {
      k = std::min(*cfg_.clusters, fm.rows());
    } else if (knee) {
      k = knee->k;
      if (!knee->clear_knee) warnings.push_back("dendrogram has no clear knee");
    } else {
      warnings.push_back("too few communities for knee detection; each community is its own cluster");
    }

    Rulebook rb = Rulebook::defaults();
    if (cfg_.rulebook) {
      auto in = open_input(*cfg_.rulebook);
      rb = Rulebook::load(in);
    }
    const SuperCommunityAssignment a = assign_super_communities(fm, d, k, rb);

    StageRun r;
    out(Stage::kProfile, "profiles.csv", [&](std::ostream& o) { write_profiles_csv(o, profiles); }, r);
    out(Stage::kProfile, "features.csv", [&](std::ostream& o) { write_features_csv(o, fm); }, r);
    out(Stage::kProfile, "dendrogram.json",
        [&](std::ostream& o) { write_dendrogram_json(o, d, fm.labels, knee ? &*knee : nullptr); }, r);
    out(Stage::kProfile, "super_communities.csv",
        [&](std::ostream& o) { write_super_communities_csv(o, fm, a); }, r);

    json clusters = json::array();
    for (const auto& c : a.clusters) {
      json members = json::array();
      for (auto m : c.members) members.push_back(fm.labels[m]);
      clusters.push_back({{"name", super_community_name(c.name)},
                          {"members", members},
                          {"from_split", c.from_split}});
    }
    warnings.insert(warnings.end(), fm.warnings.begin(), fm.warnings.end());
    warnings.insert(warnings.end(), a.warnings.begin(), a.warnings.end());
    r.metrics = {{"communities", profiles.size()},
                 {"clusters", k},
                 {"knee", knee ? json(knee->k) : json(nullptr)},
                 {"super_communities", clusters},
                 {"warnings", warnings}};
    return r;
  }

  StageRun dynamics() {
    const auto events = read_events(lay_.file(Stage::kIngest, "events.bin"));
    const UserSuperMap map = read_user_super_map(lay_);
    const TimeWindow period = analysis_period(cfg_, events);
    const WindowSeries ws = window_series(period, cfg_.dynamics_width, cfg_.dynamics_step);
    const auto series = dynamics_series(events, ws.windows, map, cfg_.activity, threads_);

    StageRun r;
    out(Stage::kDynamics, "weekly.csv", [&](std::ostream& o) { write_dynamics_csv(o, series); }, r);
    out(Stage::kDynamics, "mixing.json", [&](std::ostream& o) { write_mixing_json(o, series); }, r);
    std::uint64_t total = 0;
    for (const auto& w : series) total += w.mixing.total;
    r.metrics = {{"windows", series.size()},
                 {"period", {{"start", format_timestamp(period.start)},
                             {"end", format_timestamp(period.end)}}},
                 {"retweets_counted", total},
                 {"mapped_users", map.size()},
                 {"warnings", ws.warnings}};
    return r;
  }

  StageRun attention() {
    const auto events = read_events(lay_.file(Stage::kIngest, "events.bin"));
    const UserSuperMap map = read_user_super_map(lay_);
    const AttentionTally tally = tally_attention(events, map);
    const Cohort cohort = select_top_users(tally, cfg_.top_k);
    const RankTable table = rank_cohort(cohort.members);

    json groups = json::object();
    for (SuperCommunity s : kAllSuperCommunities) {
      const GroupRanks g = group_statistics(table, s, cfg_.bootstrap, index_of(s));
      groups[std::string(super_community_name(s))] = {{"users", g.users},
                                                     {"r_rt", interval_json(g.r_rt)},
                                                     {"r_h", interval_json(g.r_h)}};
    }

    const TimeWindow period = analysis_period(cfg_, events);
    const WindowSeries ws = window_series(period, cfg_.attention_width, cfg_.attention_step);
    const auto rolling = rolling_attention(events, cohort, ws.windows, cfg_.bootstrap, threads_);

    StageRun r;
    out(Stage::kAttention, "cohort.csv", [&](std::ostream& o) { write_cohort_csv(o, table); }, r);
    out(Stage::kAttention, "trajectory.csv",
        [&](std::ostream& o) { write_trajectory_csv(o, rolling); }, r);
    std::vector<std::string> warnings = cohort.warnings;
    warnings.insert(warnings.end(), ws.warnings.begin(), ws.warnings.end());
    json summary = {{"cohort_size", cohort.members.size()},
                    {"cohort_retweets", cohort.cohort_retweets},
                    {"total_retweets", tally.total_retweets},
                    {"cohort_retweet_share", cohort.retweet_share},
                    {"unattributed_retweets", tally.unattributed_retweets},
                    {"groups", groups},
                    {"windows", rolling.size()},
                    {"warnings", warnings}};
    out(Stage::kAttention, "summary.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; }, r);
    r.metrics = summary;
    return r;
  }

  StageRun stats() {
    const auto [registry, g] = read_graph(lay_.file(Stage::kGraph, "graph.bin"));
    const DegreeDistribution dist(g);
    std::vector<std::uint64_t> samples;
    for (auto d : dist.degrees()) {
      if (d > 0) samples.push_back(d);
    }
    PowerLawOptions po;
    po.x_min = cfg_.x_min;
    po.min_tail = cfg_.min_tail;
    const PowerLawFit fit = fit_powerlaw_cutoff(samples, po);

    StageRun r;
    out(Stage::kStats, "fit.json", [&](std::ostream& o) { write_fit_json(o, fit); }, r);
    out(Stage::kStats, "degree_histogram.csv",
        [&](std::ostream& o) {
          o << "out_degree,users\n";
          for (const auto& [deg, n] : dist.histogram()) {
            if (deg > 0) o << deg << ',' << n << '\n';
          }
        },
        r);
    r.metrics = {{"samples", samples.size()},
                 {"x_min", fit.x_min},
                 {"n_tail", fit.n_tail},
                 {"alpha", fit.alpha},
                 {"lambda", fit.lambda},
                 {"lrt_p_value", fit.p_value}};
    return r;
  }

  const RunConfig& cfg_;
  const RunOptions& opts_;
  Layout lay_;
  unsigned threads_;
  json manifest_ = json::object();
};

}  // namespace

std::string_view stage_name(Stage s) { return kStageNames[si(s)]; }

std::optional<Stage> parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kNumStages; ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  return std::nullopt;
}

std::string RunConfig::section_json(Stage s) const {
  json j;
  switch (s) {
    case Stage::kSynth: j = synth ? synth_to_json(*synth) : json(nullptr); break;
    case Stage::kIngest: j = {{"window", window_json(window)}}; break;
    case Stage::kGraph: j = json::object(); break;
    case Stage::kCommunities:
      j = {{"resolution", resolution},
           {"runs", runs},
           {"seed", louvain_seed},
           {"max_passes", max_passes},
           {"tolerance", tolerance},
           {"min_community_size", min_community_size}};
      break;
    case Stage::kProfile:
      j = {{"entropy", entropy == EntropyMode::kUsers ? "users" : "tweets"},
           {"clusters", clusters ? json(*clusters) : json(nullptr)}};
      break;
    case Stage::kDynamics:
      j = {{"window", window_json(window)},
           {"width", dynamics_width},
           {"step", dynamics_step},
           {"activity", activity == ActivityMode::kOriginals ? "originals" : "all_posts"}};
      break;
    case Stage::kAttention:
      j = {{"window", window_json(window)},
           {"top_k", top_k},
           {"width", attention_width},
           {"step", attention_step},
           {"bootstrap",
            {{"resamples", bootstrap.resamples}, {"level", bootstrap.level}, {"seed", bootstrap.seed}}}};
      break;
    case Stage::kStats:
      j = {{"x_min", x_min ? json(*x_min) : json(nullptr)}, {"min_tail", min_tail}};
      break;
  }
  return json{{"format", kFormat}, {"stage", stage_name(s)}, {"section", j}}.dump();
}

RunConfig RunConfig::parse(std::string_view json_text, const fs::path& base_dir) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config is not valid JSON");
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  auto resolve = [&](const json& v) {
    fs::path p = v.get<std::string>();
    return p.is_absolute() ? p : (base_dir / p).lexically_normal();
  };

  static const std::array<std::string_view, 8> kSections = {
      "paths", "window", "louvain", "profile", "dynamics", "attention", "stats", "synth"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(kSections.begin(), kSections.end(), key) == kSections.end()) {
      throw ConfigError("config: unknown section '" + key + "'");
    }
  }

  RunConfig cfg;
  try {
    const json empty = json::object();
    const json& paths = doc.contains("paths") ? doc["paths"] : empty;
    if (paths.contains("events")) {
      const auto& ev = paths["events"];
      if (ev.is_string()) {
        cfg.events.push_back(resolve(ev));
      } else {
        for (const auto& e : ev) cfg.events.push_back(resolve(e));
      }
    }
    if (paths.contains("categories")) cfg.categories = resolve(paths["categories"]);
    if (paths.contains("gazetteer")) cfg.gazetteer = resolve(paths["gazetteer"]);
    if (paths.contains("rulebook")) cfg.rulebook = resolve(paths["rulebook"]);
    if (paths.contains("out_dir")) cfg.out_dir = resolve(paths["out_dir"]);

    if (doc.contains("window")) {
      const auto& w = doc["window"];
      if (w.contains("start")) cfg.window.start = json_time(w["start"], "window.start");
      if (w.contains("end")) cfg.window.end = json_time(w["end"], "window.end");
    }

    const json& lv = doc.contains("louvain") ? doc["louvain"] : empty;
    cfg.resolution = lv.value("resolution", cfg.resolution);
    cfg.runs = lv.value("runs", cfg.runs);
    cfg.louvain_seed = lv.value("seed", cfg.louvain_seed);
    cfg.max_passes = lv.value("max_passes", cfg.max_passes);
    cfg.tolerance = lv.value("tolerance", cfg.tolerance);
    cfg.min_community_size = lv.value("min_community_size", cfg.min_community_size);

    const json& pr = doc.contains("profile") ? doc["profile"] : empty;
    const std::string entropy = pr.value("entropy", std::string("users"));
    if (entropy == "users") {
      cfg.entropy = EntropyMode::kUsers;
    } else if (entropy == "tweets") {
      cfg.entropy = EntropyMode::kTweets;
    } else {
      throw ConfigError("config: profile.entropy must be 'users' or 'tweets'");
    }
    if (pr.contains("clusters") && !pr["clusters"].is_null()) {
      cfg.clusters = pr["clusters"].get<std::size_t>();
    }

    const json& dy = doc.contains("dynamics") ? doc["dynamics"] : empty;
    cfg.dynamics_width = days(dy, "width_days", cfg.dynamics_width);
    cfg.dynamics_step = days(dy, "step_days", cfg.dynamics_step);
    const std::string activity = dy.value("activity", std::string("originals"));
    if (activity == "originals") {
      cfg.activity = ActivityMode::kOriginals;
    } else if (activity == "all_posts") {
      cfg.activity = ActivityMode::kAllPosts;
    } else {
      throw ConfigError("config: dynamics.activity must be 'originals' or 'all_posts'");
    }

    const json& at = doc.contains("attention") ? doc["attention"] : empty;
    cfg.top_k = at.value("top_k", cfg.top_k);
    cfg.attention_width = days(at, "width_days", cfg.attention_width);
    cfg.attention_step = days(at, "step_days", cfg.attention_step);
    if (at.contains("bootstrap")) {
      const auto& b = at["bootstrap"];
      cfg.bootstrap.resamples = b.value("resamples", cfg.bootstrap.resamples);
      cfg.bootstrap.level = b.value("level", cfg.bootstrap.level);
      cfg.bootstrap.seed = b.value("seed", cfg.bootstrap.seed);
    }

    const json& st = doc.contains("stats") ? doc["stats"] : empty;
    if (st.contains("x_min") && !st["x_min"].is_null()) cfg.x_min = st["x_min"].get<std::uint64_t>();
    cfg.min_tail = st.value("min_tail", cfg.min_tail);

    if (doc.contains("synth")) cfg.synth = SynthConfig::parse(doc["synth"].dump());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig RunConfig::load(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), file.parent_path());
}

void RunConfig::override_seed(std::uint64_t seed) {
  louvain_seed = seed;
  bootstrap.seed = seed;
  if (synth) synth->seed = seed;
}

void RunConfig::validate() const {
  auto must_exist = [](const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  };
  for (const auto& e : events) must_exist(e, "event file");
  if (categories) must_exist(*categories, "category file");
  if (gazetteer) must_exist(*gazetteer, "gazetteer");
  if (rulebook) must_exist(*rulebook, "rulebook");
  if (window.start > window.end) throw ConfigError("window.start is after window.end");
  if (runs < 1) throw ConfigError("louvain.runs must be at least 1");
  try {
    LouvainConfig{resolution, louvain_seed, max_passes, tolerance}.validate();
    if (synth) synth->validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (dynamics_step <= 0 || dynamics_width <= 0 || attention_step <= 0 || attention_width <= 0) {
    throw ConfigError("window widths and steps must be positive");
  }
  if (dynamics_step > dynamics_width || attention_step > attention_width) {
    throw ConfigError("window step must not exceed the window width");
  }
  if (top_k < 1) throw ConfigError("attention.top_k must be at least 1");
  if (bootstrap.resamples < 1) throw ConfigError("bootstrap.resamples must be at least 1");
  if (!(bootstrap.level > 0.0 && bootstrap.level < 1.0)) {
    throw ConfigError("bootstrap.level must lie in (0, 1)");
  }
  if (min_tail < 1) throw ConfigError("stats.min_tail must be at least 1");
  if (clusters && *clusters < 1) throw ConfigError("profile.clusters must be at least 1");
  if (out_dir.empty()) throw ConfigError("paths.out_dir is empty");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + out_dir.string() + ": " + ec.message());
}

StageOutcome run_stage(Stage stage, const RunConfig& cfg, const RunOptions& opts) {
  return Runner(cfg, opts).run(stage);
}

std::vector<StageOutcome> run_all(const RunConfig& cfg, const RunOptions& opts) {
  std::vector<StageOutcome> out;
  Runner runner(cfg, opts);
  for (std::size_t i = 0; i < kNumStages; ++i) {
    const auto s = static_cast<Stage>(i);
    if (s == Stage::kSynth && !cfg.synth) continue;
    out.push_back(runner.run(s));
  }
  return out;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitConfig;
  if (dynamic_cast<const DependencyError*>(&e) != nullptr) return kExitDependency;
  return kExitRuntime;
}

}  // namespace attnet::cli

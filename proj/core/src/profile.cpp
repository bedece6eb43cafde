#include "attnet/profile.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "attnet/csv.hpp"

namespace attnet {
namespace {

constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "Science",         "Healthcare",          "Media",           "Government & Politics",
    "Public Services", "Political Supporter", "Internationality"};

constexpr std::array<Category, kNumFeatures - 1> kFeatureCategories = {
    Category::kScience,        Category::kHealthcare,         Category::kMedia,
    Category::kGovernmentPolitics, Category::kPublicServices, Category::kPoliticalSupporter};

std::size_t fi(Feature f) { return static_cast<std::size_t>(f); }

}  // namespace

std::string_view feature_name(Feature f) { return kFeatureNames[fi(f)]; }

std::optional<Feature> parse_feature(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
    if (kFeatureNames[i] == name) return static_cast<Feature>(i);
  }
  // Accept the ordering used in prose as well.
  if (name == "Politics & Government") return Feature::kGovernmentPolitics;
  return std::nullopt;
}

double shannon_entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

std::vector<CommunityProfile> profile_communities(const RankedCommunities& ranked,
                                                  const NodeRegistry& registry,
                                                  const RetweetGraph& graph,
                                                  const ProfileSources& sources) {
  if (ranked.node_rank.size() != registry.size() || graph.num_nodes() != registry.size()) {
    throw DomainError("partition, registry and graph must cover the same nodes");
  }
  if (sources.mode == EntropyMode::kTweets && sources.tweet_countries == nullptr) {
    throw DomainError("tweet-level entropy needs per-user located tweet counts");
  }
  const std::size_t count = ranked.labeled.size();
  std::vector<std::array<std::uint64_t, kNumCategories>> cat_counts(count);
  std::vector<std::map<std::string, std::uint64_t>> countries(count);
  std::vector<std::uint64_t> located(count, 0);
  std::vector<std::uint64_t> strength(count, 0);
  for (auto& c : cat_counts) c.fill(0);

  for (NodeId u = 0; u < registry.size(); ++u) {
    const auto& rank = ranked.node_rank[u];
    if (!rank) continue;
    const UserId& id = registry.id(u);
    Category cat = Category::kOther;
    if (sources.categories != nullptr) {
      if (auto it = sources.categories->find(id); it != sources.categories->end()) cat = it->second;
    }
    ++cat_counts[*rank][static_cast<std::size_t>(cat)];
    strength[*rank] += graph.out_strength(u);

    if (sources.mode == EntropyMode::kUsers) {
      if (sources.user_countries == nullptr) continue;
      auto it = sources.user_countries->find(id);
      if (it != sources.user_countries->end() && it->second) {
        ++countries[*rank][*it->second];
        ++located[*rank];
      }
    } else {
      auto it = sources.tweet_countries->find(id);
      if (it == sources.tweet_countries->end() || it->second.empty()) continue;
      ++located[*rank];
      for (const auto& [country, n] : it->second) countries[*rank][country] += n;
    }
  }

  std::vector<CommunityProfile> out;
  out.reserve(count);
  const double total_weight = static_cast<double>(graph.total_weight());
  for (std::size_t r = 0; r < count; ++r) {
    const auto& lc = ranked.labeled[r];
    CommunityProfile p;
    p.label = lc.label;
    p.community = lc.community;
    p.size = lc.size;
    for (std::size_t c = 0; c < kNumCategories; ++c) {
      p.category_share[c] = static_cast<double>(cat_counts[r][c]) / static_cast<double>(lc.size);
    }
    p.retweet_share = total_weight > 0 ? static_cast<double>(strength[r]) / total_weight : 0.0;
    p.located_users = located[r];
    p.distinct_countries = countries[r].size();
    if (!countries[r].empty()) {
      std::vector<std::uint64_t> counts;
      for (const auto& [country, n] : countries[r]) counts.push_back(n);
      p.internationality = shannon_entropy(counts);
    }
    out.push_back(std::move(p));
  }
  return out;
}

FeatureRow feature_row(const CommunityProfile& p) {
  FeatureRow row{};
  for (std::size_t i = 0; i < kFeatureCategories.size(); ++i) {
    row[i] = p.category_share[static_cast<std::size_t>(kFeatureCategories[i])];
  }
  row[fi(Feature::kInternationality)] = p.internationality.value_or(0.0);
  return row;
}

FeatureMatrix standardize(std::span<const CommunityProfile> profiles) {
  if (profiles.size() < 2) throw DomainError("standardization needs at least 2 communities");
  std::vector<std::string> labels;
  std::vector<FeatureRow> raw;
  std::vector<bool> imputed;
  double sum = 0.0;
  std::size_t known = 0;
  for (const auto& p : profiles) {
    labels.push_back(p.label);
    raw.push_back(feature_row(p));
    imputed.push_back(!p.internationality.has_value());
    if (p.internationality) {
      sum += *p.internationality;
      ++known;
    }
  }
  const double mean = known > 0 ? sum / static_cast<double>(known) : 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (imputed[i]) raw[i][fi(Feature::kInternationality)] = mean;
  }
  FeatureMatrix fm = standardize_rows(std::move(labels), std::move(raw), std::move(imputed));
  const auto missing = static_cast<std::size_t>(std::count(fm.imputed.begin(), fm.imputed.end(), true));
  if (missing > 0) {
    fm.warnings.push_back(std::to_string(missing) +
                          " communities have no located users; internationality imputed with "
                          "the column mean");
  }
  return fm;
}

FeatureMatrix standardize_rows(std::vector<std::string> labels, std::vector<FeatureRow> raw,
                               std::vector<bool> imputed) {
  if (raw.size() < 2) throw DomainError("standardization needs at least 2 rows");
  FeatureMatrix fm;
  fm.labels = std::move(labels);
  fm.raw = std::move(raw);
  fm.imputed = imputed.empty() ? std::vector<bool>(fm.raw.size(), false) : std::move(imputed);
  fm.z.assign(fm.raw.size(), FeatureRow{});
  const double n = static_cast<double>(fm.raw.size());
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    double mean = 0.0;
    for (const auto& row : fm.raw) mean += row[c];
    mean /= n;
    double var = 0.0;
    for (const auto& row : fm.raw) var += (row[c] - mean) * (row[c] - mean);
    const double sd = std::sqrt(var / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      fm.warnings.push_back("feature '" + std::string(kFeatureNames[c]) +
                            "' is constant across communities; Z-scores set to 0");
      continue;
    }
    for (std::size_t r = 0; r < fm.raw.size(); ++r) fm.z[r][c] = (fm.raw[r][c] - mean) / sd;
  }
  return fm;
}

bool Condition::holds(const FeatureRow& z) const {
  const double v = z[fi(feature)];
  return op == Op::kGreater ? v > threshold : v <= threshold;
}

bool NamingRule::matches(const FeatureRow& z) const {
  return std::any_of(any_of.begin(), any_of.end(), [&](const Conjunction& conj) {
    return std::all_of(conj.begin(), conj.end(), [&](const Condition& c) { return c.holds(z); });
  });
}

Rulebook Rulebook::defaults() {
  using Op = Condition::Op;
  auto gt = [](Feature f) { return Condition{f, Op::kGreater, 0.0}; };
  auto le = [](Feature f) { return Condition{f, Op::kAtMost, 0.0}; };
  Rulebook rb;
  rb.rules.push_back({SuperCommunity::kInternationalSciHealth,
                      {{gt(Feature::kScience), gt(Feature::kInternationality)},
                       {gt(Feature::kHealthcare), gt(Feature::kInternationality)}}});
  NamingRule elite{SuperCommunity::kNationalElite, {}};
  for (Feature f : {Feature::kHealthcare, Feature::kMedia, Feature::kGovernmentPolitics,
                    Feature::kPublicServices}) {
    elite.any_of.push_back(
        {gt(f), le(Feature::kInternationality), le(Feature::kPoliticalSupporter)});
  }
  rb.rules.push_back(std::move(elite));
  rb.rules.push_back({SuperCommunity::kPolitical,
                      {{gt(Feature::kPoliticalSupporter)},
                       {gt(Feature::kGovernmentPolitics), le(Feature::kHealthcare),
                        le(Feature::kMedia), le(Feature::kPublicServices)}}});
  rb.rules.push_back({SuperCommunity::kOther,
                      {{le(Feature::kScience), le(Feature::kHealthcare), le(Feature::kMedia),
                        le(Feature::kGovernmentPolitics), le(Feature::kPublicServices),
                        le(Feature::kPoliticalSupporter)}}});
  rb.precedence = {SuperCommunity::kInternationalSciHealth, SuperCommunity::kNationalElite,
                   SuperCommunity::kPolitical, SuperCommunity::kOther};
  return rb;
}

namespace {

using json = nlohmann::json;

SuperCommunity super_from_json(const json& j) {
  if (!j.is_string()) throw ParseError("rulebook: super-community name must be a string");
  auto s = parse_super_community(j.get<std::string>());
  if (!s) throw ParseError("rulebook: unknown super-community '" + j.get<std::string>() + "'");
  return *s;
}

Feature feature_from_json(const json& j) {
  if (!j.is_string()) throw ParseError("rulebook: feature must be a string");
  auto f = parse_feature(j.get<std::string>());
  if (!f) throw ParseError("rulebook: unknown feature '" + j.get<std::string>() + "'");
  return *f;
}

}  // namespace

Rulebook Rulebook::load(std::istream& in) {
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ParseError("rulebook is not a JSON object");
  Rulebook rb = defaults();
  try {
    if (doc.contains("rules")) {
      rb.rules.clear();
      for (const auto& r : doc.at("rules")) {
        NamingRule rule{super_from_json(r.at("name")), {}};
        for (const auto& conj : r.at("any_of")) {
          Conjunction c;
          for (const auto& cond : conj) {
            Condition k{feature_from_json(cond.at("feature")), Condition::Op::kGreater,
                        cond.value("z", 0.0)};
            const std::string op = cond.value("op", ">");
            if (op == ">") {
              k.op = Condition::Op::kGreater;
            } else if (op == "<=") {
              k.op = Condition::Op::kAtMost;
            } else {
              throw ParseError("rulebook: unsupported operator '" + op + "'");
            }
            c.push_back(k);
          }
          rule.any_of.push_back(std::move(c));
        }
        rb.rules.push_back(std::move(rule));
      }
    }
    if (doc.contains("precedence")) {
      rb.precedence.clear();
      for (const auto& p : doc.at("precedence")) rb.precedence.push_back(super_from_json(p));
    }
    rb.strict = doc.value("strict", rb.strict);
    if (doc.contains("fallback")) {
      rb.fallback = doc.at("fallback").is_null()
                        ? std::nullopt
                        : std::optional<SuperCommunity>(super_from_json(doc.at("fallback")));
    }
    if (doc.contains("split")) {
      const auto& s = doc.at("split");
      rb.split.enabled = s.value("enabled", true);
      if (s.contains("categories")) {
        rb.split.categories.clear();
        for (const auto& f : s.at("categories")) rb.split.categories.push_back(feature_from_json(f));
      }
      rb.split.require_internationality = s.value("require_internationality", true);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("rulebook: ") + e.what());
  }
  return rb;
}

SuperCommunityAssignment assign_super_communities(const FeatureMatrix& fm, const Dendrogram& d,
                                                  std::size_t k, const Rulebook& rulebook) {
  if (d.leaves != fm.rows()) throw DomainError("dendrogram and feature matrix sizes differ");
  const auto flat = cut_dendrogram(d, k);

  SuperCommunityAssignment out;
  std::vector<NamedCluster> clusters(k);
  for (std::size_t r = 0; r < flat.size(); ++r) clusters[flat[r]].members.push_back(r);

  if (rulebook.split.enabled) {
    const std::size_t base = clusters.size();
    for (std::size_t c = 0; c < base; ++c) {
      std::vector<std::size_t> keep, leave;
      for (std::size_t r : clusters[c].members) {
        const auto& z = fm.z[r];
        const bool designated = std::any_of(
            rulebook.split.categories.begin(), rulebook.split.categories.end(),
            [&](Feature f) { return z[fi(f)] > 0.0; });
        const bool intl =
            !rulebook.split.require_internationality || z[fi(Feature::kInternationality)] > 0.0;
        (designated && intl ? leave : keep).push_back(r);
      }
      if (!leave.empty() && !keep.empty()) {
        clusters[c].members = std::move(keep);
        NamedCluster split;
        split.members = std::move(leave);
        split.from_split = true;
        clusters.push_back(std::move(split));
      }
    }
  }

  out.by_row.assign(fm.rows(), SuperCommunity::kOther);
  for (auto& cl : clusters) {
    cl.mean_z.fill(0.0);
    for (std::size_t r : cl.members) {
      for (std::size_t f = 0; f < kNumFeatures; ++f) cl.mean_z[f] += fm.z[r][f];
    }
    for (auto& v : cl.mean_z) v /= static_cast<double>(cl.members.size());
    for (const auto& rule : rulebook.rules) {
      if (rule.matches(cl.mean_z) &&
          std::find(cl.matched.begin(), cl.matched.end(), rule.name) == cl.matched.end()) {
        cl.matched.push_back(rule.name);
      }
    }

    std::string member_labels;
    for (std::size_t r : cl.members) member_labels += (member_labels.empty() ? "" : ",") + fm.labels[r];
    if (cl.matched.empty()) {
      if (!rulebook.fallback) {
        throw DomainError("no naming rule matches cluster [" + member_labels + "]");
      }
      cl.name = *rulebook.fallback;
      out.warnings.push_back("cluster [" + member_labels + "] matched no rule; named " +
                             std::string(super_community_name(cl.name)));
    } else if (cl.matched.size() == 1) {
      cl.name = cl.matched.front();
    } else {
      std::string names;
      for (auto s : cl.matched) names += (names.empty() ? "" : ", ") + std::string(super_community_name(s));
      if (rulebook.strict || rulebook.precedence.empty()) {
        throw DomainError("ambiguous naming for cluster [" + member_labels + "]: matches " + names);
      }
      auto pick = std::find_if(rulebook.precedence.begin(), rulebook.precedence.end(), [&](auto s) {
        return std::find(cl.matched.begin(), cl.matched.end(), s) != cl.matched.end();
      });
      if (pick == rulebook.precedence.end()) {
        throw DomainError("ambiguous naming for cluster [" + member_labels + "]: matches " + names +
                          " and precedence does not decide");
      }
      cl.name = *pick;
      out.warnings.push_back("cluster [" + member_labels + "] matches " + names +
                             "; precedence picks " + std::string(super_community_name(cl.name)));
    }
    for (std::size_t r : cl.members) {
      out.by_row[r] = cl.name;
      out.by_label[fm.labels[r]] = cl.name;
    }
  }
  out.clusters = std::move(clusters);
  return out;
}

void write_profiles_csv(std::ostream& out, std::span<const CommunityProfile> profiles) {
  out << "label,community,size";
  for (auto c : kAllCategories) out << ',' << csv::escape(category_label(c));
  out << ",retweet_share,internationality,located_users,distinct_countries\n";
  for (const auto& p : profiles) {
    out << p.label << ',' << p.community << ',' << p.size;
    for (double s : p.category_share) out << ',' << csv::format_double(s);
    out << ',' << csv::format_double(p.retweet_share) << ','
        << (p.internationality ? csv::format_double(*p.internationality) : std::string())
        << ',' << p.located_users << ',' << p.distinct_countries << '\n';
  }
}

void write_features_csv(std::ostream& out, const FeatureMatrix& fm) {
  out << "label";
  for (auto name : kFeatureNames) out << ',' << csv::escape(name);
  for (auto name : kFeatureNames) out << ',' << csv::escape("z:" + std::string(name));
  out << ",imputed\n";
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    out << fm.labels[r];
    for (double v : fm.raw[r]) out << ',' << csv::format_double(v);
    for (double v : fm.z[r]) out << ',' << csv::format_double(v);
    out << ',' << (fm.imputed[r] ? 1 : 0) << '\n';
  }
}

void write_dendrogram_json(std::ostream& out, const Dendrogram& d,
                           std::span<const std::string> labels, const KneeResult* knee) {
  json doc;
  doc["leaves"] = json(std::vector<std::string>(labels.begin(), labels.end()));
  doc["merges"] = json::array();
  for (const auto& m : d.merges) {
    doc["merges"].push_back({{"left", m.left}, {"right", m.right}, {"height", m.height},
                             {"size", m.size}});
  }
  if (knee != nullptr) {
    doc["knee"] = {{"k", knee->k},
                   {"clear", knee->clear_knee},
                   {"distance", knee->distance},
                   {"second_difference", knee->second_difference}};
  }
  out << doc.dump(2) << '\n';
}

void write_super_communities_csv(std::ostream& out, const FeatureMatrix& fm,
                                 const SuperCommunityAssignment& a) {
  out << "label,super_community\n";
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    out << fm.labels[r] << ',' << super_community_name(a.by_row[r]) << '\n';
  }
}

std::map<std::string, SuperCommunity> read_super_communities_csv(std::istream& in) {
  std::map<std::string, SuperCommunity> out;
  std::string line;
  if (!csv::read_line(in, line) || line != "label,super_community") {
    throw ParseError("super-community file must start with 'label,super_community'");
  }
  while (csv::read_line(in, line)) {
    if (line.empty()) continue;
    auto f = csv::split(line);
    if (f.size() != 2) throw ParseError("super-community file: expected 2 fields");
    auto s = parse_super_community(f[1]);
    if (!s) throw ParseError("super-community file: unknown name '" + f[1] + "'");
    out[f[0]] = *s;
  }
  return out;
}

}  // namespace attnet

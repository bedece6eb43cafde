// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `attnet_acceptance N` runs criterion N alone.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "attnet/attention.hpp"
#include "attnet/community.hpp"
#include "attnet/dynamics.hpp"
#include "attnet/graph.hpp"
#include "attnet/ingest.hpp"
#include "attnet/profile.hpp"
#include "attnet/rng.hpp"
#include "attnet/stats.hpp"
#include "attnet/synth.hpp"
#include "powerlaw_sampler.hpp"
#include "profile_fixture.hpp"

namespace fs = std::filesystem;
using namespace attnet;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure messages of a criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) msgs_ += (msgs_.empty() ? "" : "; ") + what;
  }
  Outcome done(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, summary + " | " + std::to_string(failures_) + " failure(s): " + msgs_};
  }

 private:
  std::size_t failures_ = 0;
  std::string msgs_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string sci(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << v;
  return s.str();
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

// ---- 1 --------------------------------------------------------------------

std::uint64_t h_oracle(const std::vector<std::uint64_t>& counts) {
  for (std::uint64_t h = counts.size(); h > 0; --h) {
    std::uint64_t at_least = 0;
    for (auto c : counts) at_least += c >= h;
    if (at_least >= h) return h;
  }
  return 0;
}

Outcome hindex_oracle() {
  Check c;
  Rng rng(101);
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t nontrivial = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t size = rng.below(201);
    // Alternate between the full count range and ranges near the size so
    // that h is not simply the multiset size.
    const std::uint64_t hi = t % 2 == 0 ? 1000000 : 2 * size + 1;
    std::vector<std::uint64_t> counts(size);
    for (auto& x : counts) x = rng.below(hi + 1);
    const auto want = h_oracle(counts);
    nontrivial += want != size;
    c.expect(h_index(counts) == want, "case " + std::to_string(t));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + fmt(secs) + " s");
  return c.done("10000 multisets (" + std::to_string(nontrivial) + " with h < size), " + fmt(secs) + " s");
}

// ---- 2 --------------------------------------------------------------------

Outcome attention_identities() {
  Check c;
  Rng rng(202);
  std::size_t rows = 0, bitwise = 0;
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    MixingMatrix m;
    for (auto& r : m.w)
      for (auto& v : r) v = rng.bernoulli(0.25) ? 0 : rng.below(1000000);
    for (std::size_t i = 0; i < kNumSuperCommunities; ++i) {
      m.total += m.row_sum(i);
      m.n[i] = 1 + rng.below(20000);
    }
    const auto res = attention_metrics(m, {});
    double global = 0;
    for (std::size_t i = 0; i < kNumSuperCommunities; ++i) {
      const auto rs = m.row_sum(i);
      const double n = static_cast<double>(m.n[i]);
      if (!res[i].average_attention) {
        c.expect(false, "missing A_u");
        continue;
      }
      const double a = *res[i].average_attention;
      c.expect(a == static_cast<double>(rs) / n, "A_u not the correctly rounded quotient");
      c.expect(std::llround(a * n) == static_cast<long long>(rs), "A_u*N does not recover the row sum");
      bitwise += a * n == static_cast<double>(rs);
      if (rs > 0) {
        ++rows;
        const double s = *res[i].a_ext + *res[i].a_int;
        worst = std::max(worst, std::abs(s - 1.0));
        c.expect(std::abs(s - 1.0) <= 1e-12, "a_ext + a_int = " + fmt(s, 17));
      } else {
        c.expect(!res[i].a_ext && !res[i].a_int, "zero row has shares");
      }
      if (m.total > 0) global += *res[i].a_ext_global + *res[i].a_int_global;
    }
    if (m.total > 0) c.expect(std::abs(global - 1.0) <= 1e-12, "global shares sum " + fmt(global, 17));
  }
  return c.done(std::to_string(rows) + " nonzero rows, max |a_ext+a_int-1| = " + sci(worst) +
                ", A_u is the correctly rounded row sum / N and A_u*N rounds back to the row sum in all 4000 rows (" +
                std::to_string(bitwise) + " also bit-equal in binary64)");
}

// ---- 3 --------------------------------------------------------------------

Outcome modularity_checks() {
  Check c;
  std::vector<SymmetricGraph::Edge> e;
  for (NodeId base : {0u, 3u}) {
    e.push_back({base, base + 1, 1.0});
    e.push_back({base + 1, base + 2, 1.0});
    e.push_back({base, base + 2, 1.0});
  }
  const auto g = SymmetricGraph::from_edges(6, e);
  const std::vector<CommunityId> natural{0, 0, 0, 1, 1, 1}, single(6, 0);
  const double q = modularity(g, natural), q1 = modularity(g, single);
  c.expect(std::abs(q - 0.5) <= 1e-12, "two triangles Q = " + fmt(q, 15));
  c.expect(std::abs(q1) <= 1e-12, "one community Q = " + fmt(q1, 15));

  double worst = 0;
  std::size_t passes = 0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    Rng rng(3000 + t);
    std::vector<SymmetricGraph::Edge> edges;
    for (NodeId u = 0; u < 200; ++u) {
      for (NodeId v = u + 1; v < 200; ++v) {
        const bool near = u / 40 == v / 40;
        if (rng.bernoulli(near ? 0.12 : 0.01)) edges.push_back({u, v, 1.0 + static_cast<double>(rng.below(5))});
      }
    }
    const auto rg = SymmetricGraph::from_edges(200, std::move(edges));
    LouvainConfig cfg;
    cfg.seed = t;
    LouvainTrace trace;
    const auto p = louvain(rg, cfg, &trace);
    for (std::size_t k = 0; k < trace.incremental_modularity.size(); ++k) {
      const double d = std::abs(trace.incremental_modularity[k] - trace.recomputed_modularity[k]);
      worst = std::max(worst, d);
      c.expect(d <= 1e-9, "graph " + std::to_string(t) + " pass " + std::to_string(k));
      ++passes;
    }
    c.expect(std::abs(p.modularity - modularity(rg, p.assignment)) <= 1e-9, "final Q mismatch");
  }
  return c.done("Q = " + fmt(q, 15) + " and " + fmt(q1, 15) + "; " + std::to_string(passes) +
                " Louvain passes on 50 graphs, max |dQ| = " + sci(worst));
}

// ---- 4 --------------------------------------------------------------------

Outcome planted_recovery() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::size_t> sizes(5, 200);
  const auto pg = planted_partition_graph(sizes, 0.1, 0.001, 2024);
  LouvainConfig cfg;
  cfg.seed = 1;
  const auto cp = consensus(pg.graph, cfg, 10);
  const double nmi = normalized_mutual_information(cp.assignment, pg.truth);
  const double secs = seconds_since(t0);
  c.expect(nmi >= 0.95, "NMI " + fmt(nmi, 4));
  c.expect(secs < 10.0, "runtime " + fmt(secs) + " s");
  return c.done("NMI = " + fmt(nmi, 4) + ", " + std::to_string(cp.sizes.size()) + " communities, " +
                fmt(secs) + " s");
}

// ---- 5 --------------------------------------------------------------------

Outcome consensus_determinism() {
  Check c;
  const std::vector<std::size_t> sizes{80, 120, 60, 140};
  const auto pg = planted_partition_graph(sizes, 0.08, 0.01, 55);
  LouvainConfig cfg;
  cfg.seed = 9;
  const auto a = consensus(pg.graph, cfg, 12, 1);
  const auto b = consensus(pg.graph, cfg, 12, 1);
  const auto d = consensus(pg.graph, cfg, 12, 4);
  c.expect(a == b, "repeat run differs");
  c.expect(a == d, "thread count changes the result");

  Rng rng(505);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 10 + rng.below(500);
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(n, 30));
    std::vector<CommunityId> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<CommunityId>(i < k ? i : rng.below(k));
    rng.shuffle(std::span<CommunityId>(raw));
    Partition ref;
    ref.assignment = raw;
    ref.sizes.assign(k, 0);
    for (auto x : raw) ++ref.sizes[x];
    std::vector<CommunityId> perm(k);
    std::iota(perm.begin(), perm.end(), 0u);
    rng.shuffle(std::span<CommunityId>(perm));
    Partition relabeled;
    relabeled.sizes.assign(k, 0);
    for (auto x : raw) {
      relabeled.assignment.push_back(perm[x]);
      ++relabeled.sizes[perm[x]];
    }
    const auto map = align_labels(relabeled, ref);
    bool identity = map.size() == k;
    for (std::size_t x = 0; identity && x < k; ++x) identity = map[perm[x]] && *map[perm[x]] == x;
    c.expect(identity, "case " + std::to_string(t) + " not recovered");
  }
  return c.done("3 consensus runs bit-identical (threads 1 and 4); 100/100 relabelings recovered");
}

// ---- 6 --------------------------------------------------------------------

Outcome powerlaw_recovery() {
  Check c;
  std::string summary;
  {
    test::PowerLawSampler s(2.5, 0.0, 10);
    Rng rng(606);
    const auto x = s.draw(100000, rng);
    PowerLawOptions o;
    o.x_min = 10;
    const auto t0 = std::chrono::steady_clock::now();
    const auto fit = fit_powerlaw_cutoff(x, o);
    const double secs = seconds_since(t0);
    c.expect(fit.alpha >= 2.4 && fit.alpha <= 2.6, "pure alpha " + fmt(fit.alpha, 4));
    c.expect(secs < 30.0, "pure fit " + fmt(secs) + " s");
    summary += "pure: alpha = " + fmt(fit.alpha, 4) + " (" + fmt(secs, 2) + " s)";
  }
  {
    test::PowerLawSampler s(2.0, 0.01, 1);
    Rng rng(607);
    const auto x = s.draw(100000, rng);
    PowerLawOptions o;
    o.x_min = 1;
    const auto t0 = std::chrono::steady_clock::now();
    const auto fit = fit_powerlaw_cutoff(x, o);
    const double secs = seconds_since(t0);
    c.expect(fit.alpha >= 1.9 && fit.alpha <= 2.1, "cutoff alpha " + fmt(fit.alpha, 4));
    c.expect(fit.lambda >= 0.007 && fit.lambda <= 0.013, "cutoff lambda " + fmt(fit.lambda, 5));
    c.expect(secs < 30.0, "cutoff fit " + fmt(secs) + " s");
    summary += "; cutoff: alpha = " + fmt(fit.alpha, 4) + ", lambda = " + fmt(fit.lambda, 5) + " (" +
               fmt(secs, 2) + " s)";
  }
  return c.done(summary);
}

// ---- 7 --------------------------------------------------------------------

Outcome entropy_bounds() {
  Check c;
  Rng rng(707);
  for (std::uint64_t m : {1u, 5u, 1000u}) {
    const std::vector<std::uint64_t> one{m};
    c.expect(shannon_entropy(one) == 0.0, "single country");
  }
  for (std::size_t k = 1; k <= 60; ++k) {
    const std::vector<std::uint64_t> uniform(k, 1 + rng.below(10000));
    const double h = shannon_entropy(uniform);
    c.expect(std::abs(h - std::log(static_cast<double>(k))) <= 1e-12, "uniform k=" + std::to_string(k));
  }
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::uint64_t> counts(1 + rng.below(80));
    std::size_t k = 0;
    for (auto& x : counts) {
      x = rng.bernoulli(0.2) ? 0 : 1 + rng.below(rng.bernoulli(0.5) ? 3 : 100000);
      k += x > 0;
    }
    const double h = shannon_entropy(counts);
    const double hi = k > 0 ? std::log(static_cast<double>(k)) : 0.0;
    c.expect(h >= 0.0 && h <= hi + 1e-12, "random composition " + std::to_string(t));
  }
  return c.done("single-country H = 0, uniform H = ln k for k = 1..60, 1000 random compositions within [0, ln k]");
}

// ---- 8 --------------------------------------------------------------------

Outcome ward_knee() {
  Check c;
  Rng rng(808);
  double min_ratio = 1e300;
  for (int t = 0; t < 25; ++t) {
    // Three centers far apart, then 15 points with bounded jitter.
    std::vector<std::vector<double>> centers(3, std::vector<double>(7));
    for (std::size_t k = 0; k < 3; ++k)
      for (auto& v : centers[k]) v = 10.0 * rng.normal();
    std::vector<std::uint32_t> truth(15);
    for (std::size_t i = 0; i < 15; ++i) truth[i] = static_cast<std::uint32_t>(i % 3);
    rng.shuffle(std::span<std::uint32_t>(truth));
    std::vector<std::vector<double>> pts;
    double spread = 0;
    for (auto g : truth) {
      std::vector<double> p = centers[g];
      double r2 = 0;
      for (auto& v : p) {
        const double d = 0.3 * (rng.uniform() - 0.5);
        v += d;
        r2 += d * d;
      }
      spread = std::max(spread, std::sqrt(r2));
      pts.push_back(std::move(p));
    }
    double sep = 1e300;
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = a + 1; b < 3; ++b) {
        double d2 = 0;
        for (std::size_t f = 0; f < 7; ++f) d2 += std::pow(centers[a][f] - centers[b][f], 2);
        sep = std::min(sep, std::sqrt(d2));
      }
    }
    if (sep < 10 * spread) {
      --t;  // redraw: the criterion requires 10x separation
      continue;
    }
    min_ratio = std::min(min_ratio, sep / spread);
    const auto d = ward_cluster(pts);
    const auto knee = knee_point(d);
    c.expect(knee.k == 3, "trial " + std::to_string(t) + " knee " + std::to_string(knee.k));
    const auto cut = cut_dendrogram(d, 3);
    // Exact recovery: the cut and the truth induce the same pairs.
    bool same = true;
    for (std::size_t i = 0; i < 15; ++i)
      for (std::size_t j = 0; j < 15; ++j) same = same && ((cut[i] == cut[j]) == (truth[i] == truth[j]));
    c.expect(same, "trial " + std::to_string(t) + " cut differs");
  }
  return c.done("25 planted 15x7 matrices (separation/spread >= " + fmt(min_ratio, 1) +
                "): knee = 3 and exact k = 3 cut every time");
}

// ---- 9 --------------------------------------------------------------------

Outcome rulebook_fixture() {
  Check c;
  const auto fx = test::grouping_fixture();
  const auto fm = standardize_rows(fx.labels, fx.raw);
  const auto d = ward_cluster(fm);
  const auto knee = knee_point(d);
  c.expect(knee.k == 3, "knee " + std::to_string(knee.k));
  const auto a = assign_super_communities(fm, d, 3, Rulebook::defaults());
  std::string pattern;
  for (std::size_t r = 0; r < fx.labels.size(); ++r) {
    const auto got = a.by_label.at(fx.labels[r]);
    c.expect(got == fx.truth[r], fx.labels[r] + " named " + std::string(super_community_name(got)));
  }
  // Independent evaluation on each named group's mean Z.
  std::map<SuperCommunity, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < fx.labels.size(); ++r) groups[a.by_row[r]].push_back(r);
  for (const auto& [name, rows] : groups) {
    FeatureRow mean{};
    for (auto r : rows)
      for (std::size_t f = 0; f < kNumFeatures; ++f) mean[f] += fm.z[r][f] / static_cast<double>(rows.size());
    c.expect(test::evaluate_rules(mean) == name, "evaluator disagrees on " + std::string(super_community_name(name)));
    pattern += std::string(pattern.empty() ? "" : " ") + std::string(super_community_name(name)) + "=[";
    for (auto r : rows) pattern += fx.labels[r];
    pattern += "]";
  }
  c.expect(a.by_label.at("B") == SuperCommunity::kInternationalSciHealth &&
               a.by_label.at("G") == SuperCommunity::kInternationalSciHealth,
           "B and G not InternationalSciHealth");
  return c.done(pattern);
}

// ---- 10 -------------------------------------------------------------------

Outcome mixing_additivity() {
  Check c;
  const auto cfg = planted_config(3000, 200000, 1010);
  const auto data = generate(cfg);
  const auto map = super_map(data, cfg);
  Rng rng(1011);
  const auto len = static_cast<std::uint64_t>(cfg.period.length());
  for (int t = 0; t < 100; ++t) {
    Timestamp a = cfg.period.start + static_cast<Timestamp>(rng.below(len));
    Timestamp b = cfg.period.start + static_cast<Timestamp>(rng.below(len));
    if (a > b) std::swap(a, b);
    if (a == b) ++b;
    const Timestamp cut = a + static_cast<Timestamp>(rng.below(static_cast<std::uint64_t>(b - a + 1)));
    const auto whole = mixing_matrix(data.events, {a, b}, map);
    const auto left = mixing_matrix(data.events, {a, cut}, map);
    const auto right = mixing_matrix(data.events, {cut, b}, map);
    bool exact = whole.total == left.total + right.total;
    for (std::size_t i = 0; i < kNumSuperCommunities; ++i)
      for (std::size_t j = 0; j < kNumSuperCommunities; ++j)
        exact = exact && whole.w[i][j] == left.w[i][j] + right.w[i][j];
    c.expect(exact, "split " + std::to_string(t));
  }
  const auto full = mixing_matrix(data.events, cfg.period, map);
  c.expect(full.total == cfg.retweets, "full-period total");
  return c.done("100 random splits of a " + std::to_string(cfg.retweets) + "-retweet synthetic stream sum exactly");
}

// ---- 11 -------------------------------------------------------------------

std::map<std::string, std::string> read_column(const fs::path& file, std::size_t key_col, std::size_t val_col) {
  std::map<std::string, std::string> out;
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() > std::max(key_col, val_col)) out[cells[key_col]] = cells[val_col];
  }
  return out;
}

Outcome end_to_end() {
  Check c;
  const fs::path dir = fs::temp_directory_path() / ("attnet_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"paths": {"out_dir": "run"}, "synth": {"planted": {"users": 100000, "retweets": 1000000, "seed": 11}}})";
  }
  const std::string config = (dir / "config.json").string();
  const std::string log = (dir / "stdout.log").string();

  const auto t0 = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid == 0) {
    if (std::freopen(log.c_str(), "w", stdout) == nullptr) std::_Exit(126);
    ::execl(ATTNET_BIN, ATTNET_BIN, "--config", config.c_str(), "all", static_cast<char*>(nullptr));
    std::_Exit(127);
  }
  int status = 0;
  struct rusage usage {};
  ::wait4(pid, &status, 0, &usage);
  const double secs = seconds_since(t0);
  const double rss_mb = static_cast<double>(usage.ru_maxrss) / 1024.0;
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  c.expect(code == 0, "exit code " + std::to_string(code));
  c.expect(secs < 60.0, "wall time " + fmt(secs, 1) + " s");
  c.expect(rss_mb < 2048.0, "peak RSS " + fmt(rss_mb, 0) + " MB");

  double nmi = 0;
  if (code == 0) {
    const auto labels = read_column(dir / "run" / "communities" / "partition.csv", 0, 1);
    const auto blocks = read_column(dir / "run" / "synth" / "ground_truth.csv", 0, 1);
    std::map<std::string, std::uint32_t> lid, bid;
    std::vector<std::uint32_t> a, b;
    for (const auto& [user, label] : labels) {
      auto it = blocks.find(user);
      if (it == blocks.end()) continue;
      a.push_back(lid.emplace(label, static_cast<std::uint32_t>(lid.size())).first->second);
      b.push_back(bid.emplace(it->second, static_cast<std::uint32_t>(bid.size())).first->second);
    }
    c.expect(a.size() == labels.size() && !a.empty(), "partition users missing from ground truth");
    if (!a.empty()) nmi = normalized_mutual_information(a, b);
    c.expect(nmi >= 0.9, "NMI " + fmt(nmi, 4));
  }
  fs::remove_all(dir);
  return c.done("attnet all on 1e6 retweets / 1e5 users: " + fmt(secs, 1) + " s, peak RSS " + fmt(rss_mb, 0) +
                " MB, NMI = " + fmt(nmi, 4) + " (" + std::to_string(::sysconf(_SC_NPROCESSORS_ONLN)) +
                " core(s))");
}

// ---- 12 -------------------------------------------------------------------

std::uint64_t count_lines(const std::string& text) {
  std::uint64_t n = static_cast<std::uint64_t>(std::count(text.begin(), text.end(), '\n'));
  if (!text.empty() && text.back() != '\n') ++n;
  return n;
}

Outcome ingest_accounting() {
  Check c;
  std::vector<std::pair<std::string, std::string>> fixtures;
  for (const auto& e : fs::directory_iterator(ATTNET_FIXTURE_DIR)) {
    if (e.path().extension() != ".jsonl") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    fixtures.emplace_back(e.path().filename().string(), s.str());
  }
  std::sort(fixtures.begin(), fixtures.end());
  {
    // A synthetic stream plus a noisy copy with duplicates and junk.
    const auto data = generate(planted_config(500, 20000, 1212));
    std::ostringstream clean;
    write_events(clean, data.events);
    fixtures.emplace_back("synth.jsonl", clean.str());
    Rng rng(1213);
    std::istringstream lines(clean.str());
    std::string l, noisy;
    while (std::getline(lines, l)) {
      const auto r = rng.below(20);
      if (r == 0) noisy += l.substr(0, l.size() / 2) + "\n";
      else if (r == 1) noisy += l + "\n" + l + "\n";
      else if (r == 2) noisy += "\n";
      else noisy += l + "\n";
    }
    fixtures.emplace_back("synth_noisy.jsonl", noisy);
  }
  const ObservationWindow feb{*parse_timestamp("2020-02-01"), *parse_timestamp("2020-02-29T23:59:59Z")};
  const ObservationWindow all{};
  std::string summary;
  for (const auto& [name, text] : fixtures) {
    for (const auto* window : {&feb, &all}) {
      std::istringstream in(text);
      const auto r = parse_events(in, *window);
      const auto lines = count_lines(text);
      const auto& rep = r.report;
      const bool ok = r.events.size() + rep.malformed + rep.out_of_window + rep.duplicates == lines &&
                      rep.lines == lines && rep.events == r.events.size();
      c.expect(ok, name + ": " + std::to_string(r.events.size()) + "+" + std::to_string(rep.malformed) + "+" +
                       std::to_string(rep.out_of_window) + "+" + std::to_string(rep.duplicates) +
                       " != " + std::to_string(lines));
    }
    summary += (summary.empty() ? "" : ", ") + name;
  }
  return c.done(std::to_string(fixtures.size()) + " fixtures x 2 windows balance exactly (" + summary + ")");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"h-index oracle equivalence", hindex_oracle},
      {"attention identities", attention_identities},
      {"modularity correctness", modularity_checks},
      {"planted-partition recovery", planted_recovery},
      {"consensus determinism and alignment", consensus_determinism},
      {"power-law fit recovery", powerlaw_recovery},
      {"entropy bounds and cases", entropy_bounds},
      {"Ward + knee", ward_knee},
      {"super-community rulebook", rulebook_fixture},
      {"mixing-matrix additivity", mixing_additivity},
      {"end-to-end performance", end_to_end},
      {"ingest accounting", ingest_accounting},
  };
  std::size_t first = 0, last = criteria.size();
  if (argc > 1) {
    const long n = std::strtol(argv[1], nullptr, 10);
    if (n < 1 || n > static_cast<long>(criteria.size())) {
      std::cerr << "usage: attnet_acceptance [1.." << criteria.size() << "]\n";
      return 2;
    }
    first = static_cast<std::size_t>(n - 1);
    last = first + 1;
  }
  int failed = 0;
  for (std::size_t i = first; i < last; ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " -- "
              << o.detail << std::endl;
  }
  std::cout << (last - first - failed) << "/" << (last - first) << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}

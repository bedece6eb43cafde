// attnet: run the retweet-network attention pipeline stage by stage.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attnet/pipeline.hpp"

namespace {

using namespace attnet;
using namespace attnet::cli;

struct GlobalFlags {
  std::string config;
  unsigned threads = 0;
  std::optional<std::uint64_t> seed_override;
  bool verbose = false;
  std::string out;
};

struct IngestFlags {
  std::vector<std::string> events;
  std::string from;
  std::string to;
  std::string gazetteer;
};

Timestamp flag_time(const std::string& text, const char* flag) {
  auto t = parse_timestamp(text);
  if (!t) throw ConfigError(std::string("bad timestamp for ") + flag + ": " + text);
  return *t;
}

RunConfig build_config(const GlobalFlags& g, const IngestFlags* ingest) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : RunConfig::load(g.config);
  if (!g.out.empty()) cfg.out_dir = g.out;
  if (g.seed_override) cfg.override_seed(*g.seed_override);
  if (ingest != nullptr) {
    if (!ingest->events.empty()) {
      cfg.events.assign(ingest->events.begin(), ingest->events.end());
    }
    if (!ingest->from.empty()) cfg.window.start = flag_time(ingest->from, "--from");
    if (!ingest->to.empty()) cfg.window.end = flag_time(ingest->to, "--to");
    if (!ingest->gazetteer.empty()) cfg.gazetteer = ingest->gazetteer;
  }
  cfg.validate();
  return cfg;
}

void print_outcome(const StageOutcome& o) {
  std::cout << "{\"stage\":\"" << stage_name(o.stage) << "\",\"status\":\""
            << (o.cache_hit ? "cache_hit" : "done") << "\",\"report\":\"" << o.report.generic_string()
            << "\"}\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retweet-network attention analytics"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--threads", g.threads, "Worker cap (0: all cores)");
  app.add_option("--seed-override", g.seed_override, "Replace every configured seed");
  app.add_flag("--verbose", g.verbose, "Progress on stderr");
  app.add_option("--out", g.out, "Run directory (overrides paths.out_dir)");

  IngestFlags ingest;
  std::vector<std::pair<CLI::App*, std::optional<Stage>>> subs;
  for (std::string_view name :
       {"synth", "ingest", "graph", "communities", "profile", "dynamics", "attention", "stats"}) {
    auto* sub = app.add_subcommand(std::string(name), "Run the " + std::string(name) + " stage");
    sub->fallthrough();
    if (name == "ingest") {
      sub->add_option("--events", ingest.events, "Event files (JSONL)");
      sub->add_option("--from", ingest.from, "Window start (inclusive)");
      sub->add_option("--to", ingest.to, "Window end (inclusive)");
      sub->add_option("--gazetteer", ingest.gazetteer, "Location gazetteer (TSV)");
    }
    subs.emplace_back(sub, parse_stage(name));
  }
  auto* all = app.add_subcommand("all", "Run every stage in dependency order");
  all->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    RunOptions opts;
    opts.threads = g.threads;
    opts.verbose = g.verbose;
    opts.log = &std::cerr;
    if (all->parsed()) {
      const RunConfig cfg = build_config(g, nullptr);
      for (const auto& o : run_all(cfg, opts)) print_outcome(o);
      return kExitOk;
    }
    for (const auto& [sub, stage] : subs) {
      if (!sub->parsed()) continue;
      const RunConfig cfg = build_config(g, *stage == Stage::kIngest ? &ingest : nullptr);
      print_outcome(run_stage(*stage, cfg, opts));
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "attnet: error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitConfig;
}

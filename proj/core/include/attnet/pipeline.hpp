#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "attnet/attention.hpp"
#include "attnet/dynamics.hpp"
#include "attnet/ingest.hpp"
#include "attnet/profile.hpp"
#include "attnet/synth.hpp"

namespace attnet::cli {

// Bad or inconsistent configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A prerequisite stage has not produced its outputs (exit code 2).
class DependencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDependency = 2;
inline constexpr int kExitRuntime = 3;

enum class Stage : std::uint8_t {
  kSynth,
  kIngest,
  kGraph,
  kCommunities,
  kProfile,
  kDynamics,
  kAttention,
  kStats,
};

inline constexpr std::size_t kNumStages = 8;
std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

struct RunConfig {
  // Input event files. Empty with a synth section: the synth stage output.
  std::vector<std::filesystem::path> events;
  std::optional<std::filesystem::path> categories;
  std::optional<std::filesystem::path> gazetteer;
  std::optional<std::filesystem::path> rulebook;
  std::filesystem::path out_dir = "attnet-run";
  ObservationWindow window;

  double resolution = 1.0;
  std::size_t runs = 50;
  std::uint64_t louvain_seed = 0;
  std::size_t max_passes = 100;
  double tolerance = 1e-7;
  std::size_t min_community_size = 10;

  EntropyMode entropy = EntropyMode::kUsers;
  // Cluster count for the super-community cut; the knee when unset.
  std::optional<std::size_t> clusters;

  Timestamp dynamics_width = kWeek;
  Timestamp dynamics_step = kWeek;
  ActivityMode activity = ActivityMode::kOriginals;

  std::size_t top_k = 1000;
  Timestamp attention_width = kMonth;
  Timestamp attention_step = kWeek;
  BootstrapConfig bootstrap;

  std::optional<std::uint64_t> x_min;
  std::size_t min_tail = 100;

  std::optional<SynthConfig> synth;

  // Canonical JSON text of each section after overrides; hashed per stage.
  std::string section_json(Stage s) const;

  // Relative paths resolve against `base_dir`. Throws ConfigError.
  static RunConfig parse(std::string_view json_text, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& file);

  // Replaces every seed (Louvain, bootstrap, synth).
  void override_seed(std::uint64_t seed);
  // Referenced input files must exist. Throws ConfigError.
  void validate() const;

  bool events_from_synth() const { return events.empty() && synth.has_value(); }
};

struct StageOutcome {
  Stage stage;
  bool cache_hit = false;
  std::filesystem::path report;
};

struct RunOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  bool verbose = false;
  std::ostream* log = nullptr;
};

// Runs one stage after checking its prerequisites against the manifest.
// Unchanged config and inputs make it a no-op reported as a cache hit.
StageOutcome run_stage(Stage stage, const RunConfig& cfg, const RunOptions& opts);

// Every applicable stage in dependency order (synth only when configured).
std::vector<StageOutcome> run_all(const RunConfig& cfg, const RunOptions& opts);

// Hex SHA-256 of a file's bytes or of a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view data);

// Maps an exception thrown by the functions above to an exit code.
int exit_code_for(const std::exception& e);

}  // namespace attnet::cli

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sead/evolution.hpp"
#include "sead/rule_table.hpp"
#include "sead/tasks.hpp"
#include "sead/trainer.hpp"

namespace sead {

// Flags shared by every subcommand.
struct GlobalOptions {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  EngineId engine = EngineId::neural;
  bool quiet = false;
  int threads = 0;  // 0 = hardware concurrency
};

// Written alongside every output; holds everything needed to reproduce the
// run (command, full config, seeds, artifacts, code version).
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::vector<std::string> artifacts;
  double wall_seconds = 0.0;

  void write(const std::string& path) const;
};

// One evaluation sweep result (Tables 2-3 schema).
struct EvalRow {
  std::string task;
  std::size_t length = 0;
  std::string mode;
  std::size_t samples = 0;
  double exact_match = 0.0;
  double mean_steps = 0.0;
  std::size_t min_steps = 0;
  std::size_t max_steps = 0;
  std::string engine;
  double wall_seconds = 0.0;  // kept in the manifest, not the CSV
};

// Deterministic CSV (wall clock excluded so reruns are byte-identical).
std::string eval_rows_csv(const std::vector<EvalRow>& rows);

// Sample-count schedule: 1,000 up to L=1024, 100 at 10^4, 10 at 10^5, 1 above.
std::size_t default_samples_for_length(std::size_t length);

// Runs fn(0..n-1) on a small worker pool; output ordering is the caller's
// job (results indexed by i stay deterministic for any thread count).
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

struct EngineContext {
  EngineId id = EngineId::neural;
  const KernelParams* params = nullptr;  // neural
  const RuleTable* table = nullptr;      // table / frontier
};

struct SampleOutcome {
  bool exact = false;
  bool converged = false;
  std::size_t steps = 0;
};

// Evaluates `samples` generated inputs of one (task, L, mode) cell: evolve,
// decode, compare against the global oracle. Exact match means every output
// bit correct. rule110 runs a fixed-horizon rollout compared row-for-row
// against the oracle rollout.
EvalRow run_eval_case(const TaskSpec& spec, const EngineContext& engine,
                      std::size_t length, GenMode mode, std::size_t samples,
                      std::uint64_t base_seed, int threads,
                      std::size_t rule110_horizon = 1,
                      std::vector<SampleOutcome>* per_sample = nullptr);

// Ordinary least squares slope of y against x.
double least_squares_slope(const std::vector<std::pair<double, double>>& xy);

struct ScalingFit {
  double adversarial_loglog_slope = 0.0;
  double random_loglog_slope = 0.0;
  double random_steps_per_log2 = 0.0;  // slope of steps vs log2 L
};

// ---- subcommand entry points (shared by the CLI and tests) ----

struct TrainCmd {
  GlobalOptions global;
  TaskId task = TaskId::parity;
  TrainConfig config;
  KernelArch arch;
  bool force = false;  // allow overwriting existing outputs
};
int cmd_train(const TrainCmd& cmd);

struct EvalCmd {
  GlobalOptions global;
  std::string checkpoint;
  std::vector<std::size_t> lengths;
  std::vector<GenMode> modes{GenMode::random};
  std::size_t samples = 0;  // 0 = schedule by length
  std::size_t horizon = 1;  // rule110 rollout depth
};
int cmd_eval(const EvalCmd& cmd, std::vector<EvalRow>* rows_out = nullptr);

struct ScalingCmd {
  GlobalOptions global;
  std::string checkpoint;
  std::vector<std::size_t> lengths;  // default 2^4..2^14
  std::size_t samples_random = 100;
};
int cmd_scaling(const ScalingCmd& cmd, ScalingFit* fit_out = nullptr);

struct RenderCmd {
  GlobalOptions global;
  std::string checkpoint;        // empty = run the task oracle rule
  std::optional<TaskId> task;    // required when checkpoint is empty
  std::size_t length = 64;
  GenMode mode = GenMode::random;
  bool single_one = false;       // rule110 classic seed
  std::size_t one_at = SIZE_MAX; // position of the single 1 (default L-1)
  std::string input_fixture;     // optional input file, overrides generator
  std::size_t horizon = 0;       // 0 = evolve to fixed point
  bool correctness = false;      // overlay vs raw symbols
  std::optional<std::size_t> lightcone_from;
  std::size_t stride = 0;  // 0 = auto from the memory budget
  std::string out_file;    // default <out>/<task>_<mode>.pgm/.ppm
};
int cmd_render(const RenderCmd& cmd);

struct ExtractLutCmd {
  GlobalOptions global;
  std::string checkpoint;
  std::string out_file;  // default <out>/<task>.lut
};
int cmd_extract_lut(const ExtractLutCmd& cmd);

struct VerifyLutCmd {
  GlobalOptions global;
  std::string lut_file;
};
int cmd_verify_lut(const VerifyLutCmd& cmd);

struct BenchCmd {
  GlobalOptions global;
  std::string checkpoint;
  std::vector<std::size_t> lengths{1024, 16384};
  std::vector<EngineId> engines{EngineId::neural, EngineId::table,
                                EngineId::frontier};
  GenMode mode = GenMode::random;
  std::size_t reps = 5;
  std::size_t horizon = 256;  // rule110 only
};
int cmd_bench(const BenchCmd& cmd);

struct LightconeCmd {
  GlobalOptions global;
  std::string checkpoint;
  std::size_t trials = 200;
  std::size_t max_horizon = 64;
  std::size_t min_length = 8;
  std::size_t max_length = 64;
};
int cmd_probe_lightcone(const LightconeCmd& cmd);

struct NoiseCmd {
  GlobalOptions global;
  std::string checkpoint;
  std::size_t trials = 50;
  double epsilon = 0.0;  // 0 = extracted min margin / 2
  std::size_t length = 32;
};
int cmd_probe_noise(const NoiseCmd& cmd);

}  // namespace sead

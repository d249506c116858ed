// sead: train, run, compile, and measure 1D neural cellular automata for
// exact algorithmic tasks (parity, binary addition, rule 110).

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sead/experiment.hpp"

namespace {

using namespace sead;

GlobalOptions* g_global = nullptr;

void add_global_options(CLI::App& app, GlobalOptions& g,
                        std::string& engine_name_opt) {
  app.add_option("--seed", g.seed, "Base seed for all randomness");
  app.add_option("--out", g.out_dir, "Output directory")
      ->capture_default_str();
  app.add_option("--engine", engine_name_opt,
                 "Evolution engine: neural, table, frontier")
      ->check(CLI::IsMember({"neural", "table", "frontier"}))
      ->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Suppress progress output");
  app.add_option("--threads", g.threads,
                 "Worker threads (0 = hardware concurrency)");
}

std::vector<GenMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<GenMode> modes;
  for (const auto& n : names) {
    const auto m = parse_gen_mode(n);
    if (!m) throw CLI::ValidationError("--modes", "unknown mode '" + n + "'");
    modes.push_back(*m);
  }
  return modes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SEAD experiment harness"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value config file; every flag "
                                 "can be overridden ([subcommand] sections "
                                 "for subcommand flags)");
  app.allow_config_extras(false);

  GlobalOptions global;
  std::string engine_opt = "neural";
  add_global_options(app, global, engine_opt);

  // train ------------------------------------------------------------
  auto* train_app = app.add_subcommand("train", "Train a kernel on a task");
  std::string train_task;
  TrainCmd train_cmd;
  train_app->add_option("--task", train_task, "parity | addition | rule110")
      ->required()
      ->check(CLI::IsMember({"parity", "addition", "rule110"}));
  train_app->add_option("--steps", train_cmd.config.total_steps,
                        "Optimizer step budget");
  train_app->add_option("--batch", train_cmd.config.batch_size, "Batch size");
  train_app->add_option("--lr", train_cmd.config.learning_rate,
                        "Learning rate");
  train_app->add_option("--rho", train_cmd.config.rho,
                        "On-trajectory fraction of chaos batches");
  train_app->add_option("--train-length", train_cmd.config.train_length,
                        "Training lattice length");
  train_app->add_option("--eval-every", train_cmd.config.eval_every,
                        "Exhaustive evaluation cadence");
  train_app->add_option("--patience", train_cmd.config.patience,
                        "Perfect evaluations required to stop early");
  std::vector<int> hidden_override;
  int embed_override = 0;
  train_app->add_option("--hidden", hidden_override,
                        "Hidden widths (first layer spans the window)")
      ->delimiter(',');
  train_app->add_option("--embed-dim", embed_override, "Embedding dimension");
  train_app->add_flag("--force", train_cmd.force,
                      "Overwrite existing outputs");
  bool train_steps_set = false;
  train_app->callback([&] {
    train_steps_set = train_app->count("--steps") > 0;
  });

  // eval ---------------------------------------------------------------
  auto* eval_app = app.add_subcommand("eval", "OOD evaluation sweep");
  EvalCmd eval_cmd;
  std::vector<std::string> eval_modes{"random"};
  eval_app->add_option("--checkpoint", eval_cmd.checkpoint)->required();
  eval_app->add_option("--lengths", eval_cmd.lengths, "Test lengths")
      ->required()
      ->delimiter(',');
  eval_app->add_option("--modes", eval_modes, "random and/or adversarial")
      ->delimiter(',');
  eval_app->add_option("--samples", eval_cmd.samples,
                       "Samples per length (0 = schedule by length)");
  eval_app->add_option("--horizon", eval_cmd.horizon,
                       "Rollout depth for rule110");

  // scaling --------------------------------------------------------------
  auto* scaling_app =
      app.add_subcommand("scaling", "Convergence-step scaling fit");
  ScalingCmd scaling_cmd;
  scaling_app->add_option("--checkpoint", scaling_cmd.checkpoint)->required();
  scaling_app->add_option("--lengths", scaling_cmd.lengths,
                          "Length grid (default 16..16384, powers of 2)")
      ->delimiter(',');
  scaling_app->add_option("--samples-random", scaling_cmd.samples_random,
                          "Random samples per length");

  // render -----------------------------------------------------------------
  auto* render_app = app.add_subcommand("render", "Spacetime diagram pixmap");
  RenderCmd render_cmd;
  std::string render_task, render_mode = "random";
  std::size_t lightcone_from = SIZE_MAX;
  render_app->add_option("--checkpoint", render_cmd.checkpoint,
                         "Trained kernel (omit to run the reference rule)");
  render_app->add_option("--task", render_task,
                         "Task for oracle mode (no checkpoint)")
      ->check(CLI::IsMember({"parity", "addition", "rule110"}));
  render_app->add_option("--length", render_cmd.length);
  render_app->add_option("--mode", render_mode)
      ->check(CLI::IsMember({"random", "adversarial"}));
  render_app->add_flag("--single-one", render_cmd.single_one,
                       "Seed with a single 1 bit");
  render_app->add_option("--one-at", render_cmd.one_at,
                         "Position of the single 1 (default L-1)");
  render_app->add_option("--input", render_cmd.input_fixture,
                         "Input fixture file");
  render_app->add_option("--horizon", render_cmd.horizon,
                         "Fixed steps (0 = evolve to fixed point)");
  render_app->add_flag("--correctness", render_cmd.correctness,
                       "Green/red overlay vs the oracle answer");
  render_app->add_option("--lightcone-from", lightcone_from,
                         "Draw a slope-1 guide from this cell");
  render_app->add_option("--stride", render_cmd.stride,
                         "Trace row stride (0 = auto)");
  render_app->add_option("--out-file", render_cmd.out_file);

  // extract-lut / verify-lut ----------------------------------------------
  auto* extract_app =
      app.add_subcommand("extract-lut", "Compile the kernel to a rule table");
  ExtractLutCmd extract_cmd;
  extract_app->add_option("--checkpoint", extract_cmd.checkpoint)->required();
  extract_app->add_option("--out-file", extract_cmd.out_file);

  auto* verify_app =
      app.add_subcommand("verify-lut", "Check a rule table against its task");
  VerifyLutCmd verify_cmd;
  verify_app->add_option("--lut", verify_cmd.lut_file)->required();

  // bench ----------------------------------------------------------------
  auto* bench_app = app.add_subcommand("bench", "Engine throughput");
  BenchCmd bench_cmd;
  std::vector<std::string> bench_engines{"neural", "table", "frontier"};
  std::string bench_mode = "random";
  bench_app->add_option("--checkpoint", bench_cmd.checkpoint)->required();
  bench_app->add_option("--lengths", bench_cmd.lengths)->delimiter(',');
  bench_app->add_option("--engines", bench_engines)
      ->delimiter(',');
  bench_app->add_option("--mode", bench_mode)
      ->check(CLI::IsMember({"random", "adversarial"}));
  bench_app->add_option("--reps", bench_cmd.reps, "Repetitions (median)");
  bench_app->add_option("--horizon", bench_cmd.horizon,
                        "Rollout depth for rule110");

  // probes ------------------------------------------------------------
  auto* cone_app =
      app.add_subcommand("probe-lightcone", "Causal containment check");
  LightconeCmd cone_cmd;
  cone_app->add_option("--checkpoint", cone_cmd.checkpoint)->required();
  cone_app->add_option("--trials", cone_cmd.trials);
  cone_app->add_option("--horizon", cone_cmd.max_horizon);
  cone_app->add_option("--min-length", cone_cmd.min_length);
  cone_app->add_option("--max-length", cone_cmd.max_length);

  auto* noise_app =
      app.add_subcommand("probe-noise", "Attractor noise-rejection check");
  NoiseCmd noise_cmd;
  noise_app->add_option("--checkpoint", noise_cmd.checkpoint)->required();
  noise_app->add_option("--trials", noise_cmd.trials);
  noise_app->add_option("--epsilon", noise_cmd.epsilon,
                        "Logit noise amplitude (0 = min margin / 2)");
  noise_app->add_option("--length", noise_cmd.length);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage error
  }

  const auto engine = parse_engine(engine_opt);
  global.engine = engine.value_or(EngineId::neural);
  g_global = &global;

  try {
    if (*train_app) {
      train_cmd.global = global;
      train_cmd.task = *parse_task(train_task);
      train_cmd.arch = default_arch(train_cmd.task);
      if (!train_steps_set)
        train_cmd.config.total_steps =
            default_train_config(train_cmd.task).total_steps;
      if (!hidden_override.empty()) train_cmd.arch.hidden = hidden_override;
      if (embed_override > 0) train_cmd.arch.embed_dim = embed_override;
      train_cmd.config.seed = global.seed;
      return cmd_train(train_cmd);
    }
    if (*eval_app) {
      eval_cmd.global = global;
      eval_cmd.modes = parse_modes(eval_modes);
      return cmd_eval(eval_cmd);
    }
    if (*scaling_app) {
      scaling_cmd.global = global;
      return cmd_scaling(scaling_cmd);
    }
    if (*render_app) {
      render_cmd.global = global;
      if (!render_task.empty()) render_cmd.task = *parse_task(render_task);
      render_cmd.mode = *parse_gen_mode(render_mode);
      if (lightcone_from != SIZE_MAX) render_cmd.lightcone_from = lightcone_from;
      return cmd_render(render_cmd);
    }
    if (*extract_app) {
      extract_cmd.global = global;
      return cmd_extract_lut(extract_cmd);
    }
    if (*verify_app) {
      verify_cmd.global = global;
      return cmd_verify_lut(verify_cmd);
    }
    if (*bench_app) {
      bench_cmd.global = global;
      bench_cmd.engines.clear();
      for (const auto& name : bench_engines) {
        const auto e = parse_engine(name);
        if (!e) {
          std::cerr << "unknown engine '" << name << "'\n";
          return 2;
        }
        bench_cmd.engines.push_back(*e);
      }
      bench_cmd.mode = *parse_gen_mode(bench_mode);
      return cmd_bench(bench_cmd);
    }
    if (*cone_app) {
      cone_cmd.global = global;
      return cmd_probe_lightcone(cone_cmd);
    }
    if (*noise_app) {
      noise_cmd.global = global;
      return cmd_probe_noise(noise_cmd);
    }
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

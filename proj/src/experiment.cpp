#include "sead/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sead/pixmap.hpp"

namespace sead {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void say(const GlobalOptions& g, const std::string& line) {
  if (!g.quiet) std::cout << line << '\n';
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for write");
  os << content;
  if (!os) throw IoError("write to '" + path + "' failed");
}

std::string ensure_out_dir(const GlobalOptions& g) {
  fs::create_directories(g.out_dir);
  return g.out_dir;
}

json arch_json(const KernelArch& a) {
  return json{{"alphabet_size", a.alphabet_size},
              {"embed_dim", a.embed_dim},
              {"radius", a.radius},
              {"hidden", a.hidden},
              {"nonlinearity", nonlinearity_name(a.nonlinearity)}};
}

json train_config_json(const TrainConfig& c) {
  return json{{"train_length", c.train_length},
              {"batch_size", c.batch_size},
              {"total_steps", c.total_steps},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon},
              {"seed", c.seed},
              {"rho", c.rho},
              {"eval_every", c.eval_every},
              {"patience", c.patience}};
}

struct LoadedModel {
  Checkpoint ck;
  const TaskSpec* spec = nullptr;
};

LoadedModel load_model(const std::string& path) {
  LoadedModel m;
  m.ck = load_checkpoint(path);
  const auto tid = parse_task(m.ck.task);
  if (!tid)
    throw Error("checkpoint task '" + m.ck.task + "' is not a known task");
  m.spec = &task(*tid);
  if (m.ck.params.arch.alphabet_size != m.spec->alphabet->size ||
      m.ck.params.arch.radius != m.spec->radius)
    throw Error("checkpoint arch does not match task '" + m.ck.task + "'");
  return m;
}

// Extract-and-verify gate used before any table-backed engine runs.
Extraction verified_extraction(const LoadedModel& m, const GlobalOptions& g,
                               bool* ok) {
  Extraction ex = extract_rule_table(m.ck.params, m.spec->name);
  ex.table.source_checksum = m.ck.payload_checksum;
  const auto mismatches = verify_table(ex.table, m.spec->oracle);
  if (!mismatches.empty()) {
    std::cerr << "verification failed: " << mismatches.size()
              << " window(s) disagree with the reference rule (first index "
              << mismatches.front() << ")\n";
    *ok = false;
  } else {
    say(g, "table verified: " + std::to_string(ex.table.window_count()) +
               " windows, min margin " + std::to_string(ex.min_margin));
    *ok = true;
  }
  return ex;
}

}  // namespace

void RunManifest::write(const std::string& path) const {
  json j{{"command", command},
         {"config", config},
         {"artifacts", artifacts},
         {"wall_seconds", wall_seconds},
         {"code_version", kVersion}};
  write_text_file(path, j.dump(2) + "\n");
}

std::string eval_rows_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream os;
  os << "task,L,mode,samples,exact_match,mean_steps,min_steps,max_steps,"
        "engine\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.task << ',' << r.length << ',' << r.mode << ',' << r.samples << ','
       << r.exact_match << ',' << r.mean_steps << ',' << r.min_steps << ','
       << r.max_steps << ',' << r.engine << '\n';
  return os.str();
}

std::size_t default_samples_for_length(std::size_t length) {
  if (length <= 1024) return 1000;
  if (length <= 10'000) return 100;
  if (length <= 100'000) return 10;
  return 1;
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw ? static_cast<int>(hw) : 1;
  }
  threads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(threads), n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double least_squares_slope(const std::vector<std::pair<double, double>>& xy) {
  if (xy.size() < 2)
    throw ContractViolation("least_squares_slope needs >= 2 points");
  double mx = 0, my = 0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(xy.size());
  my /= static_cast<double>(xy.size());
  double cov = 0, var = 0;
  for (const auto& [x, y] : xy) {
    cov += (x - mx) * (y - my);
    var += (x - mx) * (x - mx);
  }
  if (var == 0.0) throw ContractViolation("least_squares_slope: zero variance");
  return cov / var;
}

namespace {

SampleOutcome eval_fixed_point_sample(const TaskSpec& spec,
                                      const EngineContext& eng,
                                      const Lattice& start,
                                      const TaskInput& input) {
  EvolutionConfig cfg;
  const EvolutionResult res = [&] {
    switch (eng.id) {
      case EngineId::frontier:
        return evolve_frontier(*eng.table, start, cfg);
      case EngineId::table: {
        const RuleTable& table = *eng.table;
        const Symbol q = spec.alphabet->quiescent;
        StepFn fn = [&table, q](std::span<const Symbol> in,
                                std::span<Symbol> out) {
          step_table_buf(table, in, out, q);
        };
        return evolve_to_fixed_point(fn, start, cfg);
      }
      case EngineId::neural:
      default: {
        NeuralStepper stepper(*eng.params, spec.alphabet->quiescent);
        StepFn fn = [&stepper](std::span<const Symbol> in,
                               std::span<Symbol> out) { stepper(in, out); };
        return evolve_to_fixed_point(fn, start, cfg);
      }
    }
  }();
  SampleOutcome out{false, res.converged, res.steps};
  if (res.converged)
    out.exact = decode_output(spec, res.final_lattice) ==
                global_oracle(spec, input);
  return out;
}

SampleOutcome eval_rollout_sample(const TaskSpec& spec,
                                  const EngineContext& eng,
                                  const Lattice& start, std::size_t horizon) {
  const Symbol q = spec.alphabet->quiescent;
  std::vector<Symbol> model = start.cells, truth = start.cells;
  std::vector<Symbol> model_next(model.size()), truth_next(model.size());
  // The frontier engine degenerates to dense table stepping here; rule110
  // has no quiet wavefront to exploit.
  std::optional<NeuralStepper> neural;
  if (eng.id == EngineId::neural) neural.emplace(*eng.params, q);

  SampleOutcome out{true, true, horizon};
  for (std::size_t t = 0; t < horizon; ++t) {
    if (neural)
      (*neural)(model, model_next);
    else
      step_table_buf(*eng.table, model, model_next, q);
    apply_local_rule_buf(truth, truth_next, spec.radius, q, spec.oracle);
    if (model_next != truth_next) {
      out.exact = false;
      break;
    }
    std::swap(model, model_next);
    std::swap(truth, truth_next);
  }
  return out;
}

}  // namespace

EvalRow run_eval_case(const TaskSpec& spec, const EngineContext& engine,
                      std::size_t length, GenMode mode, std::size_t samples,
                      std::uint64_t base_seed, int threads,
                      std::size_t rule110_horizon,
                      std::vector<SampleOutcome>* per_sample) {
  if (samples == 0) throw ContractViolation("run_eval_case: samples == 0");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<SampleOutcome> outcomes(samples);
  parallel_for(samples, threads, [&](std::size_t idx) {
    const TaskInput input =
        gen_input(spec, length, mode, mix_seed(base_seed, idx));
    const Lattice start = encode_input(spec, input);
    outcomes[idx] =
        spec.has_fixed_point
            ? eval_fixed_point_sample(spec, engine, start, input)
            : eval_rollout_sample(spec, engine, start, rule110_horizon);
  });

  EvalRow row;
  row.task = spec.name;
  row.length = length;
  row.mode = gen_mode_name(mode);
  row.samples = samples;
  row.engine = engine_name(engine.id);
  row.min_steps = outcomes.front().steps;
  row.max_steps = outcomes.front().steps;
  std::size_t exact = 0;
  double step_sum = 0.0;
  for (const auto& o : outcomes) {
    exact += o.exact ? 1 : 0;
    step_sum += static_cast<double>(o.steps);
    row.min_steps = std::min(row.min_steps, o.steps);
    row.max_steps = std::max(row.max_steps, o.steps);
  }
  row.exact_match =
      static_cast<double>(exact) / static_cast<double>(samples);
  row.mean_steps = step_sum / static_cast<double>(samples);
  row.wall_seconds = seconds_since(t0);
  if (per_sample) *per_sample = std::move(outcomes);
  return row;
}

int cmd_train(const TrainCmd& cmd) {
  const auto t0 = std::chrono::steady_clock::now();
  const TaskSpec& spec = task(cmd.task);
  const std::string dir = ensure_out_dir(cmd.global);
  const std::string ckpt_path = dir + "/" + spec.name + ".ckpt";
  const std::string csv_path = dir + "/" + spec.name + "_train.csv";
  const std::string manifest_path = dir + "/" + spec.name + "_train_manifest.json";
  if (!cmd.force && (fs::exists(ckpt_path) || fs::exists(csv_path))) {
    std::cerr << "refusing to overwrite " << ckpt_path
              << " (pass --force to allow)\n";
    return 2;
  }

  const std::uint64_t init_seed = mix_seed(cmd.config.seed, 0x5EAD);
  KernelParams params0 = init_params(cmd.arch, init_seed);
  auto [params, report] = train(std::move(params0), spec, cmd.config);

  save_checkpoint(params, spec.name, ckpt_path);
  write_text_file(csv_path, train_report_csv(report));

  RunManifest manifest;
  manifest.command = "train";
  manifest.config = json{{"task", spec.name},
                         {"train", train_config_json(cmd.config)},
                         {"arch", arch_json(cmd.arch)},
                         {"init_seed", init_seed},
                         {"out_dir", cmd.global.out_dir}};
  manifest.artifacts = {ckpt_path, csv_path};
  manifest.wall_seconds = seconds_since(t0);
  manifest.write(manifest_path);

  std::ostringstream summary;
  summary << spec.name << ": " << report.param_count << " params, "
          << report.steps_run << " steps, exhaustive accuracy "
          << report.final_accuracy;
  if (report.first_perfect_step)
    summary << " (first perfect at step " << report.first_perfect_step << ")";
  say(cmd.global, summary.str());
  say(cmd.global, "wrote " + ckpt_path);
  return report.reached_perfect ? 0 : 1;
}

int cmd_eval(const EvalCmd& cmd, std::vector<EvalRow>* rows_out) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedModel model = load_model(cmd.checkpoint);
  const TaskSpec& spec = *model.spec;
  if (cmd.lengths.empty()) {
    std::cerr << "eval: no lengths given\n";
    return 2;
  }
  for (GenMode m : cmd.modes) {
    if (m == GenMode::adversarial && spec.id != TaskId::addition) {
      std::cerr << "eval: adversarial mode is defined for addition only\n";
      return 2;
    }
  }

  EngineContext eng;
  eng.id = cmd.global.engine;
  Extraction ex;
  if (eng.id == EngineId::neural) {
    eng.params = &model.ck.params;
  } else {
    bool ok = false;
    ex = verified_extraction(model, cmd.global, &ok);
    if (!ok) return 3;
    eng.table = &ex.table;
  }

  std::vector<EvalRow> rows;
  json case_walls = json::array();
  for (std::size_t L : cmd.lengths) {
    for (GenMode mode : cmd.modes) {
      std::size_t n = cmd.samples ? cmd.samples : default_samples_for_length(L);
      if (mode == GenMode::adversarial) n = 1;  // single deterministic input
      const std::uint64_t case_seed =
          mix_seed(mix_seed(cmd.global.seed, L),
                   mode == GenMode::adversarial ? 1 : 0);
      EvalRow row = run_eval_case(spec, eng, L, mode, n, case_seed,
                                  cmd.global.threads, cmd.horizon);
      say(cmd.global, row.task + " L=" + std::to_string(L) + " " + row.mode +
                          ": exact " + std::to_string(row.exact_match) +
                          ", steps " + std::to_string(row.mean_steps));
      case_walls.push_back(json{{"L", L},
                                {"mode", gen_mode_name(mode)},
                                {"wall_seconds", row.wall_seconds}});
      rows.push_back(std::move(row));
    }
  }

  const std::string dir = ensure_out_dir(cmd.global);
  const std::string stem =
      "eval_" + spec.name + "_" + engine_name(eng.id);
  const std::string csv_path = dir + "/" + stem + ".csv";
  write_text_file(csv_path, eval_rows_csv(rows));

  RunManifest manifest;
  manifest.command = "eval";
  manifest.config = json{{"checkpoint", cmd.checkpoint},
                         {"task", spec.name},
                         {"engine", engine_name(eng.id)},
                         {"lengths", cmd.lengths},
                         {"samples", cmd.samples},
                         {"horizon", cmd.horizon},
                         {"seed", cmd.global.seed},
                         {"threads", cmd.global.threads},
                         {"case_wall_seconds", case_walls}};
  manifest.artifacts = {csv_path};
  manifest.wall_seconds = seconds_since(t0);
  manifest.write(dir + "/" + stem + "_manifest.json");
  say(cmd.global, "wrote " + csv_path);

  if (rows_out) *rows_out = rows;
  const bool all_exact =
      std::all_of(rows.begin(), rows.end(),
                  [](const EvalRow& r) { return r.exact_match == 1.0; });
  return all_exact ? 0 : 1;
}

int cmd_scaling(const ScalingCmd& cmd, ScalingFit* fit_out) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedModel model = load_model(cmd.checkpoint);
  const TaskSpec& spec = *model.spec;
  if (spec.id != TaskId::addition) {
    std::cerr << "scaling: the sweep is defined for addition checkpoints\n";
    return 2;
  }
  std::vector<std::size_t> lengths = cmd.lengths;
  if (lengths.empty())
    for (std::size_t L = 16; L <= 16384; L *= 2) lengths.push_back(L);
  if (lengths.size() < 2) {
    std::cerr << "scaling: need at least two lengths to fit a slope\n";
    return 2;
  }

  EngineContext eng;
  eng.id = cmd.global.engine;
  Extraction ex;
  if (eng.id == EngineId::neural) {
    eng.params = &model.ck.params;
  } else {
    bool ok = false;
    ex = verified_extraction(model, cmd.global, &ok);
    if (!ok) return 3;
    eng.table = &ex.table;
  }

  std::vector<EvalRow> rows;
  std::vector<std::pair<double, double>> adv_loglog, rnd_loglog, rnd_semilog;
  for (std::size_t L : lengths) {
    EvalRow adv = run_eval_case(spec, eng, L, GenMode::adversarial, 1,
                                mix_seed(cmd.global.seed, 2 * L),
                                cmd.global.threads);
    EvalRow rnd =
        run_eval_case(spec, eng, L, GenMode::random, cmd.samples_random,
                      mix_seed(cmd.global.seed, 2 * L + 1),
                      cmd.global.threads);
    adv_loglog.emplace_back(std::log(static_cast<double>(L)),
                            std::log(adv.mean_steps));
    rnd_loglog.emplace_back(std::log(static_cast<double>(L)),
                            std::log(rnd.mean_steps));
    rnd_semilog.emplace_back(std::log2(static_cast<double>(L)),
                             rnd.mean_steps);
    say(cmd.global, "L=" + std::to_string(L) + ": adversarial " +
                        std::to_string(adv.mean_steps) + " steps, random " +
                        std::to_string(rnd.mean_steps) + " steps");
    rows.push_back(std::move(adv));
    rows.push_back(std::move(rnd));
  }

  ScalingFit fit;
  fit.adversarial_loglog_slope = least_squares_slope(adv_loglog);
  fit.random_loglog_slope = least_squares_slope(rnd_loglog);
  fit.random_steps_per_log2 = least_squares_slope(rnd_semilog);
  if (fit_out) *fit_out = fit;

  const std::string dir = ensure_out_dir(cmd.global);
  const std::string csv_path = dir + "/scaling_" + spec.name + ".csv";
  write_text_file(csv_path, eval_rows_csv(rows));

  RunManifest manifest;
  manifest.command = "scaling";
  manifest.config = json{{"checkpoint", cmd.checkpoint},
                         {"engine", engine_name(eng.id)},
                         {"lengths", lengths},
                         {"samples_random", cmd.samples_random},
                         {"seed", cmd.global.seed}};
  manifest.config["fits"] =
      json{{"adversarial_loglog_slope", fit.adversarial_loglog_slope},
           {"random_loglog_slope", fit.random_loglog_slope},
           {"random_steps_per_log2", fit.random_steps_per_log2}};
  manifest.artifacts = {csv_path};
  manifest.wall_seconds = seconds_since(t0);
  manifest.write(dir + "/scaling_" + spec.name + "_manifest.json");

  std::ostringstream fits;
  fits << "fits: adversarial log-log slope " << fit.adversarial_loglog_slope
       << ", random log-log slope " << fit.random_loglog_slope
       << ", random steps per log2(L) " << fit.random_steps_per_log2;
  say(cmd.global, fits.str());
  say(cmd.global, "wrote " + csv_path);
  return 0;
}

int cmd_extract_lut(const ExtractLutCmd& cmd) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedModel model = load_model(cmd.checkpoint);
  Extraction ex = extract_rule_table(model.ck.params, model.spec->name);
  ex.table.source_checksum = model.ck.payload_checksum;

  const std::string dir = ensure_out_dir(cmd.global);
  const std::string out_file =
      cmd.out_file.empty() ? dir + "/" + model.spec->name + ".lut"
                           : cmd.out_file;
  serialize_table(ex.table, out_file);

  RunManifest manifest;
  manifest.command = "extract-lut";
  manifest.config = json{{"checkpoint", cmd.checkpoint},
                         {"task", model.spec->name},
                         {"min_margin", ex.min_margin},
                         {"argmin_window", ex.argmin_window},
                         {"quiescent_preserving",
                          ex.table.quiescent_preserving(
                              model.spec->alphabet->quiescent)}};
  manifest.artifacts = {out_file};
  manifest.wall_seconds = seconds_since(t0);
  manifest.write(out_file + ".manifest.json");

  say(cmd.global, "extracted " + std::to_string(ex.table.window_count()) +
                      " windows, min margin " + std::to_string(ex.min_margin));
  say(cmd.global, "wrote " + out_file);
  return 0;
}

int cmd_verify_lut(const VerifyLutCmd& cmd) {
  const RuleTable table = load_table(cmd.lut_file);
  const auto tid = parse_task(table.task);
  if (!tid) {
    std::cerr << "verify-lut: table task '" << table.task
              << "' is not a known task\n";
    return 2;
  }
  const TaskSpec& spec = task(*tid);
  if (table.alphabet_size != spec.alphabet->size ||
      table.radius != spec.radius) {
    std::cerr << "verify-lut: table alphabet/radius does not match task\n";
    return 3;
  }
  const auto mismatches = verify_table(table, spec.oracle);
  if (!mismatches.empty()) {
    std::cerr << "verify-lut: " << mismatches.size()
              << " mismatching window(s); first index " << mismatches.front()
              << '\n';
    return 3;
  }
  say(cmd.global, "verified: all " + std::to_string(table.window_count()) +
                      " windows match the " + spec.name + " rule");
  return 0;
}

int cmd_render(const RenderCmd& cmd) {
  const auto t0 = std::chrono::steady_clock::now();
  const TaskSpec* spec = nullptr;
  LoadedModel model;
  if (!cmd.checkpoint.empty()) {
    model = load_model(cmd.checkpoint);
    spec = model.spec;
  } else if (cmd.task) {
    spec = &task(*cmd.task);
  } else {
    std::cerr << "render: need a checkpoint or a task (oracle mode)\n";
    return 2;
  }

  TaskInput input;
  std::size_t length = cmd.length;
  if (!cmd.input_fixture.empty()) {
    std::ifstream is(cmd.input_fixture);
    if (!is) {
      std::cerr << "render: cannot open fixture " << cmd.input_fixture << '\n';
      return 2;
    }
    InputFixture fx = read_input_fixture(is);
    if (fx.task != spec->id) {
      std::cerr << "render: fixture task does not match\n";
      return 2;
    }
    input = fx.input;
    length = fx.length;
  } else if (cmd.single_one) {
    input.a.assign(length, 0);
    const std::size_t pos = cmd.one_at == SIZE_MAX ? length - 1
                                                   : std::min(cmd.one_at,
                                                              length - 1);
    input.a[pos] = 1;
    if (spec->id == TaskId::addition) input.b.assign(length, 0);
  } else {
    if (cmd.mode == GenMode::adversarial && spec->id != TaskId::addition) {
      std::cerr << "render: adversarial mode is defined for addition only\n";
      return 2;
    }
    input = gen_input(*spec, length, cmd.mode, cmd.global.seed);
  }
  const Lattice start = encode_input(*spec, input);

  std::size_t horizon = cmd.horizon;
  if (!spec->has_fixed_point && horizon == 0) horizon = 64;
  const std::size_t expected_steps =
      horizon ? horizon : start.size() + 1;
  const std::size_t stride =
      cmd.stride ? cmd.stride
                 : choose_trace_stride(start.size(), expected_steps);

  // Build the stepper: trained kernel if a checkpoint was given, otherwise
  // the task's reference rule.
  std::optional<NeuralStepper> neural;
  const Symbol q = spec->alphabet->quiescent;
  StepFn step;
  if (!cmd.checkpoint.empty()) {
    neural.emplace(model.ck.params, q);
    step = [&neural](std::span<const Symbol> in, std::span<Symbol> out) {
      (*neural)(in, out);
    };
  } else {
    const TaskSpec& s = *spec;
    step = [&s, q](std::span<const Symbol> in, std::span<Symbol> out) {
      apply_local_rule_buf(in, out, s.radius, q, s.oracle);
    };
  }

  SpacetimeTrace trace;
  if (horizon) {
    trace = evolve_fixed_horizon(step, start, horizon, stride);
  } else {
    EvolutionConfig cfg;
    cfg.trace.record = true;
    cfg.trace.stride = stride;
    EvolutionResult res = evolve_to_fixed_point(step, start, cfg);
    if (!res.converged) {
      std::cerr << "render: evolution hit the step cap without converging\n";
      return 1;
    }
    trace = std::move(*res.trace);
  }

  const std::string dir = ensure_out_dir(cmd.global);
  std::string out_file = cmd.out_file;
  if (out_file.empty()) {
    const char* kind = cmd.single_one ? "single1" : gen_mode_name(cmd.mode);
    out_file = dir + "/" + spec->name + "_" + kind +
               (cmd.correctness ? ".ppm" : ".pgm");
  }

  if (cmd.correctness) {
    std::vector<Symbol> truth;
    if (spec->has_fixed_point) {
      const OracleRun run = evolve_oracle(*spec, start);
      if (!run.converged) {
        std::cerr << "render: oracle did not converge\n";
        return 1;
      }
      truth = run.final_lattice.cells;
    } else {
      SpacetimeTrace oracle_trace = evolve_fixed_horizon(
          [spec, q](std::span<const Symbol> in, std::span<Symbol> out) {
            apply_local_rule_buf(in, out, spec->radius, q, spec->oracle);
          },
          start, horizon, horizon ? horizon : 1);
      truth = oracle_trace.rows.back();
    }
    write_ppm(render_trace_correctness(trace, truth, cmd.lightcone_from),
              out_file);
  } else {
    write_pgm(render_trace_gray(trace), out_file);
  }

  RunManifest manifest;
  manifest.command = "render";
  manifest.config = json{{"checkpoint", cmd.checkpoint},
                         {"task", spec->name},
                         {"length", length},
                         {"mode", cmd.single_one ? "single-one"
                                                 : gen_mode_name(cmd.mode)},
                         {"seed", cmd.global.seed},
                         {"horizon", horizon},
                         {"stride", stride},
                         {"correctness", cmd.correctness},
                         {"rows", trace.rows.size()}};
  manifest.artifacts = {out_file};
  manifest.wall_seconds = seconds_since(t0);
  manifest.write(out_file + ".manifest.json");
  say(cmd.global, "wrote " + out_file + " (" +
                      std::to_string(trace.width()) + "x" +
                      std::to_string(trace.rows.size()) + ")");
  return 0;
}

int cmd_bench(const BenchCmd& cmd) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedModel model = load_model(cmd.checkpoint);
  const TaskSpec& spec = *model.spec;
  if (cmd.mode == GenMode::adversarial && spec.id != TaskId::addition) {
    std::cerr << "bench: adversarial mode is defined for addition only\n";
    return 2;
  }
  if (cmd.reps == 0) {
    std::cerr << "bench: reps must be >= 1\n";
    return 2;
  }

  bool ok = false;
  Extraction ex = verified_extraction(model, cmd.global, &ok);
  if (!ok) return 3;

  std::ostringstream csv;
  csv << "task,engine,L,mode,reps,steps,cell_updates,median_seconds,"
         "updates_per_second\n";
  for (EngineId engine : cmd.engines) {
    for (std::size_t L : cmd.lengths) {
      const TaskInput input =
          gen_input(spec, L, cmd.mode, mix_seed(cmd.global.seed, L));
      const Lattice start = encode_input(spec, input);
      std::vector<double> times;
      std::uint64_t updates = 0;
      std::size_t steps = 0;
      for (std::size_t rep = 0; rep < cmd.reps; ++rep) {
        const auto r0 = std::chrono::steady_clock::now();
        EvolutionConfig cfg;
        if (!spec.has_fixed_point) {
          cfg.max_steps = cmd.horizon;
          cfg.run_full_horizon = true;
        }
        const EvolutionResult res = [&] {
          switch (engine) {
            case EngineId::frontier:
              return evolve_frontier(ex.table, start, cfg);
            case EngineId::table: {
              const Symbol q = spec.alphabet->quiescent;
              StepFn fn = [&ex, q](std::span<const Symbol> in,
                                   std::span<Symbol> out) {
                step_table_buf(ex.table, in, out, q);
              };
              return evolve_to_fixed_point(fn, start, cfg);
            }
            case EngineId::neural:
            default: {
              NeuralStepper stepper(model.ck.params,
                                    spec.alphabet->quiescent);
              StepFn fn = [&stepper](std::span<const Symbol> in,
                                     std::span<Symbol> out) {
                stepper(in, out);
              };
              return evolve_to_fixed_point(fn, start, cfg);
            }
          }
        }();
        times.push_back(seconds_since(r0));
        updates = res.cell_updates;
        steps = res.steps;
      }
      std::sort(times.begin(), times.end());
      const double median = times[times.size() / 2];
      csv.precision(17);
      csv << spec.name << ',' << engine_name(engine) << ',' << L << ','
          << gen_mode_name(cmd.mode) << ',' << cmd.reps << ',' << steps << ','
          << updates << ',' << median << ','
          << static_cast<double>(updates) / median << '\n';
      say(cmd.global,
          std::string(engine_name(engine)) + " L=" + std::to_string(L) + ": " +
              std::to_string(median) + " s, " +
              std::to_string(static_cast<double>(updates) / median) +
              " updates/s");
    }
  }

  const std::string dir = ensure_out_dir(cmd.global);
  const std::string csv_path = dir + "/bench_" + spec.name + ".csv";
  write_text_file(csv_path, csv.str());

  RunManifest manifest;
  manifest.command = "bench";
  manifest.config = json{{"checkpoint", cmd.checkpoint},
                         {"lengths", cmd.lengths},
                         {"mode", gen_mode_name(cmd.mode)},
                         {"reps", cmd.reps},
                         {"horizon", cmd.horizon},
                         {"seed", cmd.global.seed}};
  manifest.artifacts = {csv_path};
  manifest.wall_seconds = seconds_since(t0);
  manifest.write(dir + "/bench_" + spec.name + "_manifest.json");
  say(cmd.global, "wrote " + csv_path);
  return 0;
}

int cmd_probe_lightcone(const LightconeCmd& cmd) {
  const LoadedModel model = load_model(cmd.checkpoint);
  const TaskSpec& spec = *model.spec;
  NeuralStepper stepper(model.ck.params, spec.alphabet->quiescent);
  StepFn fn = [&stepper](std::span<const Symbol> in, std::span<Symbol> out) {
    stepper(in, out);
  };

  Rng rng(cmd.global.seed);
  std::size_t violations = 0;
  const auto r = static_cast<std::size_t>(spec.radius);
  for (std::size_t trial = 0; trial < cmd.trials; ++trial) {
    const std::size_t L =
        cmd.min_length +
        rng.index(cmd.max_length - cmd.min_length + 1);
    const TaskInput input =
        gen_input(spec, L, GenMode::random, rng.next_u64());
    const Lattice start = encode_input(spec, input);
    const std::size_t flip = rng.index(start.size());
    const std::size_t horizon = 1 + rng.index(cmd.max_horizon);
    const auto diffs = lightcone_probe(fn, start, flip, horizon);
    for (std::size_t t = 0; t < diffs.size(); ++t) {
      for (std::size_t pos : diffs[t]) {
        const std::size_t lo = flip >= r * t ? flip - r * t : 0;
        const std::size_t hi = flip + r * t;
        if (pos < lo || pos > hi) ++violations;
      }
    }
  }
  say(cmd.global, "light cone: " + std::to_string(cmd.trials) + " trials, " +
                      std::to_string(violations) + " violation(s)");
  return violations == 0 ? 0 : 1;
}

int cmd_probe_noise(const NoiseCmd& cmd) {
  const LoadedModel model = load_model(cmd.checkpoint);
  const TaskSpec& spec = *model.spec;
  double epsilon = cmd.epsilon;
  Extraction ex = extract_rule_table(model.ck.params, spec.name);
  if (epsilon <= 0.0) epsilon = ex.min_margin / 2.0;

  Rng rng(cmd.global.seed);
  std::size_t unchanged = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t trial = 0; trial < cmd.trials; ++trial) {
    const TaskInput input =
        gen_input(spec, cmd.length, GenMode::random, rng.next_u64());
    const Lattice start = encode_input(spec, input);
    const std::size_t max_steps =
        spec.has_fixed_point ? 4 * start.size() + 64 : 64;
    const NoiseProbeResult res = noise_probe(
        model.ck.params, start, epsilon, max_steps, rng.next_u64());
    unchanged += res.identical ? 1 : 0;
    min_margin = std::min(min_margin, res.min_margin);
  }
  std::ostringstream os;
  os << "noise: epsilon " << epsilon << " (extracted margin " << ex.min_margin
     << "), trajectory margin " << min_margin << ", " << unchanged << "/"
     << cmd.trials << " trajectories unchanged";
  say(cmd.global, os.str());
  return unchanged == cmd.trials ? 0 : 1;
}

}  // namespace sead

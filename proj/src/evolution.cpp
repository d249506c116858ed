#include "sead/evolution.hpp"

#include <algorithm>
#include <cmath>

namespace sead {

const char* engine_name(EngineId id) {
  switch (id) {
    case EngineId::neural: return "neural";
    case EngineId::table: return "table";
    case EngineId::frontier: return "frontier";
  }
  return "?";
}

std::optional<EngineId> parse_engine(const std::string& name) {
  if (name == "neural") return EngineId::neural;
  if (name == "table") return EngineId::table;
  if (name == "frontier") return EngineId::frontier;
  return std::nullopt;
}

NeuralStepper::NeuralStepper(KernelParams params, Symbol quiescent)
    : params_(std::move(params)), quiescent_(quiescent) {}

void NeuralStepper::operator()(std::span<const Symbol> in,
                               std::span<Symbol> out) const {
  forward_logits_buf(params_, in, quiescent_, scratch_);
  for (std::size_t i = 0; i < in.size(); ++i)
    out[i] = scratch_.argmax_row(i);
}

Lattice step_neural(const KernelParams& params, const Lattice& lat) {
  NeuralStepper stepper(params, lat.alphabet->quiescent);
  std::vector<Symbol> out(lat.size());
  stepper(lat.cells, out);
  return Lattice(std::move(out), lat.alphabet);
}

namespace {

struct TraceRecorder {
  SpacetimeTrace trace;
  std::size_t stride = 1;
  bool enabled = false;

  TraceRecorder(const TraceOptions& opts, const Lattice& start) {
    enabled = opts.record;
    stride = std::max<std::size_t>(1, opts.stride);
    if (enabled) {
      trace.alphabet = start.alphabet;
      trace.rows.push_back(start.cells);
      trace.row_steps.push_back(0);
    }
  }

  void at(std::size_t step, const std::vector<Symbol>& cells) {
    if (enabled && step % stride == 0) push(step, cells);
  }

  void final_row(std::size_t step, const std::vector<Symbol>& cells) {
    if (enabled && trace.row_steps.back() != step) push(step, cells);
  }

 private:
  void push(std::size_t step, const std::vector<Symbol>& cells) {
    trace.rows.push_back(cells);
    trace.row_steps.push_back(step);
  }
};

}  // namespace

EvolutionResult evolve_to_fixed_point(const StepFn& step, const Lattice& start,
                                      const EvolutionConfig& config) {
  const std::size_t cap = config.cap_for(start.size());
  std::vector<Symbol> cur = start.cells;
  std::vector<Symbol> next(cur.size());
  TraceRecorder rec(config.trace, start);

  EvolutionResult res{Lattice(start), 0, false, std::nullopt, {}, 0};
  while (res.steps < cap) {
    step(cur, next);
    ++res.steps;
    res.cell_updates += cur.size();
    std::uint32_t changed = 0;
    for (std::size_t i = 0; i < cur.size(); ++i)
      changed += cur[i] != next[i];
    res.changed_per_step.push_back(changed);
    std::swap(cur, next);
    rec.at(res.steps, cur);
    if (changed == 0 && !config.run_full_horizon) {
      res.converged = true;
      break;
    }
  }
  if (res.steps == cap && !res.converged && config.run_full_horizon)
    res.converged = res.changed_per_step.back() == 0;
  rec.final_row(res.steps, cur);
  res.final_lattice = Lattice(std::move(cur), start.alphabet);
  if (rec.enabled) res.trace = std::move(rec.trace);
  return res;
}

SpacetimeTrace evolve_fixed_horizon(const StepFn& step, const Lattice& start,
                                    std::size_t horizon, std::size_t stride) {
  EvolutionConfig cfg;
  cfg.max_steps = horizon == 0 ? 1 : horizon;
  cfg.run_full_horizon = true;
  cfg.trace.record = true;
  cfg.trace.stride = stride;
  if (horizon == 0) {
    // T = 0: the trace is just the initial row.
    SpacetimeTrace trace;
    trace.alphabet = start.alphabet;
    trace.rows.push_back(start.cells);
    trace.row_steps.push_back(0);
    return trace;
  }
  EvolutionResult res = evolve_to_fixed_point(step, start, cfg);
  return std::move(*res.trace);
}

std::vector<std::vector<std::size_t>> lightcone_probe(const StepFn& step,
                                                      const Lattice& start,
                                                      std::size_t flip_pos,
                                                      std::size_t horizon) {
  if (flip_pos >= start.size())
    throw ContractViolation("lightcone_probe: flip position out of range");
  std::vector<Symbol> a = start.cells;
  std::vector<Symbol> b = start.cells;
  b[flip_pos] = static_cast<Symbol>((b[flip_pos] + 1) % start.alphabet->size);

  std::vector<std::vector<std::size_t>> diffs;
  diffs.push_back({flip_pos});
  std::vector<Symbol> na(a.size()), nb(b.size());
  for (std::size_t t = 0; t < horizon; ++t) {
    step(a, na);
    step(b, nb);
    std::swap(a, na);
    std::swap(b, nb);
    diffs.push_back(lattice_diff_buf(a, b));
  }
  return diffs;
}

NoiseProbeResult noise_probe(const KernelParams& params, const Lattice& start,
                             double epsilon, std::size_t max_steps,
                             std::uint64_t noise_seed) {
  if (epsilon < 0.0) throw ContractViolation("noise_probe: epsilon < 0");
  Rng rng(noise_seed);
  const Symbol q = start.alphabet->quiescent;
  std::vector<Symbol> clean = start.cells;
  std::vector<Symbol> noisy = start.cells;
  std::vector<Symbol> next_clean(clean.size()), next_noisy(clean.size());
  LogitField z;

  NoiseProbeResult res;
  res.identical = true;
  res.min_margin = std::numeric_limits<double>::infinity();
  while (res.steps < max_steps) {
    forward_logits_buf(params, clean, q, z);
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const auto row = z.row(i);
      double top = -std::numeric_limits<double>::infinity(), second = top;
      for (double v : row) {
        if (v > top) {
          second = top;
          top = v;
        } else if (v > second) {
          second = v;
        }
      }
      res.min_margin = std::min(res.min_margin, top - second);
      next_clean[i] = z.argmax_row(i);
    }

    forward_logits_buf(params, noisy, q, z);
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      auto row = z.row(i);
      int best = 0;
      double best_v = -std::numeric_limits<double>::infinity();
      for (int s = 0; s < z.symbols; ++s) {
        const double v =
            row[static_cast<std::size_t>(s)] + rng.range(-epsilon, epsilon);
        if (v > best_v) {
          best_v = v;
          best = s;
        }
      }
      next_noisy[i] = static_cast<Symbol>(best);
    }

    ++res.steps;
    const bool clean_fixed = clean == next_clean;
    std::swap(clean, next_clean);
    std::swap(noisy, next_noisy);
    if (noisy != clean) res.identical = false;
    if (clean_fixed) break;  // clean trajectory entered its attractor
  }
  return res;
}

}  // namespace sead

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "sead/kernel.hpp"
#include "sead/lattice.hpp"

namespace sead {

enum class EngineId { neural, table, frontier };

const char* engine_name(EngineId id);
std::optional<EngineId> parse_engine(const std::string& name);

struct TraceOptions {
  bool record = false;
  std::size_t stride = 1;  // record every stride-th step (step 0 and the
                           // final state are always kept)
};

struct EvolutionConfig {
  std::size_t max_steps = 0;  // 0 = 4L + 64
  TraceOptions trace;
  bool run_full_horizon = false;  // keep stepping after a fixed point

  std::size_t cap_for(std::size_t length) const {
    return max_steps ? max_steps : 4 * length + 64;
  }
};

struct EvolutionResult {
  Lattice final_lattice;
  std::size_t steps = 0;  // applications, counting the confirming no-change one
  bool converged = false;
  std::optional<SpacetimeTrace> trace;
  std::vector<std::uint32_t> changed_per_step;
  std::uint64_t cell_updates = 0;  // work accounting
};

// Synchronous one-step map on raw buffers; in and out never alias.
using StepFn =
    std::function<void(std::span<const Symbol> in, std::span<Symbol> out)>;

// One relax-and-project step: per-cell argmax of the kernel logits.
class NeuralStepper {
 public:
  NeuralStepper(KernelParams params, Symbol quiescent);

  void operator()(std::span<const Symbol> in, std::span<Symbol> out) const;
  const KernelParams& params() const { return params_; }

 private:
  KernelParams params_;
  Symbol quiescent_;
  mutable LogitField scratch_;
};

Lattice step_neural(const KernelParams& params, const Lattice& lat);

// Iterates until a step changes no cell (fixed point) or the cap is hit.
EvolutionResult evolve_to_fixed_point(const StepFn& step, const Lattice& start,
                                      const EvolutionConfig& config = {});

// Exactly `horizon` applications with a full (optionally strided) trace.
SpacetimeTrace evolve_fixed_horizon(const StepFn& step, const Lattice& start,
                                    std::size_t horizon,
                                    std::size_t stride = 1);

// Evolves `start` and a single-cell-perturbed copy in lockstep; returns the
// set of differing positions after each step. Entry 0 is the initial flip.
std::vector<std::vector<std::size_t>> lightcone_probe(const StepFn& step,
                                                      const Lattice& start,
                                                      std::size_t flip_pos,
                                                      std::size_t horizon);

struct NoiseProbeResult {
  bool identical = false;   // noisy trajectory matched the clean one
  double min_margin = 0.0;  // min over cells/steps of top minus runner-up
  std::size_t steps = 0;
};

// Runs the clean trajectory (to fixed point or max_steps) while a twin
// trajectory gets i.i.d. uniform[-epsilon, epsilon] noise added to every
// logit before projection.
NoiseProbeResult noise_probe(const KernelParams& params, const Lattice& start,
                             double epsilon, std::size_t max_steps,
                             std::uint64_t noise_seed);

}  // namespace sead

#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "sead/kernel.hpp"
#include "sead/tasks.hpp"

namespace sead {

struct TrainConfig {
  std::size_t train_length = 16;
  std::size_t batch_size = 64;
  std::size_t total_steps = 5000;
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  // Fraction of batch states drawn from oracle trajectories; the rest are
  // uniform random lattices, which guarantee coverage of every window.
  double rho = 0.25;
  std::size_t eval_every = 50;
  std::size_t patience = 3;  // consecutive perfect evaluations to stop

  void validate(int radius) const;
};

TrainConfig default_train_config(TaskId id);
KernelArch default_arch(TaskId id);

struct TrainReport {
  struct LogRow {
    std::size_t step;
    double loss;
    double exhaustive_accuracy;
  };
  std::vector<LogRow> log;
  std::size_t steps_run = 0;
  std::size_t first_perfect_step = 0;  // 0 = never reached
  double final_accuracy = 0.0;
  bool reached_perfect = false;
  std::size_t param_count = 0;
  double wall_seconds = 0.0;
};

// Deterministic in (config.seed, step_index) regardless of call order.
std::vector<Lattice> sample_chaos_batch(const TaskSpec& spec,
                                        const TrainConfig& config,
                                        std::size_t step_index);

// Single-step oracle targets: one synchronous rule application per lattice.
std::vector<Lattice> label_batch(const TaskSpec& spec,
                                 const std::vector<Lattice>& batch);

// Adam loop over chaos batches with early stopping on sustained exhaustive
// rule accuracy. Throws Error with diagnostics if the loss goes non-finite.
std::pair<KernelParams, TrainReport> train(KernelParams initial,
                                           const TaskSpec& spec,
                                           const TrainConfig& config);

// Fraction of all |S|^(2r+1) windows on which fn agrees with the task
// oracle. fn sees the window as a span and returns the successor symbol.
double exhaustive_window_match(
    const std::function<Symbol(std::span<const Symbol>)>& fn,
    const TaskSpec& spec);

// exhaustive_window_match with fn = argmax of the kernel's center-cell
// logits; 1.0 means the quantized kernel and the oracle are the same CA.
double exhaustive_rule_accuracy(const KernelParams& params,
                                const TaskSpec& spec);

// CSV export of the training log: step,loss,exhaustive_accuracy.
std::string train_report_csv(const TrainReport& report);

}  // namespace sead

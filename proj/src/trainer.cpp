#include "sead/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace sead {

void TrainConfig::validate(int radius) const {
  if (train_length < static_cast<std::size_t>(2 * radius + 1))
    throw ContractViolation("train_length must be >= 2r+1");
  if (rho < 0.0 || rho > 1.0)
    throw ContractViolation("rho must be in [0, 1]");
  if (batch_size == 0) throw ContractViolation("batch_size must be >= 1");
  if (eval_every == 0) throw ContractViolation("eval_every must be >= 1");
}

KernelArch default_arch(TaskId id) {
  KernelArch arch;
  arch.radius = 1;
  arch.nonlinearity = Nonlinearity::tanh_fn;
  switch (id) {
    case TaskId::parity:
      arch.alphabet_size = 6;
      arch.embed_dim = 2;
      arch.hidden = {3};
      break;
    case TaskId::addition:
      arch.alphabet_size = 12;
      arch.embed_dim = 4;
      arch.hidden = {6};
      break;
    case TaskId::rule110:
      arch.alphabet_size = 2;
      arch.embed_dim = 2;
      arch.hidden = {4};
      break;
  }
  return arch;
}

TrainConfig default_train_config(TaskId id) {
  TrainConfig cfg;
  switch (id) {
    case TaskId::parity:
      cfg.total_steps = 5000;
      break;
    case TaskId::addition:
      cfg.total_steps = 20000;
      break;
    case TaskId::rule110:
      cfg.total_steps = 5000;
      break;
  }
  return cfg;
}

std::vector<Lattice> sample_chaos_batch(const TaskSpec& spec,
                                        const TrainConfig& config,
                                        std::size_t step_index) {
  config.validate(spec.radius);
  Rng rng(mix_seed(config.seed, step_index));
  const auto n_sym = static_cast<std::uint32_t>(spec.alphabet->size);
  std::vector<Lattice> batch;
  batch.reserve(config.batch_size);
  for (std::size_t item = 0; item < config.batch_size; ++item) {
    if (rng.unit() < config.rho) {
      // On-trajectory state: encode a random input and run the oracle for a
      // random number of steps.
      const std::size_t input_len = spec.id == TaskId::addition
                                        ? config.train_length - 1
                                        : config.train_length;
      TaskInput input;
      input.a.resize(input_len);
      for (auto& bit : input.a) bit = static_cast<std::uint8_t>(rng.bit());
      if (spec.id == TaskId::addition) {
        input.b.resize(input_len);
        for (auto& bit : input.b) bit = static_cast<std::uint8_t>(rng.bit());
      }
      Lattice lat = encode_input(spec, input);
      const auto k = rng.below(
          static_cast<std::uint32_t>(config.train_length) + 1);
      for (std::uint32_t s = 0; s < k; ++s)
        lat = apply_local_rule(lat, spec.radius, spec.oracle);
      batch.push_back(std::move(lat));
    } else {
      // Uniform chaos: cells i.i.d. over the full alphabet. These states may
      // violate frozen-channel invariants; the oracle rule is total, so the
      // label always exists, and the learned rule must be total for LUT
      // extraction.
      std::vector<Symbol> cells(config.train_length);
      for (auto& c : cells) c = static_cast<Symbol>(rng.below(n_sym));
      batch.emplace_back(std::move(cells), spec.alphabet);
    }
  }
  return batch;
}

std::vector<Lattice> label_batch(const TaskSpec& spec,
                                 const std::vector<Lattice>& batch) {
  std::vector<Lattice> targets;
  targets.reserve(batch.size());
  for (const Lattice& lat : batch)
    targets.push_back(apply_local_rule(lat, spec.radius, spec.oracle));
  return targets;
}

double exhaustive_window_match(
    const std::function<Symbol(std::span<const Symbol>)>& fn,
    const TaskSpec& spec) {
  const int w = 2 * spec.radius + 1;
  const auto n_sym = static_cast<std::size_t>(spec.alphabet->size);
  std::size_t total = 1;
  for (int k = 0; k < w; ++k) total *= n_sym;
  std::vector<Symbol> window(static_cast<std::size_t>(w));
  std::size_t hits = 0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (int k = w - 1; k >= 0; --k) {
      window[static_cast<std::size_t>(k)] = static_cast<Symbol>(rest % n_sym);
      rest /= n_sym;
    }
    if (fn(window) == spec.oracle(window)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

double exhaustive_rule_accuracy(const KernelParams& params,
                                const TaskSpec& spec) {
  if (params.arch.alphabet_size != spec.alphabet->size ||
      params.arch.radius != spec.radius)
    throw ContractViolation("kernel arch does not match task");
  LogitField logits;
  const auto center = static_cast<std::size_t>(spec.radius);
  auto fn = [&](std::span<const Symbol> window) {
    forward_logits_buf(params, window, spec.alphabet->quiescent, logits);
    return logits.argmax_row(center);
  };
  return exhaustive_window_match(fn, spec);
}

std::pair<KernelParams, TrainReport> train(KernelParams initial,
                                           const TaskSpec& spec,
                                           const TrainConfig& config) {
  config.validate(spec.radius);
  if (initial.arch.alphabet_size != spec.alphabet->size ||
      initial.arch.radius != spec.radius)
    throw ContractViolation("kernel arch does not match task");
  const auto t0 = std::chrono::steady_clock::now();

  KernelParams params = std::move(initial);
  const std::size_t n = params.values.size();
  std::vector<double> grad(n), m(n, 0.0), v(n, 0.0);
  TrainReport report;
  report.param_count = n;

  std::size_t perfect_streak = 0;
  ForwardCache cache;
  for (std::size_t step = 0; step < config.total_steps; ++step) {
    const std::vector<Lattice> batch =
        sample_chaos_batch(spec, config, step);
    const std::vector<Lattice> targets = label_batch(spec, batch);

    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    const double item_w = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      forward_logits(params, batch[i], &cache);
      loss += cross_entropy_loss(cache.logits, targets[i]).mean * item_w;
      backward(params, cache, targets[i], grad, item_w);
    }
    if (!std::isfinite(loss))
      throw Error("training diverged: non-finite loss at step " +
                  std::to_string(step) + " (batch seed " +
                  std::to_string(mix_seed(config.seed, step)) + ")");

    const auto t = static_cast<double>(step + 1);
    const double bc1 = 1.0 - std::pow(config.beta1, t);
    const double bc2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * grad[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * grad[k] * grad[k];
      params.values[k] -= config.learning_rate * (m[k] / bc1) /
                          (std::sqrt(v[k] / bc2) + config.epsilon);
    }
    report.steps_run = step + 1;

    if ((step + 1) % config.eval_every == 0 ||
        step + 1 == config.total_steps) {
      const double acc = exhaustive_rule_accuracy(params, spec);
      report.log.push_back({step + 1, loss, acc});
      report.final_accuracy = acc;
      if (acc == 1.0) {
        if (report.first_perfect_step == 0)
          report.first_perfect_step = step + 1;
        ++perfect_streak;
        if (perfect_streak >= config.patience) break;
      } else {
        perfect_streak = 0;
      }
    }
  }

  report.reached_perfect = report.final_accuracy == 1.0;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return {std::move(params), std::move(report)};
}

std::string train_report_csv(const TrainReport& report) {
  std::ostringstream os;
  os << "step,loss,exhaustive_accuracy\n";
  os.precision(17);
  for (const auto& row : report.log)
    os << row.step << ',' << row.loss << ',' << row.exhaustive_accuracy
       << '\n';
  return os.str();
}

}  // namespace sead

#pragma once

#include <span>
#include <string>
#include <vector>

#include "sead/lattice.hpp"

namespace sead {

enum class Nonlinearity { tanh_fn, relu_fn };

const char* nonlinearity_name(Nonlinearity nl);

// Shape of the local evolution operator: embedding, one width-(2r+1)
// convolution, optional width-1 layers, linear head to |S| logits. Keeping
// every layer after the first at width 1 pins the single-step receptive
// field to exactly 2r+1 cells.
struct KernelArch {
  int alphabet_size = 2;
  int embed_dim = 2;
  int radius = 1;
  std::vector<int> hidden{4};
  Nonlinearity nonlinearity = Nonlinearity::tanh_fn;

  int window() const { return 2 * radius + 1; }
  std::size_t param_count() const;
  void validate() const;
  bool operator==(const KernelArch&) const = default;
};

// Byte layout of the flat parameter vector, in declared field order:
// embedding table, then (W, b) per conv layer, then head W, head b.
struct ParamSegment {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t len() const { return rows * cols; }
};

struct ParamLayout {
  ParamSegment embed;
  std::vector<ParamSegment> layer_w;
  std::vector<ParamSegment> layer_b;
  ParamSegment head_w;
  ParamSegment head_b;
  std::size_t total = 0;
};

ParamLayout param_layout(const KernelArch& arch);

struct KernelParams {
  KernelArch arch;
  std::vector<double> values;  // flat, see ParamLayout

  std::span<const double> segment(const ParamSegment& seg) const {
    return {values.data() + seg.offset, seg.len()};
  }
  std::span<double> segment(const ParamSegment& seg) {
    return {values.data() + seg.offset, seg.len()};
  }
};

// Fan-in-scaled uniform init, zero biases, deterministic per seed.
KernelParams init_params(const KernelArch& arch, std::uint64_t seed);

// L x |S| pre-softmax scores.
struct LogitField {
  std::size_t length = 0;
  int symbols = 0;
  std::vector<double> z;

  double at(std::size_t i, int s) const {
    return z[i * static_cast<std::size_t>(symbols) +
             static_cast<std::size_t>(s)];
  }
  std::span<const double> row(std::size_t i) const {
    return {z.data() + i * static_cast<std::size_t>(symbols),
            static_cast<std::size_t>(symbols)};
  }
  // Ties break toward the lowest symbol index so projection is
  // deterministic.
  Symbol argmax_row(std::size_t i) const;
};

// Intermediate activations kept for the backward pass.
struct ForwardCache {
  KernelArch arch;
  std::size_t length = 0;
  std::vector<Symbol> padded_cells;        // length + 2r, quiescent margins
  std::vector<double> emb;                 // (length + 2r) x d
  std::vector<std::vector<double>> pre;    // per layer, length x hidden[l]
  std::vector<std::vector<double>> act;    // per layer, length x hidden[l]
  LogitField logits;
};

// Per-cell logits; cell i depends only on cells i-r..i+r (quiescent-padded).
// Pass a cache to enable backward().
LogitField forward_logits(const KernelParams& params, const Lattice& lat,
                          ForwardCache* cache = nullptr);
void forward_logits_buf(const KernelParams& params,
                        std::span<const Symbol> cells, Symbol quiescent,
                        LogitField& out, ForwardCache* cache = nullptr);

struct LossResult {
  double mean = 0.0;
  std::vector<double> per_cell;
};

// Mean over cells of -log softmax(z_i)[target_i].
LossResult cross_entropy_loss(const LogitField& logits, const Lattice& target);

// Accumulates weight * d(mean cross-entropy)/d(theta) into grad, which must
// have param_count entries. Throws on a cache that does not match params.
void backward(const KernelParams& params, const ForwardCache& cache,
              const Lattice& target, std::span<double> grad,
              double weight = 1.0);

// Max relative error of backward() against central finite differences over
// every parameter. For relu architectures, parameters whose +/- evaluations
// straddle an activation kink are excluded.
double grad_check(const KernelParams& params, const Lattice& input,
                  const Lattice& target, double fd_step = 1e-5);

// Checkpoint file: magic "SEAD1", text header, little-endian f64 payload in
// declared field order, trailing FNV-1a checksum. Round-trips bitwise.
void save_checkpoint(const KernelParams& params, const std::string& task,
                     const std::string& path);

struct Checkpoint {
  std::string task;
  KernelParams params;
  std::uint64_t payload_checksum = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace sead

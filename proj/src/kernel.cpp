#include "sead/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sead {

const char* nonlinearity_name(Nonlinearity nl) {
  return nl == Nonlinearity::tanh_fn ? "tanh" : "relu";
}

void KernelArch::validate() const {
  if (alphabet_size < 2) throw ContractViolation("arch: alphabet_size < 2");
  if (embed_dim < 1) throw ContractViolation("arch: embed_dim < 1");
  if (radius < 1) throw ContractViolation("arch: radius < 1");
  if (hidden.empty()) throw ContractViolation("arch: needs >= 1 conv layer");
  for (int h : hidden)
    if (h < 1) throw ContractViolation("arch: hidden width < 1");
}

ParamLayout param_layout(const KernelArch& arch) {
  arch.validate();
  ParamLayout lay;
  std::size_t off = 0;
  auto push = [&off](ParamSegment& seg, std::size_t rows, std::size_t cols) {
    seg = ParamSegment{off, rows, cols};
    off += rows * cols;
  };
  push(lay.embed, static_cast<std::size_t>(arch.alphabet_size),
       static_cast<std::size_t>(arch.embed_dim));
  std::size_t in = static_cast<std::size_t>(arch.window()) *
                   static_cast<std::size_t>(arch.embed_dim);
  lay.layer_w.resize(arch.hidden.size());
  lay.layer_b.resize(arch.hidden.size());
  for (std::size_t l = 0; l < arch.hidden.size(); ++l) {
    const auto out = static_cast<std::size_t>(arch.hidden[l]);
    push(lay.layer_w[l], out, in);
    push(lay.layer_b[l], out, 1);
    in = out;
  }
  push(lay.head_w, static_cast<std::size_t>(arch.alphabet_size), in);
  push(lay.head_b, static_cast<std::size_t>(arch.alphabet_size), 1);
  lay.total = off;
  return lay;
}

std::size_t KernelArch::param_count() const { return param_layout(*this).total; }

KernelParams init_params(const KernelArch& arch, std::uint64_t seed) {
  const ParamLayout lay = param_layout(arch);
  KernelParams params{arch, std::vector<double>(lay.total, 0.0)};
  Rng rng(seed);
  auto fill = [&](const ParamSegment& seg, double scale) {
    auto view = params.segment(seg);
    for (double& v : view) v = rng.range(-scale, scale);
  };
  fill(lay.embed, 1.0);
  for (std::size_t l = 0; l < lay.layer_w.size(); ++l) {
    fill(lay.layer_w[l], 1.0 / std::sqrt(static_cast<double>(
                                   lay.layer_w[l].cols)));
    // biases stay zero
  }
  fill(lay.head_w, 1.0 / std::sqrt(static_cast<double>(lay.head_w.cols)));
  return params;
}

Symbol LogitField::argmax_row(std::size_t i) const {
  const auto r = row(i);
  int best = 0;
  for (int s = 1; s < symbols; ++s) {
    if (r[static_cast<std::size_t>(s)] > r[static_cast<std::size_t>(best)])
      best = s;
  }
  return static_cast<Symbol>(best);
}

namespace {

inline double apply_nl(Nonlinearity nl, double x) {
  return nl == Nonlinearity::tanh_fn ? std::tanh(x) : (x > 0.0 ? x : 0.0);
}

}  // namespace

void forward_logits_buf(const KernelParams& params,
                        std::span<const Symbol> cells, Symbol quiescent,
                        LogitField& out, ForwardCache* cache) {
  const KernelArch& arch = params.arch;
  const ParamLayout lay = param_layout(arch);
  if (params.values.size() != lay.total)
    throw ContractViolation("params vector does not match arch layout");
  for (Symbol s : cells) {
    if (s >= arch.alphabet_size)
      throw ContractViolation("lattice alphabet does not match kernel arch");
  }
  const std::size_t len = cells.size();
  const auto r = static_cast<std::size_t>(arch.radius);
  const auto d = static_cast<std::size_t>(arch.embed_dim);
  const auto w = static_cast<std::size_t>(arch.window());
  const auto n_sym = static_cast<std::size_t>(arch.alphabet_size);
  const std::size_t n_layers = arch.hidden.size();

  // Embed the quiescent-padded lattice once; the first conv layer then
  // reads overlapping windows out of this buffer.
  thread_local std::vector<double> tl_emb;
  thread_local std::vector<std::vector<double>> tl_pre, tl_act;
  std::vector<double>& emb = cache ? cache->emb : tl_emb;
  std::vector<std::vector<double>>& pre = cache ? cache->pre : tl_pre;
  std::vector<std::vector<double>>& act = cache ? cache->act : tl_act;

  const std::size_t padded = len + 2 * r;
  emb.assign(padded * d, 0.0);
  const double* etab = params.values.data() + lay.embed.offset;
  for (std::size_t p = 0; p < padded; ++p) {
    const Symbol s = (p >= r && p < r + len) ? cells[p - r] : quiescent;
    const double* row = etab + static_cast<std::size_t>(s) * d;
    std::copy(row, row + d, emb.begin() + static_cast<std::ptrdiff_t>(p * d));
  }

  pre.resize(n_layers);
  act.resize(n_layers);
  std::size_t in_dim = w * d;
  const std::vector<double>* in_buf = &emb;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto h = static_cast<std::size_t>(arch.hidden[l]);
    pre[l].assign(len * h, 0.0);
    act[l].assign(len * h, 0.0);
    const double* W = params.values.data() + lay.layer_w[l].offset;
    const double* b = params.values.data() + lay.layer_b[l].offset;
    for (std::size_t i = 0; i < len; ++i) {
      // Layer 0 strides over the padded embedding; deeper layers are
      // width-1 and read the previous activation row.
      const double* x = l == 0 ? in_buf->data() + i * d
                               : in_buf->data() + i * in_dim;
      for (std::size_t j = 0; j < h; ++j) {
        const double* wrow = W + j * in_dim;
        double acc = b[j];
        for (std::size_t m = 0; m < in_dim; ++m) acc += wrow[m] * x[m];
        pre[l][i * h + j] = acc;
        act[l][i * h + j] = apply_nl(arch.nonlinearity, acc);
      }
    }
    in_buf = &act[l];
    in_dim = h;
  }

  out.length = len;
  out.symbols = arch.alphabet_size;
  out.z.assign(len * n_sym, 0.0);
  const double* Wh = params.values.data() + lay.head_w.offset;
  const double* bh = params.values.data() + lay.head_b.offset;
  const std::vector<double>& last = act[n_layers - 1];
  const auto h_last = static_cast<std::size_t>(arch.hidden.back());
  for (std::size_t i = 0; i < len; ++i) {
    const double* x = last.data() + i * h_last;
    for (std::size_t s = 0; s < n_sym; ++s) {
      const double* wrow = Wh + s * h_last;
      double acc = bh[s];
      for (std::size_t m = 0; m < h_last; ++m) acc += wrow[m] * x[m];
      out.z[i * n_sym + s] = acc;
    }
  }

  if (cache) {
    cache->arch = arch;
    cache->length = len;
    cache->padded_cells.assign(padded, quiescent);
    std::copy(cells.begin(), cells.end(), cache->padded_cells.begin() +
                                              static_cast<std::ptrdiff_t>(r));
    cache->logits = out;
  }
}

LogitField forward_logits(const KernelParams& params, const Lattice& lat,
                          ForwardCache* cache) {
  if (lat.alphabet->size != params.arch.alphabet_size)
    throw ContractViolation("lattice alphabet does not match kernel arch");
  LogitField out;
  forward_logits_buf(params, lat.cells, lat.alphabet->quiescent, out, cache);
  return out;
}

LossResult cross_entropy_loss(const LogitField& logits, const Lattice& target) {
  if (logits.length != target.size() ||
      logits.symbols != target.alphabet->size)
    throw ContractViolation("cross_entropy_loss shape mismatch");
  LossResult res;
  res.per_cell.resize(logits.length);
  for (std::size_t i = 0; i < logits.length; ++i) {
    const auto row = logits.row(i);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double lse = 0.0;
    for (double v : row) lse += std::exp(v - mx);
    lse = mx + std::log(lse);
    res.per_cell[i] = lse - row[target.cells[i]];
    res.mean += res.per_cell[i];
  }
  res.mean /= static_cast<double>(logits.length);
  return res;
}

void backward(const KernelParams& params, const ForwardCache& cache,
              const Lattice& target, std::span<double> grad, double weight) {
  const KernelArch& arch = params.arch;
  if (cache.arch != arch)
    throw ContractViolation("backward: cache was built for a different arch");
  if (cache.length != target.size() || cache.logits.length != cache.length)
    throw ContractViolation("backward: cache does not match target shape");
  const ParamLayout lay = param_layout(arch);
  if (grad.size() != lay.total)
    throw ContractViolation("backward: gradient buffer has wrong size");

  const std::size_t len = cache.length;
  const auto r = static_cast<std::size_t>(arch.radius);
  const auto d = static_cast<std::size_t>(arch.embed_dim);
  const auto n_sym = static_cast<std::size_t>(arch.alphabet_size);
  const std::size_t n_layers = arch.hidden.size();
  const double cell_w = weight / static_cast<double>(len);

  // dL/dz = softmax - onehot, scaled by the per-cell mean weight.
  std::vector<double> dz(len * n_sym);
  for (std::size_t i = 0; i < len; ++i) {
    const auto row = cache.logits.row(i);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double denom = 0.0;
    for (double v : row) denom += std::exp(v - mx);
    for (std::size_t s = 0; s < n_sym; ++s) {
      double p = std::exp(row[s] - mx) / denom;
      if (s == target.cells[i]) p -= 1.0;
      dz[i * n_sym + s] = p * cell_w;
    }
  }

  const auto h_last = static_cast<std::size_t>(arch.hidden.back());
  const double* Wh = params.values.data() + lay.head_w.offset;
  double* gWh = grad.data() + lay.head_w.offset;
  double* gbh = grad.data() + lay.head_b.offset;
  std::vector<double> dact(len * h_last, 0.0);
  const std::vector<double>& last = cache.act[n_layers - 1];
  for (std::size_t i = 0; i < len; ++i) {
    const double* x = last.data() + i * h_last;
    for (std::size_t s = 0; s < n_sym; ++s) {
      const double g = dz[i * n_sym + s];
      gbh[s] += g;
      const double* wrow = Wh + s * h_last;
      double* grow = gWh + s * h_last;
      for (std::size_t m = 0; m < h_last; ++m) {
        grow[m] += g * x[m];
        dact[i * h_last + m] += wrow[m] * g;
      }
    }
  }

  for (std::size_t l = n_layers; l-- > 0;) {
    const auto h = static_cast<std::size_t>(arch.hidden[l]);
    const std::size_t in_dim = l == 0 ? static_cast<std::size_t>(arch.window()) * d
                                      : static_cast<std::size_t>(arch.hidden[l - 1]);
    const double* W = params.values.data() + lay.layer_w[l].offset;
    double* gW = grad.data() + lay.layer_w[l].offset;
    double* gb = grad.data() + lay.layer_b[l].offset;
    std::vector<double> dprev;
    if (l == 0) {
      dprev.assign((len + 2 * r) * d, 0.0);  // gradient w.r.t. embeddings
    } else {
      dprev.assign(len * in_dim, 0.0);
    }
    for (std::size_t i = 0; i < len; ++i) {
      const double* x = l == 0 ? cache.emb.data() + i * d
                               : cache.act[l - 1].data() + i * in_dim;
      double* dx = l == 0 ? dprev.data() + i * d : dprev.data() + i * in_dim;
      for (std::size_t j = 0; j < h; ++j) {
        const double a = cache.act[l][i * h + j];
        const double p = cache.pre[l][i * h + j];
        const double dnl = arch.nonlinearity == Nonlinearity::tanh_fn
                               ? 1.0 - a * a
                               : (p > 0.0 ? 1.0 : 0.0);
        const double g = dact[i * h + j] * dnl;
        gb[j] += g;
        const double* wrow = W + j * in_dim;
        double* grow = gW + j * in_dim;
        for (std::size_t m = 0; m < in_dim; ++m) {
          grow[m] += g * x[m];
          dx[m] += wrow[m] * g;
        }
      }
    }
    if (l == 0) {
      // Route embedding-buffer gradients back to the table rows; padded
      // positions feed the quiescent row.
      double* gE = grad.data() + lay.embed.offset;
      for (std::size_t p = 0; p < len + 2 * r; ++p) {
        const Symbol s = cache.padded_cells[p];
        for (std::size_t m = 0; m < d; ++m)
          gE[static_cast<std::size_t>(s) * d + m] += dprev[p * d + m];
      }
    } else {
      dact = std::move(dprev);
    }
  }
}

namespace {

// Sign pattern of every preactivation; used to detect relu kink crossings
// during finite differencing.
std::vector<std::uint8_t> kink_pattern(const ForwardCache& cache) {
  std::vector<std::uint8_t> bits;
  for (const auto& layer : cache.pre)
    for (double p : layer) bits.push_back(p > 0.0 ? 1 : 0);
  return bits;
}

}  // namespace

double grad_check(const KernelParams& params, const Lattice& input,
                  const Lattice& target, double fd_step) {
  ForwardCache cache;
  forward_logits(params, input, &cache);
  std::vector<double> analytic(params.values.size(), 0.0);
  backward(params, cache, target, analytic, 1.0);

  KernelParams probe = params;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.values.size(); ++k) {
    const double saved = probe.values[k];
    probe.values[k] = saved + fd_step;
    ForwardCache cp;
    const double up =
        cross_entropy_loss(forward_logits(probe, input, &cp), target).mean;
    probe.values[k] = saved - fd_step;
    ForwardCache cm;
    const double dn =
        cross_entropy_loss(forward_logits(probe, input, &cm), target).mean;
    probe.values[k] = saved;
    if (params.arch.nonlinearity == Nonlinearity::relu_fn &&
        kink_pattern(cp) != kink_pattern(cm))
      continue;  // central difference straddles a kink; subgradient caveat
    const double numeric = (up - dn) / (2.0 * fd_step);
    const double denom =
        std::max(1e-8, std::abs(analytic[k]) + std::abs(numeric));
    worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
  }
  return worst;
}

namespace {

void put_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64_le(std::istream& is, const char* field) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8))
    throw IoError(std::string("checkpoint: truncated ") + field);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

std::uint64_t double_bits(double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof v);
  return v;
}

double bits_double(std::uint64_t v) {
  double d;
  std::memcpy(&d, &v, sizeof d);
  return d;
}

std::string header_line(std::istream& is, const char* field) {
  std::string line;
  if (!std::getline(is, line))
    throw IoError(std::string("checkpoint: missing header field ") + field);
  return line;
}

}  // namespace

void save_checkpoint(const KernelParams& params, const std::string& task,
                     const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("checkpoint: cannot open '" + path + "' for write");
  const KernelArch& a = params.arch;
  os << "SEAD1\n";
  os << "task " << task << '\n';
  os << "alphabet " << a.alphabet_size << '\n';
  os << "radius " << a.radius << '\n';
  os << "embed_dim " << a.embed_dim << '\n';
  os << "hidden";
  for (int h : a.hidden) os << ' ' << h;
  os << '\n';
  os << "nonlinearity " << nonlinearity_name(a.nonlinearity) << '\n';
  os << "param_count " << params.values.size() << '\n';
  os << "end\n";
  std::vector<unsigned char> payload;
  payload.reserve(params.values.size() * 8);
  for (double v : params.values) {
    const std::uint64_t bits = double_bits(v);
    for (int i = 0; i < 8; ++i)
      payload.push_back(static_cast<unsigned char>(bits >> (8 * i)));
  }
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size()));
  put_u64_le(os, fnv1a64(payload.data(), payload.size()));
  if (!os) throw IoError("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open '" + path + "'");
  if (header_line(is, "magic") != "SEAD1")
    throw IoError("checkpoint: bad magic (want SEAD1)");
  Checkpoint ck;
  KernelArch arch;
  auto expect_key = [&](const char* key) {
    std::string line = header_line(is, key);
    const std::string prefix = std::string(key) + ' ';
    if (line.rfind(prefix, 0) != 0)
      throw IoError(std::string("checkpoint: malformed field ") + key);
    return line.substr(prefix.size());
  };
  ck.task = expect_key("task");
  arch.alphabet_size = std::stoi(expect_key("alphabet"));
  arch.radius = std::stoi(expect_key("radius"));
  arch.embed_dim = std::stoi(expect_key("embed_dim"));
  {
    std::istringstream hs(expect_key("hidden"));
    arch.hidden.clear();
    int h;
    while (hs >> h) arch.hidden.push_back(h);
    if (arch.hidden.empty())
      throw IoError("checkpoint: malformed field hidden");
  }
  {
    const std::string nl = expect_key("nonlinearity");
    if (nl == "tanh")
      arch.nonlinearity = Nonlinearity::tanh_fn;
    else if (nl == "relu")
      arch.nonlinearity = Nonlinearity::relu_fn;
    else
      throw IoError("checkpoint: unknown nonlinearity '" + nl + "'");
  }
  const auto declared = static_cast<std::size_t>(
      std::stoull(expect_key("param_count")));
  if (header_line(is, "end") != "end")
    throw IoError("checkpoint: missing end marker");
  arch.validate();
  if (declared != param_layout(arch).total)
    throw IoError("checkpoint: param_count does not match arch");

  std::vector<unsigned char> payload(declared * 8);
  if (!is.read(reinterpret_cast<char*>(payload.data()),
               static_cast<std::streamsize>(payload.size())))
    throw IoError("checkpoint: truncated parameter payload");
  const std::uint64_t want = get_u64_le(is, "checksum");
  const std::uint64_t got = fnv1a64(payload.data(), payload.size());
  if (want != got) throw IoError("checkpoint: payload checksum mismatch");
  if (is.peek() != std::char_traits<char>::eof())
    throw IoError("checkpoint: trailing data after checksum");

  ck.params.arch = arch;
  ck.params.values.resize(declared);
  for (std::size_t k = 0; k < declared; ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(payload[k * 8 +
                                                 static_cast<std::size_t>(i)])
              << (8 * i);
    ck.params.values[k] = bits_double(bits);
  }
  ck.payload_checksum = got;
  return ck;
}

}  // namespace sead

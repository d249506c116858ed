#include "sead/rule_table.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

namespace sead {

std::size_t RuleTable::encode_window(std::span<const Symbol> w) const {
  const auto n_sym = static_cast<std::size_t>(alphabet_size);
  std::size_t idx = 0;
  for (Symbol s : w) idx = idx * n_sym + s;
  return idx;
}

std::vector<Symbol> RuleTable::decode_window(std::size_t index) const {
  const auto n_sym = static_cast<std::size_t>(alphabet_size);
  std::vector<Symbol> w(static_cast<std::size_t>(window()));
  for (int k = window() - 1; k >= 0; --k) {
    w[static_cast<std::size_t>(k)] = static_cast<Symbol>(index % n_sym);
    index /= n_sym;
  }
  return w;
}

bool RuleTable::quiescent_preserving(Symbol quiescent) const {
  std::vector<Symbol> w(static_cast<std::size_t>(window()), quiescent);
  return lookup(w) == quiescent;
}

namespace {

std::size_t checked_window_count(int alphabet_size, int window,
                                 std::size_t budget) {
  std::size_t total = 1;
  for (int k = 0; k < window; ++k) {
    if (total > budget / static_cast<std::size_t>(alphabet_size) + 1)
      throw Error("rule table window space exceeds budget");
    total *= static_cast<std::size_t>(alphabet_size);
  }
  if (total > budget)
    throw Error("rule table window space exceeds budget");
  return total;
}

}  // namespace

Extraction extract_rule_table(const KernelParams& params,
                              const std::string& task_name,
                              std::size_t budget) {
  const KernelArch& arch = params.arch;
  Extraction ex;
  ex.table.alphabet_size = arch.alphabet_size;
  ex.table.radius = arch.radius;
  ex.table.task = task_name;
  const std::size_t total =
      checked_window_count(arch.alphabet_size, arch.window(), budget);
  ex.table.entries.resize(total);

  Symbol quiescent = 0;
  if (auto id = parse_task(task_name)) quiescent = task(*id).alphabet->quiescent;

  LogitField z;
  std::vector<Symbol> window(static_cast<std::size_t>(arch.window()));
  const auto center = static_cast<std::size_t>(arch.radius);
  ex.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (int k = arch.window() - 1; k >= 0; --k) {
      window[static_cast<std::size_t>(k)] =
          static_cast<Symbol>(rest % static_cast<std::size_t>(arch.alphabet_size));
      rest /= static_cast<std::size_t>(arch.alphabet_size);
    }
    forward_logits_buf(params, window, quiescent, z);
    const auto row = z.row(center);
    int best = 0;
    double top = row[0], second = -std::numeric_limits<double>::infinity();
    for (int s = 1; s < z.symbols; ++s) {
      const double v = row[static_cast<std::size_t>(s)];
      if (v > top) {
        second = top;
        top = v;
        best = s;
      } else if (v > second) {
        second = v;
      }
    }
    ex.table.entries[idx] = static_cast<Symbol>(best);
    if (top - second < ex.min_margin) {
      ex.min_margin = top - second;
      ex.argmin_window = idx;
    }
  }
  return ex;
}

std::vector<std::size_t> verify_table(const RuleTable& table,
                                      const LocalRule& reference) {
  std::vector<std::size_t> mismatches;
  std::vector<Symbol> window;
  for (std::size_t idx = 0; idx < table.window_count(); ++idx) {
    window = table.decode_window(idx);
    if (table.entries[idx] != reference(window)) mismatches.push_back(idx);
  }
  return mismatches;
}

std::vector<std::size_t> verify_table(const RuleTable& table,
                                      const RuleTable& reference) {
  if (table.alphabet_size != reference.alphabet_size ||
      table.radius != reference.radius)
    throw ContractViolation("verify_table: alphabet/radius mismatch");
  std::vector<std::size_t> mismatches;
  for (std::size_t idx = 0; idx < table.window_count(); ++idx)
    if (table.entries[idx] != reference.entries[idx]) mismatches.push_back(idx);
  return mismatches;
}

RuleTable compile_oracle_table(const TaskSpec& spec) {
  RuleTable table;
  table.alphabet_size = spec.alphabet->size;
  table.radius = spec.radius;
  table.task = spec.name;
  const std::size_t total = checked_window_count(
      table.alphabet_size, table.window(), std::size_t{1} << 24);
  table.entries.resize(total);
  std::vector<Symbol> window;
  for (std::size_t idx = 0; idx < total; ++idx) {
    window = table.decode_window(idx);
    table.entries[idx] = spec.oracle(window);
  }
  return table;
}

void step_table_buf(const RuleTable& table, std::span<const Symbol> in,
                    std::span<Symbol> out, Symbol quiescent) {
  const auto n_sym = static_cast<std::size_t>(table.alphabet_size);
  const int w = table.window();
  const auto r = static_cast<std::size_t>(table.radius);
  const std::size_t len = in.size();
  std::size_t msd = 1;
  for (int k = 0; k < w - 1; ++k) msd *= n_sym;

  std::size_t idx = 0;
  for (int k = 0; k < w; ++k) {
    const std::size_t pos = static_cast<std::size_t>(k);
    const Symbol s =
        (pos >= r && pos - r < len) ? in[pos - r] : quiescent;
    idx = idx * n_sym + s;
  }
  out[0] = table.entries[idx];
  for (std::size_t i = 1; i < len; ++i) {
    const Symbol incoming = (i + r < len) ? in[i + r] : quiescent;
    idx = (idx % msd) * n_sym + incoming;
    out[i] = table.entries[idx];
  }
}

Lattice step_table(const RuleTable& table, const Lattice& lat) {
  if (lat.alphabet->size != table.alphabet_size)
    throw ContractViolation("step_table: alphabet mismatch");
  std::vector<Symbol> out(lat.size());
  step_table_buf(table, lat.cells, out, lat.alphabet->quiescent);
  return Lattice(std::move(out), lat.alphabet);
}

EvolutionResult evolve_frontier(const RuleTable& table, const Lattice& start,
                                const EvolutionConfig& config) {
  if (start.alphabet->size != table.alphabet_size)
    throw ContractViolation("evolve_frontier: alphabet mismatch");
  const std::size_t len = start.size();
  const std::size_t cap = config.cap_for(len);
  const auto r = static_cast<std::size_t>(table.radius);
  const Symbol q = start.alphabet->quiescent;

  std::vector<Symbol> cur = start.cells;
  std::vector<std::uint32_t> changed;   // cells that changed last step
  std::vector<std::uint32_t> candidates;
  std::vector<std::pair<std::uint32_t, Symbol>> writes;
  std::vector<std::size_t> stamp(len, 0);
  std::size_t tick = 0;

  EvolutionResult res{Lattice(start), 0, false, std::nullopt, {}, 0};
  TraceOptions topt = config.trace;
  SpacetimeTrace trace;
  const std::size_t stride = std::max<std::size_t>(1, topt.stride);
  if (topt.record) {
    trace.alphabet = start.alphabet;
    trace.rows.push_back(cur);
    trace.row_steps.push_back(0);
  }

  std::vector<Symbol> window(static_cast<std::size_t>(table.window()));
  bool first = true;
  while (res.steps < cap) {
    writes.clear();
    if (first) {
      // No change history yet: one dense synchronous step.
      std::vector<Symbol> next(len);
      step_table_buf(table, cur, next, q);
      for (std::size_t i = 0; i < len; ++i) {
        if (next[i] != cur[i])
          writes.emplace_back(static_cast<std::uint32_t>(i), next[i]);
      }
      res.cell_updates += len;
      first = false;
    } else {
      ++tick;
      candidates.clear();
      for (std::uint32_t c : changed) {
        const std::size_t lo = c >= r ? c - r : 0;
        const std::size_t hi = std::min(len - 1, static_cast<std::size_t>(c) + r);
        for (std::size_t j = lo; j <= hi; ++j) {
          if (stamp[j] != tick) {
            stamp[j] = tick;
            candidates.push_back(static_cast<std::uint32_t>(j));
          }
        }
      }
      for (std::uint32_t j : candidates) {
        for (int k = 0; k < table.window(); ++k) {
          const std::ptrdiff_t p = static_cast<std::ptrdiff_t>(j) + k -
                                   static_cast<std::ptrdiff_t>(r);
          window[static_cast<std::size_t>(k)] =
              (p >= 0 && p < static_cast<std::ptrdiff_t>(len))
                  ? cur[static_cast<std::size_t>(p)]
                  : q;
        }
        const Symbol s = table.entries[table.encode_window(window)];
        if (s != cur[j]) writes.emplace_back(j, s);
      }
      res.cell_updates += candidates.size();
    }

    ++res.steps;
    res.changed_per_step.push_back(static_cast<std::uint32_t>(writes.size()));
    changed.clear();
    for (const auto& [j, s] : writes) {
      cur[j] = s;
      changed.push_back(j);
    }
    if (topt.record &&
        (res.steps % stride == 0 ||
         (writes.empty() && !config.run_full_horizon))) {
      if (trace.row_steps.back() != res.steps) {
        trace.rows.push_back(cur);
        trace.row_steps.push_back(res.steps);
      }
    }
    if (writes.empty() && !config.run_full_horizon) {
      res.converged = true;
      break;
    }
  }
  if (res.steps == cap && !res.converged && config.run_full_horizon &&
      !res.changed_per_step.empty())
    res.converged = res.changed_per_step.back() == 0;
  if (topt.record && trace.row_steps.back() != res.steps) {
    trace.rows.push_back(cur);
    trace.row_steps.push_back(res.steps);
  }
  res.final_lattice = Lattice(std::move(cur), start.alphabet);
  if (topt.record) res.trace = std::move(trace);
  return res;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint32_t get_u32(std::istream& is, const char* field) {
  unsigned char buf[4];
  if (!is.read(reinterpret_cast<char*>(buf), 4))
    throw IoError(std::string("rule table: truncated ") + field);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is, const char* field) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8))
    throw IoError(std::string("rule table: truncated ") + field);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

constexpr char kLutMagic[8] = {'S', 'E', 'A', 'D', 'L', 'U', 'T', '1'};

}  // namespace

void serialize_table(const RuleTable& table, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("rule table: cannot open '" + path + "' for write");
  os.write(kLutMagic, sizeof kLutMagic);
  put_u32(os, static_cast<std::uint32_t>(table.alphabet_size));
  put_u32(os, static_cast<std::uint32_t>(table.radius));
  put_u32(os, static_cast<std::uint32_t>(table.task.size()));
  os.write(table.task.data(), static_cast<std::streamsize>(table.task.size()));
  put_u64(os, table.source_checksum);
  put_u64(os, table.entries.size());
  os.write(reinterpret_cast<const char*>(table.entries.data()),
           static_cast<std::streamsize>(table.entries.size()));
  put_u64(os, fnv1a64(table.entries.data(), table.entries.size()));
  if (!os) throw IoError("rule table: write to '" + path + "' failed");
}

RuleTable load_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("rule table: cannot open '" + path + "'");
  char magic[8];
  if (!is.read(magic, sizeof magic) ||
      !std::equal(magic, magic + 8, kLutMagic))
    throw IoError("rule table: bad magic (want SEADLUT1)");
  RuleTable table;
  table.alphabet_size = static_cast<int>(get_u32(is, "alphabet size"));
  table.radius = static_cast<int>(get_u32(is, "radius"));
  if (table.alphabet_size < 2 || table.alphabet_size > 64)
    throw IoError("rule table: alphabet size out of range");
  if (table.radius < 1 || table.radius > 8)
    throw IoError("rule table: radius out of range");
  const std::uint32_t name_len = get_u32(is, "task name length");
  if (name_len > 256) throw IoError("rule table: task name too long");
  table.task.resize(name_len);
  if (name_len &&
      !is.read(table.task.data(), static_cast<std::streamsize>(name_len)))
    throw IoError("rule table: truncated task name");
  table.source_checksum = get_u64(is, "source checksum");
  const std::uint64_t count = get_u64(is, "entry count");
  const std::size_t expected = checked_window_count(
      table.alphabet_size, table.window(), std::size_t{1} << 24);
  if (count != expected)
    throw IoError("rule table: entry count does not match alphabet/radius");
  table.entries.resize(static_cast<std::size_t>(count));
  if (!is.read(reinterpret_cast<char*>(table.entries.data()),
               static_cast<std::streamsize>(count)))
    throw IoError("rule table: truncated entries");
  for (Symbol s : table.entries) {
    if (s >= table.alphabet_size)
      throw IoError("rule table: entry symbol out of range");
  }
  const std::uint64_t want = get_u64(is, "checksum");
  if (want != fnv1a64(table.entries.data(), table.entries.size()))
    throw IoError("rule table: entry checksum mismatch");
  if (is.peek() != std::char_traits<char>::eof())
    throw IoError("rule table: trailing data after checksum");
  return table;
}

}  // namespace sead

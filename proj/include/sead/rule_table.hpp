#pragma once

#include <string>
#include <vector>

#include "sead/evolution.hpp"
#include "sead/kernel.hpp"
#include "sead/lattice.hpp"
#include "sead/tasks.hpp"

namespace sead {

// Dense map from every radius-r window to its successor symbol: the
// compiled, executable form of the quantized learned rule. Window index is
// base-|S| with the leftmost cell most significant.
struct RuleTable {
  int alphabet_size = 0;
  int radius = 0;
  std::string task;
  std::uint64_t source_checksum = 0;  // checkpoint payload checksum, 0 = n/a
  std::vector<Symbol> entries;

  int window() const { return 2 * radius + 1; }
  std::size_t window_count() const { return entries.size(); }

  std::size_t encode_window(std::span<const Symbol> w) const;
  std::vector<Symbol> decode_window(std::size_t index) const;
  Symbol lookup(std::span<const Symbol> w) const {
    return entries[encode_window(w)];
  }
  // True when the all-quiescent window maps to quiescent (holds for every
  // task rule here; an all-quiescent lattice is then a fixed point).
  bool quiescent_preserving(Symbol quiescent) const;
};

struct Extraction {
  RuleTable table;
  double min_margin = 0.0;       // min over windows of top minus runner-up
  std::size_t argmin_window = 0;  // window index attaining min_margin
};

// Enumerates every window, evaluates the kernel's center-cell logits, and
// stores the argmax. Throws if |S|^(2r+1) exceeds `budget` entries.
Extraction extract_rule_table(const KernelParams& params,
                              const std::string& task_name,
                              std::size_t budget = std::size_t{1} << 20);

// Window indices where the two rules disagree; empty iff equivalent.
std::vector<std::size_t> verify_table(const RuleTable& table,
                                      const LocalRule& reference);
std::vector<std::size_t> verify_table(const RuleTable& table,
                                      const RuleTable& reference);

// The oracle rule compiled directly, bypassing any kernel.
RuleTable compile_oracle_table(const TaskSpec& spec);

// One synchronous step by table lookup; the window index is updated with a
// rolling multiply-add per cell, so the cost is O(L).
void step_table_buf(const RuleTable& table, std::span<const Symbol> in,
                    std::span<Symbol> out, Symbol quiescent);
Lattice step_table(const RuleTable& table, const Lattice& lat);

// Sparse evolution: each step recomputes only cells within distance r of a
// cell that changed in the previous step. Trajectory, step count, and final
// lattice are identical to dense evolution; cell_updates counts actual
// recomputations.
EvolutionResult evolve_frontier(const RuleTable& table, const Lattice& start,
                                const EvolutionConfig& config = {});

// Table file: magic "SEADLUT1", header, one byte per entry, trailing
// checksum. Round-trips bitwise.
void serialize_table(const RuleTable& table, const std::string& path);
RuleTable load_table(const std::string& path);

}  // namespace sead

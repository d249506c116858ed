#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sead/common.hpp"

namespace sead {

using Symbol = std::uint8_t;

// Finite symbol set with a designated quiescent symbol used for boundary
// padding. Labels are the tokens of the lattice text format.
struct Alphabet {
  std::string name;
  int size = 0;
  Symbol quiescent = 0;
  std::vector<std::string> labels;

  Alphabet(std::string name, int size, Symbol quiescent,
           std::vector<std::string> labels);

  Symbol from_label(const std::string& label) const;
};

using AlphabetRef = std::shared_ptr<const Alphabet>;

// 1D array of symbol indices. Open boundary: out-of-range neighbors read as
// the alphabet's quiescent symbol.
struct Lattice {
  std::vector<Symbol> cells;
  AlphabetRef alphabet;

  Lattice(std::vector<Symbol> cells, AlphabetRef alphabet);

  std::size_t size() const { return cells.size(); }
  bool operator==(const Lattice& other) const { return cells == other.cells; }
};

// Local rule over a (2r+1)-cell window; must be total over the alphabet.
using LocalRule = std::function<Symbol(std::span<const Symbol>)>;

// Cells i-r..i+r with out-of-bounds positions replaced by the quiescent
// symbol. Throws ContractViolation if i is out of range or r < 1.
std::vector<Symbol> neighborhood(const Lattice& lat, std::size_t i, int radius);

// Synchronous update on raw buffers: every output cell is computed from the
// input buffer only. in and out must not alias.
void apply_local_rule_buf(std::span<const Symbol> in, std::span<Symbol> out,
                          int radius, Symbol quiescent, const LocalRule& rule);

Lattice apply_local_rule(const Lattice& lat, int radius, const LocalRule& rule);

// Sorted positions where the two lattices differ; empty iff equal.
// Throws ContractViolation on length mismatch.
std::vector<std::size_t> lattice_diff(const Lattice& a, const Lattice& b);
std::vector<std::size_t> lattice_diff_buf(std::span<const Symbol> a,
                                          std::span<const Symbol> b);

// Row-major record of an evolution. Row 0 is the initial state; row_steps
// holds the step index of each recorded row (rows may be subsampled).
struct SpacetimeTrace {
  std::vector<std::vector<Symbol>> rows;
  std::vector<std::size_t> row_steps;
  AlphabetRef alphabet;

  std::size_t width() const { return rows.empty() ? 0 : rows.front().size(); }
};

// Row stride that keeps a trace of `steps`+1 rows of width L within
// `budget_cells` (default 2^28 cells).
std::size_t choose_trace_stride(std::size_t length, std::size_t steps,
                                std::size_t budget_cells = std::size_t{1}
                                                           << 28);

// Text fixture format: header line naming the task alphabet, then one line
// of symbol labels separated by spaces.
std::string lattice_to_text(const Lattice& lat);
Lattice lattice_from_text(const std::string& text, const AlphabetRef& alphabet);

}  // namespace sead

#include "sead/lattice.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace sead {

Alphabet::Alphabet(std::string name_, int size_, Symbol quiescent_,
                   std::vector<std::string> labels_)
    : name(std::move(name_)),
      size(size_),
      quiescent(quiescent_),
      labels(std::move(labels_)) {
  if (size < 2) throw ContractViolation("alphabet size must be >= 2");
  if (quiescent >= size)
    throw ContractViolation("quiescent symbol out of range");
  if (static_cast<int>(labels.size()) != size)
    throw ContractViolation("alphabet needs one label per symbol");
  std::unordered_set<std::string> seen(labels.begin(), labels.end());
  if (static_cast<int>(seen.size()) != size)
    throw ContractViolation("alphabet labels must be unique");
}

Symbol Alphabet::from_label(const std::string& label) const {
  for (int s = 0; s < size; ++s) {
    if (labels[static_cast<std::size_t>(s)] == label)
      return static_cast<Symbol>(s);
  }
  throw ContractViolation("unknown symbol label '" + label + "' in alphabet " +
                          name);
}

Lattice::Lattice(std::vector<Symbol> cells_, AlphabetRef alphabet_)
    : cells(std::move(cells_)), alphabet(std::move(alphabet_)) {
  if (!alphabet) throw ContractViolation("lattice needs an alphabet");
  if (cells.empty()) throw ContractViolation("lattice length must be >= 1");
  for (Symbol s : cells) {
    if (s >= alphabet->size)
      throw ContractViolation("cell symbol out of alphabet range");
  }
}

std::vector<Symbol> neighborhood(const Lattice& lat, std::size_t i,
                                 int radius) {
  if (radius < 1) throw ContractViolation("neighborhood radius must be >= 1");
  if (i >= lat.size()) throw ContractViolation("neighborhood index out of range");
  const Symbol q = lat.alphabet->quiescent;
  std::vector<Symbol> window(static_cast<std::size_t>(2 * radius + 1), q);
  const auto n = static_cast<std::ptrdiff_t>(lat.size());
  for (int k = -radius; k <= radius; ++k) {
    const auto j = static_cast<std::ptrdiff_t>(i) + k;
    if (j >= 0 && j < n)
      window[static_cast<std::size_t>(k + radius)] =
          lat.cells[static_cast<std::size_t>(j)];
  }
  return window;
}

void apply_local_rule_buf(std::span<const Symbol> in, std::span<Symbol> out,
                          int radius, Symbol quiescent,
                          const LocalRule& rule) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  const int w = 2 * radius + 1;
  std::vector<Symbol> window(static_cast<std::size_t>(w));
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (int k = 0; k < w; ++k) {
      const std::ptrdiff_t j = i + k - radius;
      window[static_cast<std::size_t>(k)] =
          (j >= 0 && j < n) ? in[static_cast<std::size_t>(j)] : quiescent;
    }
    out[static_cast<std::size_t>(i)] = rule(window);
  }
}

Lattice apply_local_rule(const Lattice& lat, int radius,
                         const LocalRule& rule) {
  if (radius < 1) throw ContractViolation("rule radius must be >= 1");
  std::vector<Symbol> out(lat.size());
  apply_local_rule_buf(lat.cells, out, radius, lat.alphabet->quiescent, rule);
  return Lattice(std::move(out), lat.alphabet);
}

std::vector<std::size_t> lattice_diff_buf(std::span<const Symbol> a,
                                          std::span<const Symbol> b) {
  if (a.size() != b.size())
    throw ContractViolation("lattice_diff length mismatch");
  std::vector<std::size_t> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) diff.push_back(i);
  }
  return diff;
}

std::vector<std::size_t> lattice_diff(const Lattice& a, const Lattice& b) {
  if (a.alphabet->name != b.alphabet->name)
    throw ContractViolation("lattice_diff alphabet mismatch");
  return lattice_diff_buf(a.cells, b.cells);
}

std::size_t choose_trace_stride(std::size_t length, std::size_t steps,
                                std::size_t budget_cells) {
  if (length == 0) return 1;
  const std::size_t rows = steps + 1;
  const std::size_t max_rows = std::max<std::size_t>(2, budget_cells / length);
  if (rows <= max_rows) return 1;
  return (rows + max_rows - 1) / max_rows;
}

std::string lattice_to_text(const Lattice& lat) {
  std::ostringstream os;
  os << lat.alphabet->name << '\n';
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (i) os << ' ';
    os << lat.alphabet->labels[lat.cells[i]];
  }
  os << '\n';
  return os.str();
}

Lattice lattice_from_text(const std::string& text,
                          const AlphabetRef& alphabet) {
  std::istringstream is(text);
  std::string header;
  if (!std::getline(is, header)) throw IoError("lattice text: missing header");
  if (header != alphabet->name)
    throw IoError("lattice text: alphabet '" + header + "' does not match '" +
                  alphabet->name + "'");
  std::string body;
  if (!std::getline(is, body)) throw IoError("lattice text: missing cells");
  std::istringstream cells(body);
  std::vector<Symbol> out;
  std::string tok;
  while (cells >> tok) out.push_back(alphabet->from_label(tok));
  if (out.empty()) throw IoError("lattice text: no cells");
  return Lattice(std::move(out), alphabet);
}

}  // namespace sead

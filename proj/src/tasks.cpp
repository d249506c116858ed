#include "sead/tasks.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace sead {

const char* task_name(TaskId id) {
  switch (id) {
    case TaskId::parity: return "parity";
    case TaskId::addition: return "addition";
    case TaskId::rule110: return "rule110";
  }
  return "?";
}

std::optional<TaskId> parse_task(const std::string& name) {
  if (name == "parity") return TaskId::parity;
  if (name == "addition") return TaskId::addition;
  if (name == "rule110") return TaskId::rule110;
  return std::nullopt;
}

const char* gen_mode_name(GenMode mode) {
  return mode == GenMode::random ? "random" : "adversarial";
}

std::optional<GenMode> parse_gen_mode(const std::string& name) {
  if (name == "random") return GenMode::random;
  if (name == "adversarial") return GenMode::adversarial;
  return std::nullopt;
}

namespace {

AlphabetRef parity_alphabet() {
  static const AlphabetRef a = std::make_shared<Alphabet>(
      "parity", 6, Symbol{0},
      std::vector<std::string>{"00", "01", "0?", "10", "11", "1?"});
  return a;
}

AlphabetRef addition_alphabet() {
  std::vector<std::string> labels;
  for (int ab = 0; ab < 4; ++ab) {
    for (int c = 0; c < 3; ++c) {
      std::string l;
      l += static_cast<char>('0' + (ab >> 1));
      l += static_cast<char>('0' + (ab & 1));
      l += c == add_sym::kUnknown ? '?' : static_cast<char>('0' + c);
      labels.push_back(l);
    }
  }
  static const AlphabetRef a = std::make_shared<Alphabet>(
      "addition", 12, Symbol{0}, std::move(labels));
  return a;
}

AlphabetRef rule110_alphabet() {
  static const AlphabetRef a = std::make_shared<Alphabet>(
      "rule110", 2, Symbol{0}, std::vector<std::string>{"0", "1"});
  return a;
}

int majority(int a, int b, int c) { return (a + b + c) >= 2 ? 1 : 0; }

}  // namespace

Symbol parity_local_rule(std::span<const Symbol> window) {
  using namespace parity_sym;
  const Symbol left = window[0];
  const Symbol center = window[1];
  const int x = x_of(center);
  // The v channel rides a resolution wave: once the left neighbor carries a
  // known prefix parity, this cell's parity is forced; until then it keeps
  // whatever it has. Recomputing from the left neighbor (rather than
  // freezing) makes resolved-but-inconsistent states heal toward the unique
  // self-consistent fixed point.
  const int lv = v_of(left);
  const int v = (lv == kUnknown) ? v_of(center) : (lv ^ x);
  return make(x, v);
}

Symbol addition_local_rule(std::span<const Symbol> window) {
  using namespace add_sym;
  const Symbol left = window[0];  // LSB-side neighbor; carries flow upward
  const Symbol center = window[1];
  const int a = a_of(center);
  const int b = b_of(center);
  int c = c_of(center);
  if (c == kUnknown) {
    const int na = a_of(left), nb = b_of(left), nc = c_of(left);
    if (nc != kUnknown) {
      c = majority(na, nb, nc);
    } else if (na == nb) {
      // Generate/kill shortcut: equal operand bits fix the carry-out of the
      // neighbor regardless of its own carry-in. This is what makes random
      // inputs converge in O(log L) instead of O(L).
      c = na;
    }
  }
  return make(a, b, c);
}

Symbol rule110_local_rule(std::span<const Symbol> window) {
  const int k = 4 * window[0] + 2 * window[1] + window[2];
  return static_cast<Symbol>((110 >> k) & 1);
}

const TaskSpec& task(TaskId id) {
  static const TaskSpec parity{TaskId::parity, "parity", parity_alphabet(), 1,
                               true, LocalRule(parity_local_rule)};
  static const TaskSpec addition{TaskId::addition, "addition",
                                 addition_alphabet(), 1, true,
                                 LocalRule(addition_local_rule)};
  static const TaskSpec rule110{TaskId::rule110, "rule110", rule110_alphabet(),
                                1, false, LocalRule(rule110_local_rule)};
  switch (id) {
    case TaskId::parity: return parity;
    case TaskId::addition: return addition;
    case TaskId::rule110: return rule110;
  }
  throw ContractViolation("unknown task id");
}

Lattice encode_parity(const BitString& x) {
  if (x.empty()) throw ContractViolation("parity input must be non-empty");
  std::vector<Symbol> cells(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    cells[i] = parity_sym::make(x[i], parity_sym::kUnknown);
  return Lattice(std::move(cells), parity_alphabet());
}

Lattice encode_addition(const BitString& a, const BitString& b) {
  if (a.size() != b.size())
    throw ContractViolation("addition operands must have equal length");
  if (a.empty()) throw ContractViolation("addition input must be non-empty");
  std::vector<Symbol> cells(a.size() + 1);
  // Cell 0's carry-in is a known zero; the boundary does the seeding. The
  // extra cell L receives the final carry-out.
  cells[0] = add_sym::make(a[0], b[0], 0);
  for (std::size_t i = 1; i < a.size(); ++i)
    cells[i] = add_sym::make(a[i], b[i], add_sym::kUnknown);
  cells[a.size()] = add_sym::make(0, 0, add_sym::kUnknown);
  return Lattice(std::move(cells), addition_alphabet());
}

Lattice encode_rule110(const BitString& bits) {
  if (bits.empty()) throw ContractViolation("rule110 input must be non-empty");
  std::vector<Symbol> cells(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i)
    cells[i] = static_cast<Symbol>(bits[i] & 1);
  return Lattice(std::move(cells), rule110_alphabet());
}

Lattice encode_input(const TaskSpec& spec, const TaskInput& input) {
  switch (spec.id) {
    case TaskId::parity: return encode_parity(input.a);
    case TaskId::addition: return encode_addition(input.a, input.b);
    case TaskId::rule110: return encode_rule110(input.a);
  }
  throw ContractViolation("unknown task id");
}

BitString decode_parity(const Lattice& lat) {
  BitString out(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const int v = parity_sym::v_of(lat.cells[i]);
    if (v == parity_sym::kUnknown)
      throw NotConverged("decode_parity: unresolved cell " +
                         std::to_string(i));
    out[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

BitString decode_sum(const Lattice& lat) {
  BitString out(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const Symbol s = lat.cells[i];
    const int c = add_sym::c_of(s);
    if (c == add_sym::kUnknown)
      throw NotConverged("decode_sum: unresolved carry at cell " +
                         std::to_string(i));
    out[i] = static_cast<std::uint8_t>(add_sym::a_of(s) ^ add_sym::b_of(s) ^ c);
  }
  return out;
}

BitString decode_output(const TaskSpec& spec, const Lattice& lat) {
  switch (spec.id) {
    case TaskId::parity: return decode_parity(lat);
    case TaskId::addition: return decode_sum(lat);
    case TaskId::rule110: {
      BitString out(lat.size());
      for (std::size_t i = 0; i < lat.size(); ++i)
        out[i] = static_cast<std::uint8_t>(lat.cells[i]);
      return out;
    }
  }
  throw ContractViolation("unknown task id");
}

TaskInput gen_input(const TaskSpec& spec, std::size_t length, GenMode mode,
                    std::uint64_t seed) {
  if (length == 0) throw ContractViolation("gen_input: length must be >= 1");
  TaskInput input;
  if (mode == GenMode::adversarial) {
    if (spec.id != TaskId::addition)
      throw ContractViolation(
          "adversarial inputs are defined for addition only");
    input.a.assign(length, 1);
    input.b.assign(length, 0);
    input.b[0] = 1;
    return input;
  }
  Rng rng(seed);
  input.a.resize(length);
  for (auto& bit : input.a) bit = static_cast<std::uint8_t>(rng.bit());
  if (spec.id == TaskId::addition) {
    input.b.resize(length);
    for (auto& bit : input.b) bit = static_cast<std::uint8_t>(rng.bit());
  }
  return input;
}

BitString global_oracle(const TaskSpec& spec, const TaskInput& input) {
  switch (spec.id) {
    case TaskId::parity: {
      BitString out(input.a.size());
      std::uint8_t acc = 0;
      for (std::size_t i = 0; i < input.a.size(); ++i) {
        acc ^= input.a[i];
        out[i] = acc;
      }
      return out;
    }
    case TaskId::addition: {
      if (input.a.size() != input.b.size())
        throw ContractViolation("addition operands must have equal length");
      BitString out(input.a.size() + 1);
      int carry = 0;
      for (std::size_t i = 0; i < input.a.size(); ++i) {
        const int s = input.a[i] + input.b[i] + carry;
        out[i] = static_cast<std::uint8_t>(s & 1);
        carry = s >> 1;
      }
      out[input.a.size()] = static_cast<std::uint8_t>(carry);
      return out;
    }
    case TaskId::rule110: {
      Lattice next =
          apply_local_rule(encode_rule110(input.a), 1, rule110_local_rule);
      BitString out(next.size());
      for (std::size_t i = 0; i < next.size(); ++i)
        out[i] = static_cast<std::uint8_t>(next.cells[i]);
      return out;
    }
  }
  throw ContractViolation("unknown task id");
}

OracleRun evolve_oracle(const TaskSpec& spec, const Lattice& start,
                        std::size_t cap) {
  if (cap == 0) cap = 4 * start.size() + 64;
  std::vector<Symbol> cur = start.cells;
  std::vector<Symbol> next(cur.size());
  const Symbol q = start.alphabet->quiescent;
  std::size_t steps = 0;
  bool converged = false;
  while (steps < cap) {
    apply_local_rule_buf(cur, next, spec.radius, q, spec.oracle);
    ++steps;
    if (cur == next) {
      converged = true;
      break;
    }
    std::swap(cur, next);
  }
  return OracleRun{Lattice(std::move(cur), start.alphabet), steps, converged};
}

std::size_t oracle_convergence_steps(const TaskSpec& spec,
                                     const TaskInput& input, std::size_t cap) {
  if (!spec.has_fixed_point)
    throw ContractViolation("task '" + spec.name +
                            "' has no fixed-point semantics");
  const OracleRun run = evolve_oracle(spec, encode_input(spec, input), cap);
  if (!run.converged)
    throw NotConverged("oracle evolution hit the step cap without converging");
  return run.steps;
}

void write_input_fixture(std::ostream& os, const InputFixture& fx) {
  os << task_name(fx.task) << ' ' << fx.length << ' ' << gen_mode_name(fx.mode)
     << ' ' << fx.seed << '\n';
  auto line = [&os](const BitString& bits) {
    for (auto b : bits) os << static_cast<char>('0' + (b & 1));
    os << '\n';
  };
  line(fx.input.a);
  if (fx.task == TaskId::addition) line(fx.input.b);
}

InputFixture read_input_fixture(std::istream& is) {
  InputFixture fx;
  std::string header;
  if (!std::getline(is, header)) throw IoError("input fixture: missing header");
  std::istringstream hs(header);
  std::string tname, mname;
  if (!(hs >> tname >> fx.length >> mname >> fx.seed))
    throw IoError("input fixture: malformed header '" + header + "'");
  const auto tid = parse_task(tname);
  if (!tid) throw IoError("input fixture: unknown task '" + tname + "'");
  fx.task = *tid;
  const auto mode = parse_gen_mode(mname);
  if (!mode) throw IoError("input fixture: unknown mode '" + mname + "'");
  fx.mode = *mode;
  auto read_bits = [&is, &fx](const char* which) {
    std::string line;
    if (!std::getline(is, line))
      throw IoError(std::string("input fixture: missing operand ") + which);
    BitString bits;
    bits.reserve(line.size());
    for (char ch : line) {
      if (ch == '0' || ch == '1')
        bits.push_back(static_cast<std::uint8_t>(ch - '0'));
      else if (ch != '\r')
        throw IoError("input fixture: operand must be 0/1 characters");
    }
    if (bits.size() != fx.length)
      throw IoError("input fixture: operand length does not match header");
    return bits;
  };
  fx.input.a = read_bits("a");
  if (fx.task == TaskId::addition) fx.input.b = read_bits("b");
  return fx;
}

}  // namespace sead

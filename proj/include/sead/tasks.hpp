#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sead/lattice.hpp"

namespace sead {

enum class TaskId { parity, addition, rule110 };

const char* task_name(TaskId id);
std::optional<TaskId> parse_task(const std::string& name);

// Bit arrays, index 0 = least significant bit / first element.
using BitString = std::vector<std::uint8_t>;

// One task input. Addition uses both operands; parity and rule110 use `a`.
struct TaskInput {
  BitString a;
  BitString b;
};

// Parity cell state: (x, v) where x is the frozen input bit and v the
// running prefix-parity, v in {0, 1, unknown}. The quiescent symbol (x=0,
// v=0) acts as a resolved zero at the boundary, which seeds the resolution
// wave at cell 0; the wave then advances one cell per step, so a length-L
// input converges in exactly L steps plus the confirming one.
namespace parity_sym {
inline constexpr int kUnknown = 2;  // v channel code
inline Symbol make(int x, int v) { return static_cast<Symbol>(x * 3 + v); }
inline int x_of(Symbol s) { return s / 3; }
inline int v_of(Symbol s) { return s % 3; }
}  // namespace parity_sym

// Addition cell state: (a, b, c) with frozen operand bits and carry-in
// status c in {0, 1, unknown}. Carries resolve monotonically.
namespace add_sym {
inline constexpr int kUnknown = 2;  // c channel code
inline Symbol make(int a, int b, int c) {
  return static_cast<Symbol>((a * 2 + b) * 3 + c);
}
inline int a_of(Symbol s) { return s / 6; }
inline int b_of(Symbol s) { return (s / 3) % 2; }
inline int c_of(Symbol s) { return s % 3; }
}  // namespace add_sym

Symbol parity_local_rule(std::span<const Symbol> window);
Symbol addition_local_rule(std::span<const Symbol> window);
Symbol rule110_local_rule(std::span<const Symbol> window);

// Task descriptor: alphabet, radius, reference local rule, termination kind.
struct TaskSpec {
  TaskId id;
  std::string name;
  AlphabetRef alphabet;
  int radius = 1;
  bool has_fixed_point = true;
  LocalRule oracle;
};

const TaskSpec& task(TaskId id);

Lattice encode_parity(const BitString& x);
Lattice encode_addition(const BitString& a, const BitString& b);
Lattice encode_rule110(const BitString& bits);
Lattice encode_input(const TaskSpec& spec, const TaskInput& input);

// Decoders require a converged lattice (no unknown channels) and throw
// NotConverged otherwise. decode_sum returns L+1 bits including carry-out.
BitString decode_parity(const Lattice& lat);
BitString decode_sum(const Lattice& lat);
BitString decode_output(const TaskSpec& spec, const Lattice& lat);

enum class GenMode { random, adversarial };

const char* gen_mode_name(GenMode mode);
std::optional<GenMode> parse_gen_mode(const std::string& name);

// Random mode draws i.i.d. uniform bits from the seed; adversarial
// (addition only) is a = 1^L, b = 10^(L-1), the full carry chain.
TaskInput gen_input(const TaskSpec& spec, std::size_t length, GenMode mode,
                    std::uint64_t seed);

// Independent global answer: prefix XOR, schoolbook bit addition (handles
// L = 10^6 without native-integer overflow), or one rule-110 step.
BitString global_oracle(const TaskSpec& spec, const TaskInput& input);

// Steps to the oracle rule's fixed point, counting the confirming no-change
// application. cap = 0 means 4L + 64.
std::size_t oracle_convergence_steps(const TaskSpec& spec,
                                     const TaskInput& input,
                                     std::size_t cap = 0);

// Dense oracle evolution used by the step-count and soundness oracles.
struct OracleRun {
  Lattice final_lattice;
  std::size_t steps = 0;
  bool converged = false;
};
OracleRun evolve_oracle(const TaskSpec& spec, const Lattice& start,
                        std::size_t cap = 0);

// Input fixture format: header "task L mode seed", then one operand line of
// 0/1 characters per operand, LSB-first.
struct InputFixture {
  TaskId task;
  std::size_t length = 0;
  GenMode mode = GenMode::random;
  std::uint64_t seed = 0;
  TaskInput input;
};

void write_input_fixture(std::ostream& os, const InputFixture& fx);
InputFixture read_input_fixture(std::istream& is);

}  // namespace sead

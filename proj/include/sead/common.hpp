#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace sead {

// Base error for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// An operation required a converged lattice and did not get one.
class NotConverged : public Error {
 public:
  using Error::Error;
};

// Malformed, truncated, or otherwise unreadable file.
class IoError : public Error {
 public:
  using Error::Error;
};

// Deterministic RNG with pinned output semantics. std::mt19937_64 output is
// specified by the standard; the distribution helpers below avoid
// std::uniform_*_distribution, whose mapping is implementation-defined, so
// seeded values frozen into tests do not depend on the C++ runtime.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform integer in [0, n). Multiply-shift; bias is < 2^-32.
  std::uint32_t below(std::uint32_t n) {
    std::uint64_t x = next_u64() >> 32;
    return static_cast<std::uint32_t>((x * n) >> 32);
  }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(below(static_cast<std::uint32_t>(n)));
  }

  int bit() { return static_cast<int>(next_u64() & 1u); }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  std::mt19937_64 gen_;
};

// splitmix64 finalizer; used to derive independent seed streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream));
}

// FNV-1a 64-bit, used as the payload checksum in file formats.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sead

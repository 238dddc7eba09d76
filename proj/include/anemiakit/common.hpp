#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace anemiakit {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo,
  kSchemaViolation,
  kInvalidMeasurement,
  kMissingAnthropometry,
  kUnimputable,
  kInfeasible,
  kDegenerate,
  kNumeric,
  kDiverged,
  kSearchFailure,
  kInternal,
};

std::string_view error_code_name(ErrorCode code);

// All recoverable failures inside the library are reported through this
// exception; the C API maps the code onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

using Labels = std::vector<int>;

/// SplitMix64 finalizer. Used both as the RNG core and to derive
/// independent sub-seeds from a parent seed.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view text);

/// Derives a child seed from a parent seed and a stage label plus optional
/// integer coordinates. Labels make sub-streams independent of how many
/// siblings exist.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label,
                          std::uint64_t a = 0, std::uint64_t b = 0);

/// Small, portable PRNG (xoshiro256**). Results do not depend on the
/// standard library implementation, which keeps reports byte-identical
/// across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Exceptions
/// from the body are rethrown (the first one by index) after all workers
/// have joined.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& body);

double sigmoid(double z);

}  // namespace anemiakit

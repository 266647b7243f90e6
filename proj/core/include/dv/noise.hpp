#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dv/oracle.hpp"
#include "dv/semivalue.hpp"

namespace dv {

enum class NoiseKind { kGaussian, kBoundedAdversarial, kRepeatAverage };

struct NoiseModel {
  NoiseKind kind = NoiseKind::kGaussian;
  std::uint64_t seed = 0;
  double sigma = 0.0;       // gaussian
  std::size_t repeats = 1;  // repeat_average

  // bounded_adversarial, pair form: perturb D_{i,j} against `spec`.
  std::optional<SemivalueSpec> spec;
  std::size_t i = 0;
  std::size_t j = 1;
  double magnitude = 0.0;
  // bounded_adversarial, per-subset form: U(S) + b if target in S, else U(S) - b.
  std::optional<std::size_t> target;
  double bound = 0.0;

  static NoiseModel gaussian(double sigma, std::uint64_t seed);
  static NoiseModel repeat_average(std::size_t k);
  static NoiseModel pair_adversarial(SemivalueSpec spec, std::size_t i, std::size_t j,
                                     double magnitude);
  static NoiseModel bounded_per_subset(std::size_t target, double bound);
};

struct NoisyOracle {
  OraclePtr oracle;
  std::vector<std::string> warnings;
};

// gaussian: adds N(0, sigma^2) seeded per subset, so one subset always sees
// the same noise under a given seed. repeat_average: mean of k independent
// base draws; a deterministic base comes back unchanged with a warning.
NoisyOracle apply_noise(OraclePtr base, const NoiseModel& model);

}  // namespace dv

#include "dv/noise.hpp"

#include <random>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"
#include "dv/robustness.hpp"

namespace dv {

namespace {

std::uint64_t subset_hash(const SubsetKey& s) {
  std::uint64_t h = mix64(s.n());
  for (auto w : s.words()) h = mix64(h ^ w);
  return h;
}

class GaussianNoiseOracle final : public UtilityOracle {
 public:
  GaussianNoiseOracle(OraclePtr base, double sigma, std::uint64_t seed)
      : base_(std::move(base)), sigma_(sigma), seed_(seed) {}
  std::size_t n() const override { return base_->n(); }
  double evaluate(const SubsetKey& s, std::uint64_t eval_seed) const override {
    std::mt19937_64 rng(derive_seed(seed_, subset_hash(s)));
    std::normal_distribution<double> g(0.0, sigma_);
    return base_->evaluate(s, eval_seed) + g(rng);
  }
  bool deterministic() const override { return base_->deterministic(); }
  bool bounded() const override { return false; }
  std::string description() const override {
    return base_->description() + "+gaussian(" + std::to_string(sigma_) + ",seed=" +
           std::to_string(seed_) + ")";
  }

 private:
  OraclePtr base_;
  double sigma_;
  std::uint64_t seed_;
};

class RepeatAverageOracle final : public UtilityOracle {
 public:
  RepeatAverageOracle(OraclePtr base, std::size_t k) : base_(std::move(base)), k_(k) {}
  std::size_t n() const override { return base_->n(); }
  double evaluate(const SubsetKey& s, std::uint64_t eval_seed) const override {
    CompensatedSum acc;
    for (std::size_t r = 0; r < k_; ++r) acc += base_->evaluate(s, derive_seed(eval_seed, r));
    return acc.value() / static_cast<double>(k_);
  }
  bool deterministic() const override { return false; }
  bool bounded() const override { return base_->bounded(); }
  std::string description() const override {
    return base_->description() + "+repeat(" + std::to_string(k_) + ")";
  }

 private:
  OraclePtr base_;
  std::size_t k_;
};

class SignedBoundOracle final : public UtilityOracle {
 public:
  SignedBoundOracle(OraclePtr base, std::size_t target, double bound)
      : base_(std::move(base)), target_(target), bound_(bound) {}
  std::size_t n() const override { return base_->n(); }
  double evaluate(const SubsetKey& s, std::uint64_t eval_seed) const override {
    return base_->evaluate(s, eval_seed) + (s.contains(target_) ? bound_ : -bound_);
  }
  bool deterministic() const override { return base_->deterministic(); }
  bool bounded() const override { return false; }
  std::string description() const override {
    return base_->description() + "+bounded(" + std::to_string(target_) + "," +
           std::to_string(bound_) + ")";
  }

 private:
  OraclePtr base_;
  std::size_t target_;
  double bound_;
};

}  // namespace

NoiseModel NoiseModel::gaussian(double sigma, std::uint64_t seed) {
  NoiseModel m;
  m.kind = NoiseKind::kGaussian;
  m.sigma = sigma;
  m.seed = seed;
  return m;
}

NoiseModel NoiseModel::repeat_average(std::size_t k) {
  NoiseModel m;
  m.kind = NoiseKind::kRepeatAverage;
  m.repeats = k;
  return m;
}

NoiseModel NoiseModel::pair_adversarial(SemivalueSpec spec, std::size_t i, std::size_t j,
                                        double magnitude) {
  NoiseModel m;
  m.kind = NoiseKind::kBoundedAdversarial;
  m.spec = std::move(spec);
  m.i = i;
  m.j = j;
  m.magnitude = magnitude;
  return m;
}

NoiseModel NoiseModel::bounded_per_subset(std::size_t target, double bound) {
  NoiseModel m;
  m.kind = NoiseKind::kBoundedAdversarial;
  m.target = target;
  m.bound = bound;
  return m;
}

NoisyOracle apply_noise(OraclePtr base, const NoiseModel& model) {
  if (!base) throw Error(ErrorCode::kInvalidParam, "null oracle");
  NoisyOracle out;
  switch (model.kind) {
    case NoiseKind::kGaussian:
      if (!(model.sigma >= 0)) throw Error(ErrorCode::kInvalidParam, "sigma must be >= 0");
      out.oracle = model.sigma == 0.0
                       ? base
                       : std::make_shared<GaussianNoiseOracle>(base, model.sigma, model.seed);
      break;
    case NoiseKind::kRepeatAverage:
      if (model.repeats == 0) throw Error(ErrorCode::kInvalidParam, "repeat count must be >= 1");
      if (base->deterministic()) {
        out.oracle = base;
        out.warnings.push_back("ModelMismatch: repeat_average on a deterministic oracle");
      } else {
        out.oracle = std::make_shared<RepeatAverageOracle>(base, model.repeats);
      }
      break;
    case NoiseKind::kBoundedAdversarial:
      if (model.target) {
        if (*model.target >= base->n()) throw Error(ErrorCode::kInvalidParam, "target outside cohort");
        if (!(model.bound >= 0)) throw Error(ErrorCode::kInvalidParam, "bound must be >= 0");
        out.oracle = std::make_shared<SignedBoundOracle>(base, *model.target, model.bound);
      } else {
        if (!model.spec) throw Error(ErrorCode::kInvalidParam, "pair adversarial noise needs a spec");
        auto p = adversarial_perturbation(*base, *model.spec, model.i, model.j, model.magnitude);
        if (p.out_of_range) out.warnings.push_back("perturbed scores leave [0,1]");
        out.oracle = std::move(p.oracle);
      }
      break;
  }
  return out;
}

}  // namespace dv

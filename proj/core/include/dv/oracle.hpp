#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dv/subset.hpp"

namespace dv {

// U : 2^N -> R. Stochastic oracles (a trainer with SGD, say) take the draw
// identity from eval_seed, so two calls with the same (subset, eval_seed)
// always agree and evaluate() stays const and thread-safe. Deterministic
// oracles ignore eval_seed.
class UtilityOracle {
 public:
  virtual ~UtilityOracle() = default;

  virtual std::size_t n() const = 0;
  virtual double evaluate(const SubsetKey& subset, std::uint64_t eval_seed) const = 0;
  virtual bool deterministic() const = 0;
  // True when every score is guaranteed to lie in [0, 1].
  virtual bool bounded() const { return true; }
  virtual std::string description() const = 0;

  double operator()(const SubsetKey& subset, std::uint64_t eval_seed = 0) const {
    return evaluate(subset, eval_seed);
  }
};

using OraclePtr = std::shared_ptr<const UtilityOracle>;

class ConstantGame final : public UtilityOracle {
 public:
  ConstantGame(std::size_t n, double value);
  std::size_t n() const override { return n_; }
  double evaluate(const SubsetKey&, std::uint64_t) const override { return value_; }
  bool deterministic() const override { return true; }
  bool bounded() const override { return value_ >= 0.0 && value_ <= 1.0; }
  std::string description() const override;

 private:
  std::size_t n_;
  double value_;
};

// U(S) = offset + sum_{i in S} a_i.
class AdditiveGame final : public UtilityOracle {
 public:
  explicit AdditiveGame(std::vector<double> contributions, double offset = 0.0);
  std::size_t n() const override { return a_.size(); }
  double evaluate(const SubsetKey& subset, std::uint64_t) const override;
  bool deterministic() const override { return true; }
  bool bounded() const override;
  std::string description() const override;

 private:
  std::vector<double> a_;
  double offset_;
};

// Explicit utility vector indexed by subset bitmask (n <= 30).
class TableGame final : public UtilityOracle {
 public:
  TableGame(std::size_t n, std::vector<double> table, std::string label = "table");
  std::size_t n() const override { return n_; }
  double evaluate(const SubsetKey& subset, std::uint64_t) const override;
  bool deterministic() const override { return true; }
  bool bounded() const override { return bounded_; }
  std::string description() const override;

  double at(std::uint64_t mask) const { return table_[mask]; }
  const std::vector<double>& table() const noexcept { return table_; }

 private:
  std::size_t n_;
  std::vector<double> table_;
  std::string label_;
  std::string description_;
  bool bounded_;
};

class FunctionGame final : public UtilityOracle {
 public:
  using Fn = std::function<double(const SubsetKey&, std::uint64_t)>;
  FunctionGame(std::size_t n, Fn fn, bool deterministic, std::string label,
               bool bounded = true);
  std::size_t n() const override { return n_; }
  double evaluate(const SubsetKey& subset, std::uint64_t seed) const override {
    return fn_(subset, seed);
  }
  bool deterministic() const override { return deterministic_; }
  bool bounded() const override { return bounded_; }
  std::string description() const override { return label_; }

 private:
  std::size_t n_;
  Fn fn_;
  bool deterministic_;
  std::string label_;
  bool bounded_;
};

// Wraps another oracle and counts evaluate() calls.
class CountingOracle final : public UtilityOracle {
 public:
  explicit CountingOracle(OraclePtr base) : base_(std::move(base)) {}
  std::size_t n() const override { return base_->n(); }
  double evaluate(const SubsetKey& subset, std::uint64_t seed) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return base_->evaluate(subset, seed);
  }
  bool deterministic() const override { return base_->deterministic(); }
  bool bounded() const override { return base_->bounded(); }
  std::string description() const override { return base_->description(); }

  std::size_t calls() const noexcept { return calls_.load(); }
  void reset() noexcept { calls_ = 0; }

 private:
  OraclePtr base_;
  mutable std::atomic<std::size_t> calls_{0};
};

// Evaluates U on all 2^n subsets (mask order). Stochastic oracles get one draw
// per subset with eval_seed = derive_seed(seed, mask).
std::vector<double> tabulate(const UtilityOracle& oracle, std::uint64_t seed = 0,
                             std::size_t workers = 1);

// Uniform [0,1) scores on every subset.
std::shared_ptr<TableGame> random_game(std::size_t n, std::uint64_t seed);

}  // namespace dv

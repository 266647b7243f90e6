#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "dv/oracle.hpp"
#include "dv/subset.hpp"

namespace dv {

// Utility-score cache keyed by (oracle description hash, subset, eval_seed).
// Optionally backed by an append-only JSON Lines file:
//   {"key": "<16 hex>", "subset": "0,3", "eval_seed": 0, "score": 0.75}
// Lines that fail to parse are dropped on load and the file is rewritten.
class EvalCache {
 public:
  EvalCache() = default;
  explicit EvalCache(std::filesystem::path path);

  EvalCache(const EvalCache&) = delete;
  EvalCache& operator=(const EvalCache&) = delete;

  static std::string make_key(std::uint64_t oracle_hash, const SubsetKey& subset,
                              std::uint64_t eval_seed);

  std::optional<double> get(std::uint64_t oracle_hash, const SubsetKey& subset,
                            std::uint64_t eval_seed) const;
  void put(std::uint64_t oracle_hash, const SubsetKey& subset, std::uint64_t eval_seed,
           double score);

  std::size_t size() const;
  bool persistent() const noexcept { return persistent_; }
  // Set when the backing file could not be used; the cache then lives in memory.
  const std::string& warning() const noexcept { return warning_; }
  std::size_t skipped_lines() const noexcept { return skipped_lines_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  struct Entry {
    std::string subset;
    std::uint64_t eval_seed = 0;
    double score = 0.0;
  };

  void load();

  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Entry> entries_;
  std::filesystem::path path_;
  std::ofstream out_;
  bool persistent_ = false;
  std::string warning_;
  std::size_t skipped_lines_ = 0;
};

// Returns the cached score or evaluates, stores and returns it. Deterministic
// oracles are keyed with eval_seed = 0 regardless of the argument.
double cache_get_or_eval(EvalCache& cache, const UtilityOracle& oracle, const SubsetKey& subset,
                         std::uint64_t eval_seed);

// Serves an oracle through a cache.
class CachedOracle final : public UtilityOracle {
 public:
  CachedOracle(OraclePtr base, std::shared_ptr<EvalCache> cache);
  std::size_t n() const override { return base_->n(); }
  double evaluate(const SubsetKey& subset, std::uint64_t eval_seed) const override {
    return cache_get_or_eval(*cache_, *base_, subset, eval_seed);
  }
  bool deterministic() const override { return base_->deterministic(); }
  bool bounded() const override { return base_->bounded(); }
  std::string description() const override { return base_->description(); }

 private:
  OraclePtr base_;
  std::shared_ptr<EvalCache> cache_;
};

}  // namespace dv

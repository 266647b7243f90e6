#include "dv/eval_cache.hpp"

#include <cinttypes>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"

namespace dv {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string record_line(const std::string& key, const std::string& subset,
                        std::uint64_t eval_seed, double score) {
  return json{{"key", key}, {"subset", subset}, {"eval_seed", eval_seed}, {"score", score}}.dump();
}

}  // namespace

EvalCache::EvalCache(std::filesystem::path path) : path_(std::move(path)) {
  try {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    load();
    out_.open(path_, std::ios::app);
    if (!out_) throw Error(ErrorCode::kStorageFailure, "cannot open '" + path_.string() + "'");
    persistent_ = true;
  } catch (const std::exception& e) {
    warning_ = std::string("StorageFailure: ") + e.what() + "; using in-memory cache";
    std::cerr << "warning: " << warning_ << '\n';
    persistent_ = false;
  }
}

void EvalCache::load() {
  std::ifstream in(path_);
  if (!in) return;  // fresh cache
  std::vector<std::string> good;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json rec = json::parse(line);
      Entry e;
      const auto key = rec.at("key").get<std::string>();
      e.subset = rec.at("subset").get<std::string>();
      e.eval_seed = rec.at("eval_seed").get<std::uint64_t>();
      e.score = rec.at("score").get<double>();
      if (key.size() != 16) throw std::runtime_error("bad key");
      entries_[key] = std::move(e);
      good.push_back(line);
    } catch (const std::exception&) {
      ++skipped_lines_;
    }
  }
  in.close();
  if (skipped_lines_ > 0) {
    std::ofstream rewrite(path_, std::ios::trunc);
    if (!rewrite) throw Error(ErrorCode::kStorageFailure, "cannot repair '" + path_.string() + "'");
    for (const auto& g : good) rewrite << g << '\n';
  }
}

std::string EvalCache::make_key(std::uint64_t oracle_hash, const SubsetKey& subset,
                                std::uint64_t eval_seed) {
  std::uint64_t h = fnv1a(hex64(oracle_hash));
  h = fnv1a("|" + subset.to_string() + "|", h);
  h = fnv1a(std::to_string(eval_seed), h);
  return hex64(h);
}

std::optional<double> EvalCache::get(std::uint64_t oracle_hash, const SubsetKey& subset,
                                     std::uint64_t eval_seed) const {
  const auto key = make_key(oracle_hash, subset, eval_seed);
  std::shared_lock lock(mu_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  if (it->second.eval_seed != eval_seed || it->second.subset != subset.to_string()) {
    return std::nullopt;  // hash collision
  }
  return it->second.score;
}

void EvalCache::put(std::uint64_t oracle_hash, const SubsetKey& subset, std::uint64_t eval_seed,
                    double score) {
  const auto key = make_key(oracle_hash, subset, eval_seed);
  Entry e{subset.to_string(), eval_seed, score};
  std::unique_lock lock(mu_);
  if (persistent_) {
    out_ << record_line(key, e.subset, eval_seed, score) << '\n';
    out_.flush();
    if (!out_) {
      persistent_ = false;
      warning_ = "StorageFailure: write to '" + path_.string() + "' failed; using in-memory cache";
      std::cerr << "warning: " << warning_ << '\n';
    }
  }
  entries_[key] = std::move(e);
}

std::size_t EvalCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

double cache_get_or_eval(EvalCache& cache, const UtilityOracle& oracle, const SubsetKey& subset,
                         std::uint64_t eval_seed) {
  const std::uint64_t oracle_hash = fnv1a(oracle.description());
  const std::uint64_t seed = oracle.deterministic() ? 0 : eval_seed;
  if (auto hit = cache.get(oracle_hash, subset, seed)) return *hit;
  const double score = oracle.evaluate(subset, seed);
  cache.put(oracle_hash, subset, seed, score);
  return score;
}

CachedOracle::CachedOracle(OraclePtr base, std::shared_ptr<EvalCache> cache)
    : base_(std::move(base)), cache_(std::move(cache)) {
  if (!base_ || !cache_) throw Error(ErrorCode::kInvalidParam, "null oracle or cache");
}

}  // namespace dv

// dvtool: data valuation experiments from the command line.
//
// Every command resolves one JSON config (defaults < --config file < flags),
// echoes it into its payload and writes the payload atomically. Payloads are
// pure functions of the config; wall-clock data goes to <out>.meta.json.

#include <array>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dv/dataset.hpp"
#include "dv/errors.hpp"
#include "dv/estimators.hpp"
#include "dv/eval_cache.hpp"
#include "dv/evalkit.hpp"
#include "dv/experiments.hpp"
#include "dv/model_oracle.hpp"
#include "dv/noise.hpp"
#include "dv/numeric.hpp"
#include "dv/robustness.hpp"
#include "dv/semivalue.hpp"
#include "dv/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Options bound to typed storage; only flags given on the command line make
// it into the patch.
class FlagSet {
 public:
  template <class T>
  CLI::Option* add(CLI::App* app, const std::string& name, const std::string& pointer,
                   const std::string& help) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(name, *value, help);
    entries_.push_back({opt, [value, pointer](json& j) { j[json::json_pointer(pointer)] = *value; }});
    return opt;
  }
  CLI::Option* add_list(CLI::App* app, const std::string& name, const std::string& pointer,
                        const std::string& help) {
    return add<std::vector<std::string>>(app, name, pointer, help)->delimiter(',');
  }
  CLI::Option* add_switch(CLI::App* app, const std::string& name, const std::string& pointer,
                          const std::string& help) {
    auto* opt = app->add_flag(name, help);
    entries_.push_back({opt, [pointer](json& j) { j[json::json_pointer(pointer)] = true; }});
    return opt;
  }
  json patch() const {
    json j = json::object();
    for (const auto& e : entries_) {
      if (e.opt->count() > 0) e.apply(j);
    }
    return j;
  }

 private:
  struct Entry {
    CLI::Option* opt;
    std::function<void(json&)> apply;
  };
  std::vector<Entry> entries_;
};

struct Plumbing {
  std::string config_file;
  std::string out;
  std::string csv_out;
  std::string ledger;
  std::size_t workers = 1;
};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  FlagSet flags;
  json defaults;
  Plumbing plumbing;
};

json trainer_defaults() { return json(dv::TrainerConfig{}); }

json dataset_defaults(std::size_t synthetic) {
  return {{"synthetic", synthetic}, {"validation_fraction", 0.2}};
}

void add_common(Command& c, bool with_data) {
  c.app->add_option("--config", c.plumbing.config_file, "JSON config file (flags override it)");
  c.app->add_option("--out", c.plumbing.out, "payload path (stdout when omitted)");
  c.app->add_option("--workers", c.plumbing.workers, "concurrent oracle evaluations")
      ->check(CLI::PositiveNumber);
  c.flags.add<std::uint64_t>(c.app, "--seed", "/seed", "experiment seed");
  if (!with_data) return;
  c.flags.add<std::size_t>(c.app, "--synthetic", "/dataset/synthetic", "synthetic dataset size");
  c.flags.add<std::uint64_t>(c.app, "--dataset-seed", "/dataset/seed",
                             "dataset seed (synthetic draw or split; defaults to --seed)");
  c.flags.add<std::string>(c.app, "--csv", "/dataset/csv", "training CSV (last column label)");
  c.flags.add<std::string>(c.app, "--validation", "/dataset/validation", "validation CSV");
  c.flags.add<double>(c.app, "--validation-fraction", "/dataset/validation_fraction",
                      "held-out share when no validation CSV is given");
  c.flags.add<std::string>(c.app, "--model", "/trainer/model", "logistic_regression | linear");
  c.flags.add<std::string>(c.app, "--optimizer", "/trainer/optimizer",
                           "full_batch_gd | minibatch_sgd | smoothed_gd");
  c.flags.add<double>(c.app, "--lr", "/trainer/learning_rate", "learning rate");
  c.flags.add<std::size_t>(c.app, "--epochs", "/trainer/epochs", "training epochs");
  c.flags.add<std::size_t>(c.app, "--batch-size", "/trainer/batch_size", "minibatch size");
  c.flags.add<std::string>(c.app, "--init", "/trainer/init", "zeros | gaussian");
  c.flags.add<double>(c.app, "--smoothing-radius", "/trainer/smoothing_radius",
                      "smoothed_gd perturbation radius");
  c.flags.add<std::size_t>(c.app, "--smoothing-samples", "/trainer/smoothing_samples",
                           "smoothed_gd perturbations per step");
  c.flags.add<std::uint64_t>(c.app, "--trainer-seed", "/trainer/seed", "trainer seed");
}

json resolve(const Command& c) {
  json cfg = c.defaults;
  if (!c.plumbing.config_file.empty()) {
    std::ifstream in(c.plumbing.config_file);
    if (!in) throw ConfigError("cannot open config '" + c.plumbing.config_file + "'");
    json file;
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("bad config '" + c.plumbing.config_file + "': " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    file.erase("command");
    cfg.merge_patch(file);
  }
  cfg.merge_patch(c.flags.patch());
  cfg["command"] = c.name;
  if (cfg.contains("dataset")) {
    json& ds = cfg["dataset"];
    if (ds.contains("csv")) ds.erase("synthetic");
    // The dataset follows the experiment seed unless pinned separately.
    if (!ds.contains("seed")) ds["seed"] = cfg.value("seed", std::uint64_t{0});
  }
  return cfg;
}

template <class T>
T get(const json& cfg, const std::string& pointer) {
  try {
    return cfg.at(json::json_pointer(pointer)).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field " + pointer + ": " + e.what());
  }
}

std::vector<double> get_doubles(const json& cfg, const std::string& pointer) {
  const json& v = cfg.at(json::json_pointer(pointer));
  std::vector<double> out;
  for (const auto& x : v) {
    if (x.is_number()) {
      out.push_back(x.get<double>());
    } else {
      try {
        out.push_back(std::stod(x.get<std::string>()));
      } catch (const std::exception&) {
        throw ConfigError("config field " + pointer + ": bad number " + x.dump());
      }
    }
  }
  return out;
}

std::vector<std::size_t> get_counts(const json& cfg, const std::string& pointer) {
  std::vector<std::size_t> out;
  for (double x : get_doubles(cfg, pointer)) {
    if (x < 1 || x != static_cast<double>(static_cast<std::size_t>(x))) {
      throw ConfigError("config field " + pointer + ": expected positive integers");
    }
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

std::vector<std::string> get_strings(const json& cfg, const std::string& pointer) {
  return get<std::vector<std::string>>(cfg, pointer);
}

dv::TrainerConfig trainer_from(const json& cfg) {
  dv::TrainerConfig t = cfg.at("trainer").get<dv::TrainerConfig>();
  t.validate();
  return t;
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("dataset file not found: '" + path + "'");
}

dv::DatasetPair dataset_from(const json& cfg) {
  const json& ds = cfg.at("dataset");
  const auto seed = ds.value("seed", std::uint64_t{0});
  if (ds.contains("csv")) {
    const auto path = ds.at("csv").get<std::string>();
    require_file(path);
    auto train = dv::read_csv_dataset(path);
    if (ds.contains("validation")) {
      const auto vpath = ds.at("validation").get<std::string>();
      require_file(vpath);
      auto validation = dv::read_csv_dataset(vpath);
      validation.split = dv::Split::kValidation;
      return {std::move(train), std::move(validation)};
    }
    return dv::train_validation_split(train, ds.value("validation_fraction", 0.2), seed);
  }
  const auto n = ds.at("synthetic").get<std::size_t>();
  if (n == 0) throw ConfigError("--synthetic must be >= 1");
  return dv::synthetic_gaussian_dataset(n, seed);
}

std::shared_ptr<dv::EvalCache> cache_from_env(std::vector<std::string>& warnings) {
  const char* dir = std::getenv("DV_CACHE_DIR");
  if (dir == nullptr || *dir == '\0') return std::make_shared<dv::EvalCache>();
  std::error_code ec;
  fs::create_directories(dir, ec);
  auto cache = std::make_shared<dv::EvalCache>(fs::path(dir) / "utility_cache.jsonl");
  if (!cache->warning().empty()) warnings.push_back(cache->warning());
  return cache;
}

void check_output_path(const std::string& path) {
  if (path.empty()) return;
  const auto parent = fs::absolute(path).parent_path();
  if (!fs::is_directory(parent)) {
    throw ConfigError("output directory does not exist: '" + parent.string() + "'");
  }
}

void write_atomically(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw dv::Error(dv::ErrorCode::kStorageFailure, "cannot write '" + tmp + "'");
    out << text;
    if (!out) throw dv::Error(dv::ErrorCode::kStorageFailure, "write failed for '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

struct RunResult {
  json payload;
  std::string csv;            // written to --csv-out when non-empty
  std::string ledger_text;    // written to the ledger path when non-empty
  std::string ledger_path;
  json meta = json::object();  // run facts that may vary between reruns
};

RunResult payload_only(json payload) {
  RunResult r;
  r.payload = std::move(payload);
  return r;
}

// --- commands ---------------------------------------------------------------
//
// prepare_* validates the resolved config (config errors, exit 2) and returns
// the work to run (runtime errors, exit 3). prepare may add resolved values
// to the config so the echo shows what actually ran.

using Runner = std::function<RunResult()>;

std::size_t require_enumerable(std::size_t n) {
  if (n > dv::kDefaultEnumerationCap) {
    throw ConfigError("exact enumeration needs n <= " + std::to_string(dv::kDefaultEnumerationCap) +
                      ", got n=" + std::to_string(n));
  }
  return n;
}

struct OracleBundle {
  std::shared_ptr<dv::ModelUtilityOracle> model;
  dv::OraclePtr oracle;
};

OracleBundle build_oracle(const dv::DatasetPair& data, const dv::TrainerConfig& trainer,
                          const json& noise, std::uint64_t seed,
                          std::vector<std::string>& warnings) {
  OracleBundle b;
  b.model = dv::make_oracle(data.train, data.validation, trainer, dv::Metric::kAccuracy,
                            cache_from_env(warnings));
  b.oracle = b.model;
  const double sigma = noise.value("sigma", 0.0);
  const std::size_t repeat = noise.value("repeat", std::size_t{1});
  if (repeat > 1) {
    auto noisy = dv::apply_noise(b.oracle, dv::NoiseModel::repeat_average(repeat));
    warnings.insert(warnings.end(), noisy.warnings.begin(), noisy.warnings.end());
    b.oracle = noisy.oracle;
  }
  if (sigma > 0) {
    auto noisy =
        dv::apply_noise(b.oracle, dv::NoiseModel::gaussian(sigma, dv::derive_seed(seed, 0x6e)));
    warnings.insert(warnings.end(), noisy.warnings.begin(), noisy.warnings.end());
    b.oracle = noisy.oracle;
  }
  return b;
}

void finish_meta(RunResult& r, const OracleBundle& b, const std::vector<std::string>& warnings) {
  r.meta["trainings"] = b.model->trainings();
  r.meta["warnings"] = warnings;
}

Runner prepare_value(json& cfg, const Plumbing& p) {
  const auto method = get<std::string>(cfg, "/method");
  const auto seed = get<std::uint64_t>(cfg, "/seed");
  const auto samples = get<std::size_t>(cfg, "/samples");
  const auto noise = cfg.value("noise", json::object());
  if (noise.value("sigma", 0.0) < 0) throw ConfigError("noise sigma must be >= 0");
  if (noise.value("repeat", std::size_t{1}) == 0) throw ConfigError("noise repeat must be >= 1");
  auto data = dataset_from(cfg);
  const auto trainer = trainer_from(cfg);
  const std::size_t n = data.train.rows;

  std::optional<dv::SemivalueSpec> spec;
  if (method == "banzhaf-exact" || method == "shapley-exact" || method == "beta-exact") {
    require_enumerable(n);
    std::string name = method.substr(0, method.find('-'));
    if (method == "beta-exact") {
      name = get<std::string>(cfg, "/spec");
      if (name.rfind("beta(", 0) != 0) throw ConfigError("beta-exact needs --spec beta(a,b)");
    }
    spec = dv::make_weights(dv::WeightRequest::parse(name), n);
  } else if (method == "msr" || method == "mc" || method == "permutation") {
    if (samples == 0) throw ConfigError("--samples must be >= 1");
  } else if (method != "loo-exact") {
    throw ConfigError("unknown --method '" + method + "'");
  }

  std::string ledger_path = p.ledger;
  if (ledger_path.empty() && method == "msr" && !p.out.empty()) ledger_path = p.out + ".ledger.jsonl";
  std::optional<dv::SampleLedger> resume;
  if (method == "msr" && !ledger_path.empty() && fs::exists(ledger_path)) {
    std::ifstream in(ledger_path);
    resume = dv::read_ledger_jsonl(in);
    if (resume->n != n || resume->sampler_seed != seed ||
        resume->scheme != dv::SamplingScheme::kUniformPowerset) {
      throw ConfigError("ledger '" + ledger_path + "' was drawn for a different config");
    }
    if (resume->m() > samples) resume->draws.resize(samples);
  }
  check_output_path(ledger_path);

  return [=, data = std::move(data)]() mutable {
    RunResult r;
    std::vector<std::string> warnings;
    const auto b = build_oracle(data, trainer, noise, seed, warnings);
    json payload;
    if (spec) {
      dv::ExactOptions opts;
      opts.workers = p.workers;
      opts.eval_seed = seed;
      payload = dv::exact_semivalue(*b.oracle, *spec, opts);
    } else if (method == "loo-exact") {
      payload = dv::leave_one_out_values(*b.oracle, p.workers, seed);
    } else if (method == "msr") {
      dv::LedgerOptions opts;
      opts.workers = p.workers;
      dv::SampleLedger ledger = resume ? *resume
                                       : dv::SampleLedger{n, seed, dv::SamplingScheme::kUniformPowerset, {}};
      r.meta["resumed_draws"] = ledger.m();
      dv::extend_ledger(ledger, *b.oracle, samples, opts);
      payload = dv::msr_estimate(ledger);
      if (!ledger_path.empty()) {
        std::ostringstream os;
        dv::write_ledger_jsonl(os, ledger);
        r.ledger_text = os.str();
        r.ledger_path = ledger_path;
      }
    } else if (method == "mc") {
      payload = dv::simple_mc_estimate(*b.oracle, samples, seed, p.workers);
    } else {
      payload = dv::permutation_shapley_estimate(*b.oracle, samples, seed, p.workers);
    }
    r.payload = std::move(payload);
    finish_meta(r, b, warnings);
    return r;
  };
}

Runner prepare_robustness(json& cfg, const std::string& which) {
  const auto n = get<std::size_t>(cfg, "/n");
  if (n < 2) throw ConfigError("--n must be >= 2");
  const auto spec = dv::make_weights(dv::WeightRequest::parse(get<std::string>(cfg, "/spec")), n);
  if (which == "margin") {
    const auto tau = get<double>(cfg, "/tau");
    if (!(tau > 0)) throw ConfigError("--tau must be > 0");
    return [=] { return payload_only(json(dv::safety_margin(spec, tau))); };
  }
  if (which == "lipschitz") {
    if (!cfg.contains("numeric")) cfg["numeric"] = n <= dv::kDefaultNumericCap;
    const bool numeric = get<bool>(cfg, "/numeric");
    if (numeric && n > dv::kDefaultNumericCap) {
      throw ConfigError("numeric operator norm needs n <= " + std::to_string(dv::kDefaultNumericCap));
    }
    return [=] { return payload_only(json(dv::lipschitz_constant(spec, numeric))); };
  }
  const auto tau = get<double>(cfg, "/tau");
  const auto i = get<std::size_t>(cfg, "/i");
  const auto j = get<std::size_t>(cfg, "/j");
  if (!(tau > 0) || tau > 1) throw ConfigError("--tau must lie in (0, 1]");
  if (i == j || i >= n || j >= n) throw ConfigError("--i and --j must be distinct points < n");
  require_enumerable(n);
  return [=] { return payload_only(json(dv::flip_test(spec, tau, i, j))); };
}

std::vector<dv::WeightRequest> weight_requests(const json& cfg) {
  std::vector<dv::WeightRequest> out;
  for (const auto& s : get_strings(cfg, "/specs")) out.push_back(dv::WeightRequest::parse(s));
  if (out.empty()) throw ConfigError("--specs is empty");
  return out;
}

json rows_json(std::span<const dv::StabilityRow> rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"method", r.method}, {"noise", r.noise}, {"level", r.level},
                   {"mean_spearman", r.mean_spearman}, {"stderr", r.stderr_spearman},
                   {"trials", r.trials}});
  }
  return out;
}

Runner prepare_stability(json& cfg, const Plumbing& p) {
  const auto mode = get<std::string>(cfg, "/mode");
  const auto seed = get<std::uint64_t>(cfg, "/seed");
  const auto methods = weight_requests(cfg);
  auto data = dataset_from(cfg);
  const auto trainer = trainer_from(cfg);
  require_enumerable(data.train.rows);
  for (const auto& m : methods) dv::make_weights(m, data.train.rows);

  if (mode == "gaussian" || mode == "topk") {
    if (!trainer.deterministic()) {
      throw ConfigError(mode + " stability perturbs a deterministic utility; use full_batch_gd with zeros init");
    }
    const auto trials = get<std::size_t>(cfg, "/trials");
    const auto sigmas = get_doubles(cfg, "/sigmas");
    const auto runs = get<std::size_t>(cfg, "/runs");
    const auto k_percent = get<double>(cfg, "/k_percent");
    if (mode == "gaussian" && (trials == 0 || sigmas.empty())) {
      throw ConfigError("gaussian stability needs --trials >= 1 and a non-empty --sigmas");
    }
    if (mode == "topk" && (runs < 2 || !(k_percent > 0) || k_percent > 100)) {
      throw ConfigError("topk stability needs --runs >= 2 and 0 < --k-percent <= 100");
    }
    for (double s : sigmas) {
      if (s < 0) throw ConfigError("sigmas must be >= 0");
    }
    return [=, data = std::move(data)] {
      RunResult r;
      std::vector<std::string> warnings;
      const auto b = build_oracle(data, trainer, json::object(), seed, warnings);
      auto table = std::make_shared<dv::TableGame>(data.train.rows, dv::tabulate(*b.oracle, 0, p.workers));
      std::ostringstream csv;
      if (mode == "gaussian") {
        const auto rows = dv::gaussian_rank_stability(table, methods, sigmas, trials, seed);
        dv::write_stability_csv(csv, rows);
        r.payload = {{"rows", rows_json(rows)}};
      } else {
        json rows = json::array();
        std::vector<dv::TopkRow> all;
        for (double sigma : sigmas) {
          const auto part = dv::topk_stability(table, methods, sigma, runs, k_percent, seed);
          all.insert(all.end(), part.begin(), part.end());
        }
        for (const auto& t : all) {
          rows.push_back({{"method", t.method}, {"sigma", t.sigma}, {"k_percent", t.k_percent},
                          {"side", t.side}, {"consistency", t.consistency}, {"runs", t.runs}});
        }
        dv::write_topk_csv(csv, all);
        r.payload = {{"rows", rows}};
      }
      r.csv = csv.str();
      finish_meta(r, b, warnings);
      return r;
    };
  }
  if (mode == "repeat") {
    if (trainer.deterministic()) {
      throw ConfigError("repeat stability needs a stochastic trainer (e.g. --optimizer minibatch_sgd)");
    }
    const auto ks = get_counts(cfg, "/ks");
    const auto reference_k = get<std::size_t>(cfg, "/reference_k");
    const auto trials = get<std::size_t>(cfg, "/trials");
    if (ks.empty() || reference_k == 0 || trials == 0) {
      throw ConfigError("repeat stability needs --ks, --reference-k >= 1 and --trials >= 1");
    }
    return [=, data = std::move(data)] {
      RunResult r;
      std::vector<std::string> warnings;
      const auto b = build_oracle(data, trainer, json::object(), seed, warnings);
      const auto rows =
          dv::repeat_rank_stability(b.oracle, methods, ks, reference_k, trials, seed, p.workers);
      std::ostringstream csv;
      dv::write_stability_csv(csv, rows);
      r.csv = csv.str();
      r.payload = {{"rows", rows_json(rows)}};
      finish_meta(r, b, warnings);
      return r;
    };
  }
  throw ConfigError("unknown --mode '" + mode + "' (gaussian | repeat | topk)");
}

Runner prepare_detect(json& cfg, const Plumbing& p) {
  dv::DetectionConfig dc;
  dc.seed = get<std::uint64_t>(cfg, "/seed");
  dc.flip_fraction = get<double>(cfg, "/flip_fraction");
  dc.msr_samples = get<std::size_t>(cfg, "/samples");
  dc.permutations = get<std::size_t>(cfg, "/permutations");
  dc.percentile = get<double>(cfg, "/percentile");
  dc.weighted_trials = get<std::size_t>(cfg, "/weighted_trials");
  dc.trainer = trainer_from(cfg);
  dc.workers = p.workers;
  const auto methods = get_strings(cfg, "/methods");
  if (!(dc.flip_fraction >= 0) || dc.flip_fraction > 1) throw ConfigError("--flip-fraction must lie in [0, 1]");
  if (!(dc.percentile > 0) || dc.percentile > 100) throw ConfigError("--percentile must lie in (0, 100]");
  if (dc.msr_samples == 0 || dc.permutations == 0) throw ConfigError("sample counts must be >= 1");
  if (methods.empty()) throw ConfigError("--methods is empty");
  for (const auto& m : methods) {
    if (m != "banzhaf-msr" && m != "loo" && m != "shapley-permutation") {
      throw ConfigError("unknown detection method '" + m + "'");
    }
  }
  auto data = dataset_from(cfg);
  dc.n_points = data.train.rows;

  return [=, data = std::move(data)] {
    RunResult r;
    std::vector<std::string> warnings;
    auto cache = cache_from_env(warnings);
    const auto outcome = dv::detection_experiment(dc, methods, &data.train, &data.validation, cache);
    json out = json::array();
    std::ostringstream csv;
    csv << "method,precision,recall,f1,threshold_value,predicted,oracle_calls,weighted_mean_accuracy,"
           "weighted_stderr\n";
    for (const auto& m : outcome.methods) {
      json j = {{"method", m.method}, {"values", m.values}, {"report", m.report},
                {"oracle_calls", m.oracle_calls}};
      csv << m.method << ',' << m.report.precision << ',' << m.report.recall << ',' << m.report.f1
          << ',' << m.report.threshold_value << ',' << m.report.predicted.size() << ','
          << m.oracle_calls << ',';
      if (m.weighted) {
        j["weighted_training"] = *m.weighted;
        csv << m.weighted->mean_accuracy << ',' << m.weighted->stderr_accuracy;
      } else {
        csv << ',';
      }
      csv << '\n';
      out.push_back(std::move(j));
    }
    r.payload = {{"flipped", outcome.flipped}, {"methods", out}};
    if (outcome.uniform_baseline) r.payload["uniform_baseline"] = *outcome.uniform_baseline;
    r.csv = csv.str();
    r.meta["warnings"] = warnings;
    return r;
  };
}

Runner prepare_convergence(json& cfg, const Plumbing& p) {
  const auto seed = get<std::uint64_t>(cfg, "/seed");
  const auto seeds = get<std::size_t>(cfg, "/seeds");
  const auto budgets = get_counts(cfg, "/budgets");
  std::vector<dv::EstimatorKind> kinds;
  for (const auto& e : get_strings(cfg, "/estimators")) kinds.push_back(dv::parse_estimator(e));
  if (kinds.empty() || seeds == 0 || budgets.empty()) {
    throw ConfigError("convergence needs --estimators, --budgets and --seeds >= 1");
  }
  for (std::size_t b = 1; b < budgets.size(); ++b) {
    if (budgets[b] <= budgets[b - 1]) throw ConfigError("--budgets must be strictly increasing");
  }
  auto data = dataset_from(cfg);
  const auto trainer = trainer_from(cfg);
  const std::size_t n = data.train.rows;
  for (auto k : kinds) {
    if (k == dv::EstimatorKind::kSimpleMc && budgets.front() < 2 * n) {
      throw ConfigError("simple MC needs budgets >= 2n");
    }
    if (k == dv::EstimatorKind::kPermutation && budgets.front() < n) {
      throw ConfigError("permutation sampling needs budgets >= n");
    }
  }
  const bool with_reference = trainer.deterministic() && n <= dv::kDefaultEnumerationCap;
  cfg["reference"] = with_reference ? "exact" : "none";

  return [=, data = std::move(data)] {
    RunResult r;
    std::vector<std::string> warnings;
    const auto b = build_oracle(data, trainer, json::object(), seed, warnings);
    dv::OraclePtr oracle = b.oracle;
    std::shared_ptr<dv::TableGame> table;
    if (with_reference) {
      table = std::make_shared<dv::TableGame>(n, dv::tabulate(*b.oracle, 0, p.workers));
      oracle = table;
    }
    std::vector<dv::ConvergenceRow> rows;
    for (auto kind : kinds) {
      std::vector<double> reference;
      if (table) {
        const auto spec = dv::make_weights(kind == dv::EstimatorKind::kPermutation
                                               ? dv::WeightRequest::shapley()
                                               : dv::WeightRequest::banzhaf(),
                                           n);
        reference = dv::exact_semivalue(table->table(), spec).values;
      }
      const std::array<dv::EstimatorKind, 1> one{kind};
      auto part = dv::convergence_experiment(*oracle, reference, one, budgets, seeds, seed, p.workers);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    json out = json::array();
    for (const auto& row : rows) {
      json j = {{"estimator", row.estimator}, {"seed", row.seed}, {"budget", row.budget},
                {"oracle_calls", row.oracle_calls}};
      j["linf_error"] = row.linf_error ? json(*row.linf_error) : json(nullptr);
      j["l2_error"] = row.l2_error ? json(*row.l2_error) : json(nullptr);
      j["relative_spearman"] = row.relative_spearman ? json(*row.relative_spearman) : json(nullptr);
      out.push_back(std::move(j));
    }
    std::ostringstream csv;
    dv::write_convergence_csv(csv, rows);
    r.csv = csv.str();
    r.payload = {{"rows", out}};
    finish_meta(r, b, warnings);
    return r;
  };
}

json base_defaults(std::size_t synthetic) {
  return {{"seed", 0}, {"dataset", dataset_defaults(synthetic)}, {"trainer", trainer_defaults()}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dvtool: semivalue data valuation experiments"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto make = [&](CLI::App* parent, const std::string& sub, const std::string& name,
                  const std::string& help) -> Command& {
    auto c = std::make_unique<Command>();
    c->name = name;
    c->app = parent->add_subcommand(sub, help);
    commands.push_back(std::move(c));
    return *commands.back();
  };

  auto& value = make(&app, "value", "value", "compute data values");
  add_common(value, true);
  value.defaults = base_defaults(10);
  value.defaults["method"] = "banzhaf-exact";
  value.defaults["samples"] = 10000;
  value.defaults["noise"] = {{"sigma", 0.0}, {"repeat", 1}};
  value.flags.add<std::string>(value.app, "--method", "/method",
                               "banzhaf-exact | shapley-exact | loo-exact | beta-exact | msr | mc | permutation");
  value.flags.add<std::string>(value.app, "--spec", "/spec", "beta(a,b) for beta-exact");
  value.flags.add<std::size_t>(value.app, "--samples", "/samples",
                               "msr draws, mc samples per point, or permutations");
  value.flags.add<double>(value.app, "--noise-sigma", "/noise/sigma", "add N(0, sigma^2) utility noise");
  value.flags.add<std::size_t>(value.app, "--repeat", "/noise/repeat", "average k utility draws");
  value.app->add_option("--ledger", value.plumbing.ledger, "MSR ledger JSONL (resumed if present)");

  auto* robustness = app.add_subcommand("robustness", "closed-form robustness reports");
  robustness->require_subcommand(1);
  auto& margin = make(robustness, "margin", "robustness margin", "safety margin");
  auto& lipschitz = make(robustness, "lipschitz", "robustness lipschitz", "Lipschitz constant");
  auto& fliptest = make(robustness, "fliptest", "robustness fliptest", "empirical flip threshold");
  for (Command* c : {&margin, &lipschitz, &fliptest}) {
    add_common(*c, false);
    c->defaults = {{"seed", 0}, {"spec", "banzhaf"}, {"n", 8}};
    c->flags.add<std::string>(c->app, "--spec", "/spec", "loo | shapley | banzhaf | beta(a,b)");
    c->flags.add<std::size_t>(c->app, "--n", "/n", "cohort size");
  }
  margin.defaults["tau"] = 0.1;
  fliptest.defaults.update({{"tau", 0.1}, {"i", 0}, {"j", 1}});
  margin.flags.add<double>(margin.app, "--tau", "/tau", "distinguishability level");
  fliptest.flags.add<double>(fliptest.app, "--tau", "/tau", "distinguishability level");
  fliptest.flags.add<std::size_t>(fliptest.app, "--i", "/i", "first point");
  fliptest.flags.add<std::size_t>(fliptest.app, "--j", "/j", "second point");
  lipschitz.flags.add<bool>(lipschitz.app, "--numeric", "/numeric",
                            "also compute the SVD operator norm (default: n <= 12)");

  auto& stability = make(&app, "stability", "stability", "rank stability under utility noise");
  add_common(stability, true);
  stability.defaults = base_defaults(10);
  stability.defaults.update({{"mode", "gaussian"},
                             {"specs", {"banzhaf", "shapley", "loo"}},
                             {"sigmas", {0.05, 0.1, 0.2, 0.5}},
                             {"trials", 20},
                             {"ks", {1, 5, 10}},
                             {"reference_k", 50},
                             {"runs", 5},
                             {"k_percent", 20.0}});
  stability.flags.add<std::string>(stability.app, "--mode", "/mode", "gaussian | repeat | topk");
  stability.flags.add_list(stability.app, "--specs", "/specs", "semivalues to compare");
  stability.flags.add_list(stability.app, "--sigmas", "/sigmas", "noise levels");
  stability.flags.add<std::size_t>(stability.app, "--trials", "/trials", "trials per level");
  stability.flags.add_list(stability.app, "--ks", "/ks", "repeat counts (repeat mode)");
  stability.flags.add<std::size_t>(stability.app, "--reference-k", "/reference_k",
                                   "repeats behind the reference values (repeat mode)");
  stability.flags.add<std::size_t>(stability.app, "--runs", "/runs", "noisy runs (topk mode)");
  stability.flags.add<double>(stability.app, "--k-percent", "/k_percent", "top-k share (topk mode)");
  stability.app->add_option("--csv-out", stability.plumbing.csv_out, "sweep CSV path");

  auto& detect = make(&app, "detect", "detect", "mislabel detection from data values");
  add_common(detect, true);
  detect.defaults = base_defaults(200);
  detect.defaults.update({{"flip_fraction", 0.1},
                          {"methods", {"banzhaf-msr", "loo"}},
                          {"samples", 50000},
                          {"permutations", 50},
                          {"percentile", 10.0},
                          {"weighted_trials", 0}});
  detect.flags.add<double>(detect.app, "--flip-fraction", "/flip_fraction", "share of labels flipped");
  detect.flags.add_list(detect.app, "--methods", "/methods", "banzhaf-msr | loo | shapley-permutation");
  detect.flags.add<std::size_t>(detect.app, "--samples", "/samples", "MSR draws");
  detect.flags.add<std::size_t>(detect.app, "--permutations", "/permutations", "Shapley permutations");
  detect.flags.add<double>(detect.app, "--percentile", "/percentile", "detection percentile");
  detect.flags.add<std::size_t>(detect.app, "--weighted-trials", "/weighted_trials",
                                "value-weighted training trials (0 skips)");
  detect.app->add_option("--csv-out", detect.plumbing.csv_out, "per-method CSV path");

  auto& convergence = make(&app, "convergence", "convergence", "estimator convergence traces");
  add_common(convergence, true);
  convergence.defaults = base_defaults(10);
  convergence.defaults.update({{"estimators", {"msr", "simple_mc"}},
                               {"budgets", {256, 512, 1024, 2048, 4096, 8192, 16384}},
                               {"seeds", 1}});
  convergence.flags.add_list(convergence.app, "--estimators", "/estimators",
                             "msr | simple_mc | permutation_shapley");
  convergence.flags.add_list(convergence.app, "--budgets", "/budgets", "utility-call budgets");
  convergence.flags.add<std::size_t>(convergence.app, "--seeds", "/seeds", "independent repetitions");
  convergence.app->add_option("--csv-out", convergence.plumbing.csv_out, "trace CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  Command* chosen = nullptr;
  for (auto& c : commands) {
    if (c->app->parsed()) chosen = c.get();
  }
  if (chosen == nullptr) {
    std::cerr << "config error: no command selected\n";
    return kExitConfig;
  }
  const Plumbing& p = chosen->plumbing;

  json cfg;
  Runner run;
  try {
    cfg = resolve(*chosen);
    check_output_path(p.out);
    check_output_path(p.csv_out);
    if (chosen->name == "value") {
      run = prepare_value(cfg, p);
    } else if (chosen->name.rfind("robustness ", 0) == 0) {
      run = prepare_robustness(cfg, chosen->name.substr(11));
    } else if (chosen->name == "stability") {
      run = prepare_stability(cfg, p);
    } else if (chosen->name == "detect") {
      run = prepare_detect(cfg, p);
    } else {
      run = prepare_convergence(cfg, p);
    }
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  const auto started = std::chrono::steady_clock::now();
  RunResult result;
  try {
    result = run();
  } catch (const dv::OracleFailure& e) {
    std::cerr << "runtime error: utility evaluation failed on subset {" << e.subset()
              << "}: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  json payload = result.payload.is_object() ? result.payload : json::object();
  payload["config"] = cfg;
  const std::string text = payload.dump(2) + "\n";
  try {
    if (!result.ledger_text.empty()) write_atomically(result.ledger_path, result.ledger_text);
    if (!p.csv_out.empty() && !result.csv.empty()) write_atomically(p.csv_out, result.csv);
    if (p.out.empty()) {
      std::cout << text;
    } else {
      write_atomically(p.out, text);
      json meta = result.meta;
      meta["created_utc"] = utc_now();
      meta["elapsed_seconds"] = elapsed;
      meta["workers"] = p.workers;
      meta["argv"] = std::vector<std::string>(argv, argv + argc);
      write_atomically(p.out + ".meta.json", meta.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

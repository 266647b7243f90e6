#include "dv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "dv/errors.hpp"

namespace dv {

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kLinear ? "linear" : "logistic_regression";
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kFullBatchGd: return "full_batch_gd";
    case OptimizerKind::kMinibatchSgd: return "minibatch_sgd";
    case OptimizerKind::kSmoothedGd: return "smoothed_gd";
  }
  return "unknown";
}

ModelKind parse_model(std::string_view text) {
  if (text == "logistic_regression" || text == "logreg") return ModelKind::kLogisticRegression;
  if (text == "linear") return ModelKind::kLinear;
  throw Error(ErrorCode::kParseError, "unknown model '" + std::string(text) + "'");
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "full_batch_gd" || text == "gd") return OptimizerKind::kFullBatchGd;
  if (text == "minibatch_sgd" || text == "sgd") return OptimizerKind::kMinibatchSgd;
  if (text == "smoothed_gd") return OptimizerKind::kSmoothedGd;
  throw Error(ErrorCode::kParseError, "unknown optimizer '" + std::string(text) + "'");
}

void TrainerConfig::validate() const {
  if (!(learning_rate > 0)) throw Error(ErrorCode::kInvalidParam, "learning_rate must be > 0");
  if (epochs == 0) throw Error(ErrorCode::kInvalidParam, "epochs must be >= 1");
  if (optimizer == OptimizerKind::kMinibatchSgd && batch_size == 0) {
    throw Error(ErrorCode::kInvalidParam, "batch_size must be >= 1");
  }
  if (optimizer == OptimizerKind::kSmoothedGd &&
      (!(smoothing_radius > 0) || smoothing_samples == 0)) {
    throw Error(ErrorCode::kInvalidParam, "smoothed_gd needs radius > 0 and samples >= 1");
  }
  if (init == InitKind::kGaussian && !(init_scale >= 0)) {
    throw Error(ErrorCode::kInvalidParam, "init scale must be >= 0");
  }
}

std::string TrainerConfig::description() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(model) << '/' << to_string(optimizer) << "/lr=" << learning_rate
     << "/epochs=" << epochs;
  if (optimizer == OptimizerKind::kMinibatchSgd) os << "/batch=" << batch_size;
  if (optimizer == OptimizerKind::kSmoothedGd) {
    os << "/alpha=" << smoothing_radius << "/l=" << smoothing_samples;
  }
  os << "/init=" << (init == InitKind::kZeros ? "zeros" : "gaussian");
  if (init == InitKind::kGaussian) os << '(' << init_scale << ')';
  if (!deterministic()) os << "/seed=" << seed;
  return os.str();
}

namespace {

double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Accumulates loss and d loss / d params for one example into grad.
double example_loss(const LinearModel& m, std::span<const double> x, int y,
                    std::span<const double> params, double* grad, std::vector<double>& scratch) {
  const std::size_t k = m.outputs();
  const std::size_t stride = m.dim + 1;
  scratch.resize(k);
  for (std::size_t o = 0; o < k; ++o) {
    const double* w = params.data() + o * stride;
    double z = w[m.dim];
    for (std::size_t d = 0; d < m.dim; ++d) z += w[d] * x[d];
    scratch[o] = z;
  }
  double loss = 0.0;
  // residual = d loss / d z, stored back into scratch.
  if (k == 1) {
    const double z = scratch[0];
    const double t = y == 1 ? 1.0 : 0.0;
    if (m.kind == ModelKind::kLogisticRegression) {
      loss = log1pexp(z) - t * z;
      scratch[0] = sigmoid(z) - t;
    } else {
      loss = 0.5 * (z - t) * (z - t);
      scratch[0] = z - t;
    }
  } else if (m.kind == ModelKind::kLogisticRegression) {
    const double peak = *std::max_element(scratch.begin(), scratch.end());
    double denom = 0.0;
    for (double z : scratch) denom += std::exp(z - peak);
    const double lse = peak + std::log(denom);
    loss = lse - scratch[static_cast<std::size_t>(y)];
    for (std::size_t o = 0; o < k; ++o) {
      scratch[o] = std::exp(scratch[o] - lse) - (static_cast<int>(o) == y ? 1.0 : 0.0);
    }
  } else {
    for (std::size_t o = 0; o < k; ++o) {
      const double t = static_cast<int>(o) == y ? 1.0 : 0.0;
      loss += 0.5 * (scratch[o] - t) * (scratch[o] - t);
      scratch[o] -= t;
    }
  }
  if (grad != nullptr) {
    for (std::size_t o = 0; o < k; ++o) {
      double* g = grad + o * stride;
      const double r = scratch[o];
      for (std::size_t d = 0; d < m.dim; ++d) g[d] += r * x[d];
      g[m.dim] += r;
    }
  }
  return loss;
}

// Mean gradient over `rows` evaluated at `params`, added into `grad` (zeroed first).
double batch_gradient(const LinearModel& m, const TabularDataset& data,
                      std::span<const std::size_t> rows, std::span<const double> params,
                      std::vector<double>& grad, std::vector<double>& scratch) {
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t r : rows) {
    loss += example_loss(m, data.row(r), data.labels[r], params, grad.data(), scratch);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& g : grad) g *= inv;
  return loss * inv;
}

void check_finite(const std::vector<double>& params) {
  for (double p : params) {
    if (!std::isfinite(p)) throw Error(ErrorCode::kNumericalDivergence, "non-finite parameters");
  }
}

}  // namespace

int LinearModel::predict(std::span<const double> x) const {
  const std::size_t stride = dim + 1;
  if (outputs() == 1) {
    double z = params[dim];
    for (std::size_t d = 0; d < dim; ++d) z += params[d] * x[d];
    // sigmoid(z) >= 1/2 and the linear score >= 1/2 respectively.
    return kind == ModelKind::kLogisticRegression ? (z >= 0.0 ? 1 : 0) : (z >= 0.5 ? 1 : 0);
  }
  int best = 0;
  double best_z = -INFINITY;
  for (std::size_t o = 0; o < outputs(); ++o) {
    const double* w = params.data() + o * stride;
    double z = w[dim];
    for (std::size_t d = 0; d < dim; ++d) z += w[d] * x[d];
    if (z > best_z) {
      best_z = z;
      best = static_cast<int>(o);
    }
  }
  return best;
}

LinearModel initial_model(const TrainerConfig& config, std::size_t dim, std::size_t num_classes,
                          std::uint64_t seed) {
  LinearModel m;
  m.kind = config.model;
  m.dim = dim;
  m.num_classes = num_classes;
  m.params.assign(m.outputs() * (dim + 1), 0.0);
  if (config.init == InitKind::kGaussian && config.init_scale > 0) {
    std::mt19937_64 rng(seed ^ 0x5eedULL);
    std::normal_distribution<double> g(0.0, config.init_scale);
    for (double& p : m.params) p = g(rng);
  }
  return m;
}

LinearModel train(const TrainerConfig& config, const SubsetKey& subset,
                  const TabularDataset& dataset, std::uint64_t seed,
                  std::span<const double> inclusion_prob) {
  config.validate();
  if (subset.n() != dataset.rows) {
    throw Error(ErrorCode::kLengthMismatch, "subset cohort size != dataset rows");
  }
  if (!inclusion_prob.empty() && inclusion_prob.size() != dataset.rows) {
    throw Error(ErrorCode::kLengthMismatch, "inclusion weights must have one entry per row");
  }
  LinearModel model = initial_model(config, dataset.dim, dataset.num_classes, seed);
  const std::vector<std::size_t> members = subset.members();
  if (members.empty()) return model;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> grad(model.params.size());
  std::vector<double> acc(model.params.size());
  std::vector<double> probe(model.params.size());
  std::vector<double> scratch;
  std::vector<std::size_t> active;
  active.reserve(members.size());

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (inclusion_prob.empty()) {
      active = members;
    } else {
      active.clear();
      for (std::size_t r : members) {
        if (unif(rng) < inclusion_prob[r]) active.push_back(r);
      }
      if (active.empty()) continue;
    }

    switch (config.optimizer) {
      case OptimizerKind::kFullBatchGd:
        batch_gradient(model, dataset, active, model.params, grad, scratch);
        for (std::size_t p = 0; p < grad.size(); ++p) model.params[p] -= config.learning_rate * grad[p];
        break;
      case OptimizerKind::kMinibatchSgd: {
        std::shuffle(active.begin(), active.end(), rng);
        for (std::size_t start = 0; start < active.size(); start += config.batch_size) {
          const std::size_t len = std::min(config.batch_size, active.size() - start);
          batch_gradient(model, dataset, std::span(active).subspan(start, len), model.params, grad,
                         scratch);
          for (std::size_t p = 0; p < grad.size(); ++p) {
            model.params[p] -= config.learning_rate * grad[p];
          }
        }
        break;
      }
      case OptimizerKind::kSmoothedGd: {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t s = 0; s < config.smoothing_samples; ++s) {
          for (std::size_t p = 0; p < probe.size(); ++p) {
            probe[p] = model.params[p] + config.smoothing_radius * gauss(rng);
          }
          batch_gradient(model, dataset, active, probe, grad, scratch);
          for (std::size_t p = 0; p < acc.size(); ++p) acc[p] += grad[p];
        }
        const double inv = 1.0 / static_cast<double>(config.smoothing_samples);
        for (std::size_t p = 0; p < acc.size(); ++p) {
          model.params[p] -= config.learning_rate * acc[p] * inv;
        }
        break;
      }
    }
    check_finite(model.params);
  }
  return model;
}

double accuracy(const LinearModel& model, const TabularDataset& dataset) {
  if (dataset.rows == 0) throw Error(ErrorCode::kInvalidParam, "empty evaluation set");
  std::size_t correct = 0;
  for (std::size_t r = 0; r < dataset.rows; ++r) {
    if (model.predict(dataset.row(r)) == dataset.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.rows);
}

double mean_loss(const LinearModel& model, const TabularDataset& dataset,
                 std::span<const std::size_t> rows, std::vector<double>* grad) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidParam, "no rows for loss");
  std::vector<double> scratch;
  std::vector<double> local(model.params.size(), 0.0);
  const double loss = batch_gradient(model, dataset, rows, model.params, local, scratch);
  if (!std::isfinite(loss)) throw Error(ErrorCode::kNumericalDivergence, "non-finite loss");
  if (grad != nullptr) *grad = std::move(local);
  return loss;
}

}  // namespace dv

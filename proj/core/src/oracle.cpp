#include "dv/oracle.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"
#include "dv/parallel.hpp"

namespace dv {

namespace {

constexpr std::size_t kMaxTableN = 30;

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

ConstantGame::ConstantGame(std::size_t n, double value) : n_(n), value_(value) {
  if (n == 0) throw Error(ErrorCode::kInvalidParam, "cohort size must be positive");
}

std::string ConstantGame::description() const {
  return "constant(n=" + std::to_string(n_) + ",u=" + format_double(value_) + ")";
}

AdditiveGame::AdditiveGame(std::vector<double> contributions, double offset)
    : a_(std::move(contributions)), offset_(offset) {
  if (a_.empty()) throw Error(ErrorCode::kInvalidParam, "additive game needs n >= 1");
}

double AdditiveGame::evaluate(const SubsetKey& subset, std::uint64_t) const {
  double u = offset_;
  for (std::size_t i : subset.members()) u += a_[i];
  return u;
}

bool AdditiveGame::bounded() const {
  double lo = offset_;
  double hi = offset_;
  for (double x : a_) (x < 0 ? lo : hi) += x;
  return lo >= 0.0 && hi <= 1.0;
}

std::string AdditiveGame::description() const {
  std::string out = "additive(offset=" + format_double(offset_) + ",a=[";
  for (std::size_t i = 0; i < a_.size(); ++i) {
    if (i) out += ',';
    out += format_double(a_[i]);
  }
  return out + "])";
}

TableGame::TableGame(std::size_t n, std::vector<double> table, std::string label)
    : n_(n), table_(std::move(table)), label_(std::move(label)) {
  if (n == 0 || n > kMaxTableN) {
    throw Error(ErrorCode::kCohortTooLarge, "table games support 1 <= n <= 30");
  }
  if (table_.size() != (std::size_t{1} << n)) {
    throw Error(ErrorCode::kLengthMismatch, "table must have 2^n entries");
  }
  bounded_ = true;
  for (double x : table_) {
    if (!std::isfinite(x)) throw Error(ErrorCode::kInvalidParam, "non-finite table entry");
    if (x < 0.0 || x > 1.0) bounded_ = false;
  }
  // Content hash keeps descriptions distinct for distinct tables.
  std::uint64_t h = fnv1a(label_);
  for (double x : table_) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    h = mix64(h ^ bits);
  }
  std::ostringstream os;
  os << label_ << "(n=" << n_ << ",h=" << std::hex << h << ")";
  description_ = os.str();
}

double TableGame::evaluate(const SubsetKey& subset, std::uint64_t) const {
  return table_[subset.mask()];
}

std::string TableGame::description() const { return description_; }

FunctionGame::FunctionGame(std::size_t n, Fn fn, bool deterministic, std::string label,
                           bool bounded)
    : n_(n), fn_(std::move(fn)), deterministic_(deterministic), label_(std::move(label)),
      bounded_(bounded) {
  if (n == 0) throw Error(ErrorCode::kInvalidParam, "cohort size must be positive");
}

std::vector<double> tabulate(const UtilityOracle& oracle, std::uint64_t seed,
                             std::size_t workers) {
  const std::size_t n = oracle.n();
  if (n > kMaxTableN) throw Error(ErrorCode::kCohortTooLarge, "cannot tabulate n > 30");
  const std::size_t count = std::size_t{1} << n;
  std::vector<double> table(count);
  const bool det = oracle.deterministic();
  parallel_for(count, workers, [&](std::size_t mask) {
    const auto s = SubsetKey::from_mask(n, mask);
    const std::uint64_t eval_seed = det ? 0 : derive_seed(seed, mask);
    double u;
    try {
      u = oracle.evaluate(s, eval_seed);
    } catch (const OracleFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw OracleFailure(s.to_string(), e.what());
    }
    if (!std::isfinite(u)) throw OracleFailure(s.to_string(), "non-finite score");
    table[mask] = u;
  });
  return table;
}

std::shared_ptr<TableGame> random_game(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> table(std::size_t{1} << n);
  for (double& x : table) x = unif(rng);
  return std::make_shared<TableGame>(n, std::move(table), "random");
}

}  // namespace dv

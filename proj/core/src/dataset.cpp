#include "dv/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "dv/errors.hpp"
#include "dv/numeric.hpp"

namespace dv {

void TabularDataset::validate() const {
  if (features.size() != rows * dim) {
    throw Error(ErrorCode::kInvalidParam, "feature matrix does not match rows x dim");
  }
  if (labels.size() != rows) throw Error(ErrorCode::kInvalidParam, "labels length != rows");
  if (num_classes < 2) throw Error(ErrorCode::kInvalidParam, "need at least two classes");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw Error(ErrorCode::kInvalidParam, "class id outside [0, num_classes)");
    }
  }
}

namespace {

TabularDataset gaussian_block(std::size_t rows, std::mt19937_64& rng, Split split) {
  std::normal_distribution<double> noise(0.0, 1.0);
  TabularDataset d;
  d.rows = rows;
  d.dim = 2;
  d.num_classes = 2;
  d.split = split;
  d.features.resize(rows * 2);
  d.labels.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double x0 = 0.1 + noise(rng);
    const double x1 = -0.1 + noise(rng);
    d.features[2 * r] = x0;
    d.features[2 * r + 1] = x1;
    d.labels[r] = x0 + x1 > 0.0 ? 1 : 0;
  }
  return d;
}

TabularDataset take_rows(const TabularDataset& src, std::span<const std::size_t> idx, Split split) {
  TabularDataset d;
  d.rows = idx.size();
  d.dim = src.dim;
  d.num_classes = src.num_classes;
  d.split = split;
  d.features.reserve(d.rows * d.dim);
  d.labels.reserve(d.rows);
  for (std::size_t r : idx) {
    const auto row = src.row(r);
    d.features.insert(d.features.end(), row.begin(), row.end());
    d.labels.push_back(src.labels[r]);
  }
  return d;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

DatasetPair synthetic_gaussian_dataset(std::size_t n_points, std::uint64_t seed,
                                       std::size_t validation_points) {
  if (n_points < 2) throw Error(ErrorCode::kInvalidParam, "need at least 2 points");
  if (validation_points == 0) throw Error(ErrorCode::kInvalidParam, "validation split is empty");
  std::mt19937_64 rng(seed);
  DatasetPair pair;
  pair.train = gaussian_block(n_points, rng, Split::kTrain);
  pair.validation = gaussian_block(validation_points, rng, Split::kValidation);
  return pair;
}

FlipResult flip_labels(const TabularDataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidParam, "flip fraction must be in [0,1]");
  }
  FlipResult out{dataset, {}};
  const auto count = static_cast<std::size_t>(std::floor(fraction * dataset.rows + 1e-9));
  if (count == 0) return out;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(dataset.rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::uniform_int_distribution<std::size_t> other(1, dataset.num_classes - 1);
  for (std::size_t r : idx) {
    const std::size_t shift = other(rng);
    out.dataset.labels[r] =
        static_cast<int>((static_cast<std::size_t>(dataset.labels[r]) + shift) % dataset.num_classes);
  }
  out.flipped = std::move(idx);
  return out;
}

TabularDataset read_csv_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidParam, "cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "empty CSV '" + path + "'");
  const std::size_t columns = split_csv_line(line).size();
  if (columns < 2) throw Error(ErrorCode::kParseError, "CSV needs >= 1 feature and a label");

  TabularDataset d;
  d.dim = columns - 1;
  std::vector<std::string> raw_labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != columns) {
      throw Error(ErrorCode::kParseError, path + ":" + std::to_string(line_no) +
                                              ": expected " + std::to_string(columns) + " columns");
    }
    for (std::size_t c = 0; c + 1 < columns; ++c) {
      double v = 0;
      const auto& s = cells[c];
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::kParseError,
                    path + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
      }
      d.features.push_back(v);
    }
    raw_labels.push_back(cells.back());
    ++d.rows;
  }
  if (d.rows == 0) throw Error(ErrorCode::kParseError, "CSV '" + path + "' has no rows");

  bool integral = true;
  int max_id = 0;
  for (const auto& s : raw_labels) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
      integral = false;
      break;
    }
    max_id = std::max(max_id, v);
  }
  if (integral) {
    for (const auto& s : raw_labels) d.labels.push_back(std::stoi(s));
    d.num_classes = std::max<std::size_t>(2, static_cast<std::size_t>(max_id) + 1);
  } else {
    std::map<std::string, int> ids;
    for (const auto& s : raw_labels) ids.emplace(s, 0);
    int next = 0;
    for (auto& [k, v] : ids) v = next++;
    for (const auto& s : raw_labels) d.labels.push_back(ids.at(s));
    d.num_classes = std::max<std::size_t>(2, ids.size());
  }
  d.validate();
  return d;
}

DatasetPair train_validation_split(const TabularDataset& dataset, double validation_fraction,
                                   std::uint64_t seed) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidParam, "validation fraction must be in (0,1)");
  }
  const auto held = static_cast<std::size_t>(std::llround(validation_fraction * dataset.rows));
  if (held == 0 || held >= dataset.rows) {
    throw Error(ErrorCode::kInvalidParam, "split leaves an empty side");
  }
  std::vector<std::size_t> idx(dataset.rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::size_t> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<std::size_t> tr(idx.begin() + static_cast<std::ptrdiff_t>(held), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(tr.begin(), tr.end());
  return {take_rows(dataset, tr, Split::kTrain), take_rows(dataset, val, Split::kValidation)};
}

std::pair<int, double> majority_class(const TabularDataset& dataset) {
  if (dataset.rows == 0) throw Error(ErrorCode::kInvalidParam, "empty dataset");
  std::vector<std::size_t> counts(dataset.num_classes, 0);
  for (int y : dataset.labels) ++counts[static_cast<std::size_t>(y)];
  const auto best = std::max_element(counts.begin(), counts.end());
  return {static_cast<int>(best - counts.begin()),
          static_cast<double>(*best) / static_cast<double>(dataset.rows)};
}

}  // namespace dv

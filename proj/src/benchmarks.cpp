#include "egpal/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "egpal/errors.hpp"

namespace egpal {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

double Benchmark::eval(const Eigen::VectorXd& x) const {
  if (x.size() != dim) {
    throw ParameterError(name + ": expected dimension " + std::to_string(dim) + ", got " + std::to_string(x.size()));
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= lower(i) && x(i) <= upper(i))) {
      throw DomainError(name + ": coordinate " + std::to_string(i) + " = " + std::to_string(x(i)) +
                        " outside [" + std::to_string(lower(i)) + ", " + std::to_string(upper(i)) + "]");
    }
  }
  return fn(x);
}

double ackley5d(const Eigen::VectorXd& x) {
  const double n = static_cast<double>(x.size());
  const double sq = x.squaredNorm() / n;
  const double cs = (2.0 * kPi * x.array()).cos().sum() / n;
  return -20.0 * std::exp(-0.2 * std::sqrt(sq)) - std::exp(cs) + 20.0 + std::numbers::e;
}

double branin(const Eigen::VectorXd& x) {
  const double x1 = x(0);
  const double x2 = x(1);
  const double a = x2 - 5.1 / (4.0 * kPi * kPi) * x1 * x1 + 5.0 * x1 / kPi - 6.0;
  return a * a + 10.0 * (1.0 - 1.0 / (8.0 * kPi)) * std::cos(x1) + 10.0;
}

double currin_exponential(const Eigen::VectorXd& x) {
  const double x1 = x(0);
  const double x2 = x(1);
  // x2 = 0 gives exp(-inf) = 0, the continuous limit.
  const double factor = 1.0 - std::exp(-1.0 / (2.0 * x2));
  const double num = 2300.0 * x1 * x1 * x1 + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0;
  const double den = 100.0 * x1 * x1 * x1 + 500.0 * x1 * x1 + 4.0 * x1 + 20.0;
  return factor * num / den;
}

double gramacy(const Eigen::VectorXd& x) {
  const double v = x(0);
  return std::sin(10.0 * kPi * v) / (2.0 * v) + std::pow(v - 1.0, 4);
}

double higdon(const Eigen::VectorXd& x) {
  const double v = x(0);
  return std::sin(2.0 * kPi * v / 10.0) + 0.2 * std::sin(2.0 * kPi * v / 2.5);
}

const std::vector<Benchmark>& benchmarks() {
  static const std::vector<Benchmark> all = {
      {"ackley5d", 5, Eigen::VectorXd::Constant(5, -5.0), Eigen::VectorXd::Constant(5, 5.0), ackley5d},
      {"branin", 2, vec({-5.0, 0.0}), vec({10.0, 15.0}), branin},
      {"currin", 2, vec({0.0, 0.0}), vec({1.0, 1.0}), currin_exponential},
      {"gramacy", 1, vec({0.5}), vec({2.5}), gramacy},
      {"higdon", 1, vec({0.0}), vec({20.0}), higdon},
  };
  return all;
}

const Benchmark* find_benchmark(std::string_view name) {
  for (const Benchmark& b : benchmarks()) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

void SplitSpec::validate() const {
  if (n_l0 < 1) throw ParameterError("initial labelled set must hold at least one point");
  if (n_v < 0 || n_u0 < 1 || n_t < 1) throw ParameterError("split sizes must be non-negative (pool and test >= 1)");
}

const std::vector<TaskPreset>& task_presets() {
  static const std::vector<TaskPreset> all = {
      {"ackley5d", {10, 50, 500, 100}, 1.0},
      {"branin", {10, 50, 500, 100}, 100.0},
      {"currin", {10, 50, 500, 100}, 100.0},
      {"gramacy", {10, 50, 500, 100}, 100.0},
      {"higdon", {10, 50, 500, 100}, 100.0},
      {"diabetes", {15, 55, 261, 111}, 100.0},
      {"malaria", {40, 60, 500, 680}, 20.0},
      {"robot-pushing-3d", {20, 50, 500, 200}, 20.0},
      {"robot-pushing-4d", {20, 50, 500, 200}, 20.0},
      {"california-housing", {50, 70, 1000, 1032}, 0.05},
  };
  return all;
}

const TaskPreset* find_task_preset(std::string_view name) {
  for (const TaskPreset& p : task_presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

double parse_number(std::string_view field, std::size_t row, std::size_t col) {
  const std::string buf(field);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || !std::isfinite(v)) {
    throw ParseError("non-numeric cell '" + buf + "' at row " + std::to_string(row) + ", column " +
                     std::to_string(col + 1));
  }
  return v;
}

}  // namespace

RawDataset parse_csv(std::string_view text, const std::string& target_column) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    lines.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) throw ParseError("CSV has no header row");

  std::string_view header_line = lines[first];
  if (header_line.size() >= 3 && static_cast<unsigned char>(header_line[0]) == 0xEF) header_line.remove_prefix(3);
  std::vector<std::string> header;
  for (auto f : split_fields(header_line)) header.push_back(unquote(f));

  const auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end()) throw ParseError("target column '" + target_column + "' not found in header");
  const auto target_idx = static_cast<std::size_t>(target_it - header.begin());

  RawDataset ds;
  ds.target_name = target_column;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != target_idx) ds.feature_names.push_back(header[c]);
  }
  if (ds.feature_names.empty()) throw ParseError("CSV needs at least one feature column besides the target");

  std::vector<std::vector<double>> rows;
  for (std::size_t li = first + 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto fields = split_fields(lines[li]);
    const std::size_t row_no = li + 1;  // 1-based file line
    if (fields.size() != header.size()) {
      throw ParseError("ragged row " + std::to_string(row_no) + ": " + std::to_string(fields.size()) +
                       " fields, header has " + std::to_string(header.size()));
    }
    std::vector<double> vals(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) vals[c] = parse_number(fields[c], row_no, c);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw ParseError("CSV has a header but no data rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(ds.feature_names.size());
  ds.X.resize(n, d);
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const double v = rows[static_cast<std::size_t>(i)][c];
      if (c == target_idx) {
        ds.y(i) = v;
      } else {
        ds.X(i, j++) = v;
      }
    }
  }
  return ds;
}

RawDataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open CSV file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), target_column);
}

// ---------------------------------------------------------------------------
// Standardization and pools

Standardizer Standardizer::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0) throw ParameterError("cannot standardize from zero rows");
  Standardizer s;
  s.input_mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centered = X.rowwise() - s.input_mean.transpose();
  s.input_scale = (centered.array().square().colwise().mean().sqrt()).transpose();
  for (Eigen::Index j = 0; j < s.input_scale.size(); ++j) {
    if (!(s.input_scale(j) > 0.0)) s.input_scale(j) = 1.0;
  }
  s.label_mean = y.size() > 0 ? y.mean() : 0.0;
  return s;
}

Eigen::MatrixXd Standardizer::transform_inputs(const Eigen::MatrixXd& X) const {
  return ((X.rowwise() - input_mean.transpose()).array().rowwise() / input_scale.transpose().array()).matrix();
}

Eigen::MatrixXd Standardizer::inverse_inputs(const Eigen::MatrixXd& Z) const {
  return ((Z.array().rowwise() * input_scale.transpose().array()).matrix().rowwise() + input_mean.transpose());
}

Eigen::VectorXd Standardizer::transform_labels(const Eigen::VectorXd& y) const {
  return (y.array() - label_mean).matrix();
}

Eigen::VectorXd Standardizer::inverse_labels(const Eigen::VectorXd& y) const {
  return (y.array() + label_mean).matrix();
}

namespace {

DataPools standardize_pools(DataPools raw) {
  Eigen::MatrixXd fit_x(raw.l0_x.rows() + raw.v_x.rows(), raw.l0_x.cols());
  fit_x << raw.l0_x, raw.v_x;
  Eigen::VectorXd fit_y(raw.l0_y.size() + raw.v_y.size());
  fit_y << raw.l0_y, raw.v_y;
  const Standardizer s = Standardizer::fit(fit_x, fit_y);
  DataPools out;
  out.standardizer = s;
  out.l0_x = s.transform_inputs(raw.l0_x);
  out.v_x = s.transform_inputs(raw.v_x);
  out.u0_x = s.transform_inputs(raw.u0_x);
  out.t_x = s.transform_inputs(raw.t_x);
  out.l0_y = s.transform_labels(raw.l0_y);
  out.v_y = s.transform_labels(raw.v_y);
  out.u0_y = s.transform_labels(raw.u0_y);
  out.t_y = s.transform_labels(raw.t_y);
  return out;
}

}  // namespace

DataPools make_pools(const Benchmark& bench, const SplitSpec& split, std::uint64_t seed) {
  split.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](int n, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
    X.resize(n, bench.dim);
    y.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < bench.dim; ++k) {
        X(i, k) = bench.lower(k) + (bench.upper(k) - bench.lower(k)) * unit(rng);
      }
      y(i) = bench.eval(X.row(i).transpose());
    }
  };
  DataPools raw;
  draw(split.n_l0, raw.l0_x, raw.l0_y);
  draw(split.n_v, raw.v_x, raw.v_y);
  draw(split.n_u0, raw.u0_x, raw.u0_y);
  draw(split.n_t, raw.t_x, raw.t_y);
  return standardize_pools(std::move(raw));
}

DataPools make_pools(const RawDataset& data, const SplitSpec& split, std::uint64_t seed) {
  split.validate();
  const auto n = static_cast<int>(data.X.rows());
  if (n < split.total()) {
    throw ParameterError("dataset has " + std::to_string(n) + " rows, split needs " + std::to_string(split.total()));
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::size_t cursor = 0;
  auto take = [&](int count, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
    X.resize(count, data.X.cols());
    y.resize(count);
    for (int i = 0; i < count; ++i) {
      const int r = perm[cursor++];
      X.row(i) = data.X.row(r);
      y(i) = data.y(r);
    }
  };
  DataPools raw;
  take(split.n_l0, raw.l0_x, raw.l0_y);
  take(split.n_v, raw.v_x, raw.v_y);
  take(split.n_u0, raw.u0_x, raw.u0_y);
  take(split.n_t, raw.t_x, raw.t_y);
  return standardize_pools(std::move(raw));
}

}  // namespace egpal

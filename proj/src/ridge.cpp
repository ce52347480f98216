#include "fixrocket/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <Eigen/Cholesky>

#include "fixrocket/error.hpp"
#include "fixrocket/rng.hpp"
#include "text_util.hpp"

namespace fixrocket {

RidgeProblem::RidgeProblem(const RowMatrix& x, std::span<const double> y, std::span<const double> sample_weights,
                           RidgeSolver solver) {
  const Eigen::Index n = x.rows();
  const Eigen::Index f = x.cols();
  if (static_cast<std::size_t>(n) != y.size()) fail(ErrorCode::kShape, "row count differs from target count");
  if (n < 2) fail(ErrorCode::kInsufficientData, "ridge needs at least 2 rows");
  if (f < 1) fail(ErrorCode::kShape, "ridge needs at least one column");
  if (!sample_weights.empty() && sample_weights.size() != y.size()) {
    fail(ErrorCode::kShape, "sample weight count differs from target count");
  }
  if (!x.allFinite()) fail(ErrorCode::kData, "non-finite feature value");

  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  for (std::size_t i = 0; i < sample_weights.size(); ++i) {
    if (!(sample_weights[i] >= 0.0)) fail(ErrorCode::kInvalidArgument, "sample weights must be non-negative");
    w[static_cast<Eigen::Index>(i)] = sample_weights[i];
  }
  const double total = w.sum();
  if (!(total > 0.0)) fail(ErrorCode::kInvalidArgument, "sample weights sum to zero");

  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
  x_mean_ = (w.transpose() * x) / total;
  y_mean_ = w.dot(yv) / total;
  const Eigen::VectorXd root = w.cwiseSqrt();

  z_ = x;
  z_.rowwise() -= x_mean_;
  z_ = root.asDiagonal() * z_;
  t_ = root.cwiseProduct(yv - Eigen::VectorXd::Constant(n, y_mean_));

  solver_ = solver == RidgeSolver::kAuto ? (f > n ? RidgeSolver::kDual : RidgeSolver::kPrimal) : solver;
  if (solver_ == RidgeSolver::kDual) {
    gram_ = Eigen::MatrixXd::Zero(n, n);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(z_);
  } else {
    gram_ = Eigen::MatrixXd::Zero(f, f);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(z_.transpose());
  }
}

RidgeSolution RidgeProblem::solve(double alpha) const {
  if (!(alpha > 0.0)) fail(ErrorCode::kInvalidArgument, "ridge parameter must be positive");
  Eigen::MatrixXd system = gram_;
  system.diagonal().array() += alpha;
  const Eigen::LLT<Eigen::MatrixXd> llt(system.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success) fail(ErrorCode::kDegenerate, "ridge system is not positive definite");
  RidgeSolution s;
  if (solver_ == RidgeSolver::kDual) {
    const Eigen::VectorXd a = llt.solve(t_);
    s.weights = z_.transpose() * a;
  } else {
    s.weights = llt.solve(z_.transpose() * t_);
  }
  s.intercept = y_mean_ - x_mean_.dot(s.weights);
  return s;
}

RidgeSolution solve_ridge(const RowMatrix& x, std::span<const double> y, double alpha,
                          std::span<const double> sample_weights, RidgeSolver solver) {
  if (!(alpha > 0.0)) fail(ErrorCode::kInvalidArgument, "ridge parameter must be positive");
  return RidgeProblem(x, y, sample_weights, solver).solve(alpha);
}

std::size_t RidgeModel::num_active() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::vector<std::size_t> RidgeModel::active_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < mask.size(); ++c) {
    if (mask[c]) out.push_back(c);
  }
  return out;
}

namespace {

void check_labels(std::span<const double> y) {
  bool pos = false, neg = false;
  for (double v : y) {
    if (v == 1.0) pos = true;
    else if (v == -1.0) neg = true;
    else fail(ErrorCode::kData, "class targets must be +1 or -1");
  }
  if (!(pos && neg)) fail(ErrorCode::kDegenerate, "degenerate labels: both classes must be present");
}

}  // namespace

RidgeModel fit_ridge(const RowMatrix& x, std::span<const double> y, double alpha,
                     std::span<const double> sample_weights, std::span<const std::uint8_t> mask) {
  check_labels(y);
  RidgeModel m;
  m.alpha = alpha;
  if (mask.empty()) {
    m.mask.assign(static_cast<std::size_t>(x.cols()), 1);
  } else {
    if (mask.size() != static_cast<std::size_t>(x.cols())) fail(ErrorCode::kShape, "mask length differs from column count");
    m.mask.assign(mask.begin(), mask.end());
  }
  const auto active = m.active_columns();
  if (active.empty()) fail(ErrorCode::kInvalidArgument, "mask has no active column");

  RidgeSolution s;
  if (active.size() == m.mask.size()) {
    s = solve_ridge(x, y, alpha, sample_weights);
  } else {
    RowMatrix sub(x.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(active[j]));
    s = solve_ridge(sub, y, alpha, sample_weights);
  }
  m.weights.assign(s.weights.data(), s.weights.data() + s.weights.size());
  m.intercept = s.intercept;
  return m;
}

std::vector<double> decision_scores(const RidgeModel& model, const RowMatrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.num_features()) {
    fail(ErrorCode::kShape, "model expects " + std::to_string(model.num_features()) + " feature columns, got " +
                                std::to_string(x.cols()));
  }
  const bool normalize = !model.normalizer.empty();
  if (normalize && model.normalizer.size() != model.num_features()) fail(ErrorCode::kShape, "normaliser size mismatch");
  const auto active = model.active_columns();
  if (active.size() != model.weights.size()) fail(ErrorCode::kShape, "weight count differs from active mask count");

  std::vector<double> mean(active.size(), 0.0), scale(active.size(), 1.0);
  if (normalize) {
    for (std::size_t j = 0; j < active.size(); ++j) {
      mean[j] = model.normalizer.mean()[active[j]];
      scale[j] = model.normalizer.std()[active[j]] + Normalizer::kEpsilon;
    }
  }
  std::vector<double> d(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double* row = x.data() + r * x.cols();
    double acc = 0.0;
    for (std::size_t j = 0; j < active.size(); ++j) acc += (row[active[j]] - mean[j]) / scale[j] * model.weights[j];
    d[static_cast<std::size_t>(r)] = acc + model.intercept;
  }
  return d;
}

double probability(double decision) { return 1.0 / (1.0 + std::exp(-decision)); }

std::vector<double> class_balance_weights(std::span<const double> y) {
  double pos = 0.0, neg = 0.0;
  for (double v : y) (v > 0.0 ? pos : neg) += 1.0;
  const double most = std::max(pos, neg);
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = most / (y[i] > 0.0 ? pos : neg);
  return w;
}

std::vector<double> class_balance_resample(std::span<const double> y, std::uint64_t seed) {
  double pos = 0.0, neg = 0.0;
  for (double v : y) (v > 0.0 ? pos : neg) += 1.0;
  // Cumulative selection probability, 1 / N_c per row.
  std::vector<double> cumulative(y.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    acc += 1.0 / (y[i] > 0.0 ? pos : neg);
    cumulative[i] = acc;
  }
  Rng rng(seed);
  std::vector<double> counts(y.size(), 0.0);
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    counts[static_cast<std::size_t>(it - cumulative.begin())] += 1.0;
  }
  return counts;
}

std::vector<double> row_targets(const FeatureMatrix& features, std::span<const std::size_t> rows) {
  std::vector<double> y;
  y.reserve(rows.size());
  for (std::size_t r : rows) y.push_back(label_sign(features.rows.at(r).label()));
  return y;
}

RidgeModel train_classifier(const FeatureMatrix& features, std::span<const std::size_t> train_rows,
                            const TrainOptions& options, std::span<const std::uint8_t> mask) {
  Normalizer norm = Normalizer::fit(features.values, train_rows);
  RowMatrix x(static_cast<Eigen::Index>(train_rows.size()), features.values.cols());
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = features.values.row(static_cast<Eigen::Index>(train_rows[i]));
  }
  norm.apply_in_place(x);
  const auto y = row_targets(features, train_rows);
  std::vector<double> weights;
  if (options.balance == ClassBalance::kWeights) weights = class_balance_weights(y);
  if (options.balance == ClassBalance::kResample) weights = class_balance_resample(y, options.resample_seed);
  RidgeModel m = fit_ridge(x, y, options.alpha, weights, mask);
  m.normalizer = std::move(norm);
  return m;
}

// ---------------------------------------------------------------------------
// Model file

namespace {

std::string encode_mask(const std::vector<std::uint8_t>& mask) {
  std::string out;
  std::size_t i = 0;
  while (i < mask.size()) {
    std::size_t j = i;
    while (j < mask.size() && mask[j] == mask[i]) ++j;
    if (!out.empty()) out += ',';
    out += (mask[i] ? "1:" : "0:") + std::to_string(j - i);
    i = j;
  }
  return out;
}

std::vector<std::uint8_t> decode_mask(std::string_view s) {
  std::vector<std::uint8_t> mask;
  if (s.empty()) return mask;
  for (auto run : text::split(s, ',')) {
    const auto colon = run.find(':');
    if (colon == std::string_view::npos) fail(ErrorCode::kFormat, "bad mask run '" + std::string(run) + "'");
    const auto bit = text::to_int<int>(run.substr(0, colon), ErrorCode::kFormat, "mask bit");
    const auto len = text::to_int<std::size_t>(run.substr(colon + 1), ErrorCode::kFormat, "mask run");
    if (bit != 0 && bit != 1) fail(ErrorCode::kFormat, "mask bit must be 0 or 1");
    mask.insert(mask.end(), len, static_cast<std::uint8_t>(bit));
  }
  return mask;
}

std::string join17(const std::vector<double>& v) {
  std::string out;
  out.reserve(v.size() * 24);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += text::digits17(v[i]);
  }
  return out;
}

std::vector<double> parse_list(std::string_view s, std::size_t expected, const char* what) {
  std::vector<double> v;
  if (!s.empty()) {
    for (auto f : text::split(s, ',')) v.push_back(text::to_double(f, ErrorCode::kFormat, what));
  }
  if (v.size() != expected) {
    fail(ErrorCode::kIntegrity, std::string(what) + " holds " + std::to_string(v.size()) + " values, expected " +
                                    std::to_string(expected));
  }
  return v;
}

}  // namespace

void save_model(std::ostream& out, const RidgeModel& m) {
  out << "#ridge-model\n";
  out << "schema_version=" << kModelSchemaVersion << "\n";
  out << "alpha=" << text::digits17(m.alpha) << "\n";
  out << "kernel_seed=" << m.kernel_seed << "\n";
  out << "num_kernels=" << m.num_kernels << "\n";
  out << "label_encoding=HC:-1,PD:+1\n";
  out << "num_features=" << m.num_features() << "\n";
  out << "active_count=" << m.num_active() << "\n";
  out << "mask_rle=" << encode_mask(m.mask) << "\n";
  out << "intercept=" << text::digits17(m.intercept) << "\n";
  out << "normalized=" << (m.normalizer.empty() ? 0 : 1) << "\n";
  if (!m.normalizer.empty()) {
    out << "mean=" << join17(m.normalizer.mean()) << "\n";
    out << "std=" << join17(m.normalizer.std()) << "\n";
  }
  out << "weights=" << join17(m.weights) << "\n";
}

RidgeModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "#ridge-model") fail(ErrorCode::kFormat, "missing '#ridge-model' line");
  std::unordered_map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto [k, v] = text::key_value(line, ErrorCode::kFormat);
    kv.emplace(std::string(k), std::string(v));
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) fail(ErrorCode::kIntegrity, std::string("model file lacks ") + key);
    return it->second;
  };
  const int version = text::to_int<int>(get("schema_version"), ErrorCode::kFormat, "schema_version");
  if (version != kModelSchemaVersion) fail(ErrorCode::kIncompatible, "model schema_version " + std::to_string(version));

  RidgeModel m;
  m.alpha = text::to_double(get("alpha"), ErrorCode::kFormat, "alpha");
  m.kernel_seed = text::to_int<std::uint64_t>(get("kernel_seed"), ErrorCode::kFormat, "kernel_seed");
  m.num_kernels = text::to_int<std::size_t>(get("num_kernels"), ErrorCode::kFormat, "num_kernels");
  const auto features = text::to_int<std::size_t>(get("num_features"), ErrorCode::kFormat, "num_features");
  m.mask = decode_mask(get("mask_rle"));
  if (m.mask.size() != features) fail(ErrorCode::kIntegrity, "mask length differs from num_features");
  const auto active = text::to_int<std::size_t>(get("active_count"), ErrorCode::kFormat, "active_count");
  if (m.num_active() != active) fail(ErrorCode::kIntegrity, "active_count differs from mask");
  m.intercept = text::to_double(get("intercept"), ErrorCode::kFormat, "intercept");
  if (get("normalized") == "1") {
    m.normalizer = Normalizer(parse_list(get("mean"), features, "mean"), parse_list(get("std"), features, "std"));
  }
  m.weights = parse_list(get("weights"), active, "weights");
  return m;
}

}  // namespace fixrocket

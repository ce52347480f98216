#include "fixrocket/detach.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <Eigen/Cholesky>

#include "fixrocket/error.hpp"
#include "text_util.hpp"

namespace fixrocket {

DetachStepResult detach_step(const RidgeModel& model, double drop_fraction) {
  if (!(drop_fraction >= 0.0 && drop_fraction <= 1.0)) fail(ErrorCode::kInvalidArgument, "drop fraction must lie in [0, 1]");
  const auto active = model.active_columns();
  if (active.size() != model.weights.size()) fail(ErrorCode::kShape, "weight count differs from active mask count");

  DetachStepResult r;
  r.mask = model.mask;
  auto drop = static_cast<std::size_t>(std::ceil(drop_fraction * static_cast<double>(active.size()) - 1e-9));
  if (drop >= active.size() && !active.empty()) {
    drop = active.size() - 1;
    r.floored = true;
  }
  if (drop == 0) return r;

  std::vector<std::size_t> order(active.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(model.weights[a]) < std::abs(model.weights[b]);
  });
  for (std::size_t k = 0; k < drop; ++k) r.mask[active[order[k]]] = 0;
  r.dropped = drop;
  return r;
}

double detachment_score(double val_accuracy, double full_val_accuracy, double retained_fraction, double c) {
  const double relative = full_val_accuracy > 0.0 ? val_accuracy / full_val_accuracy : val_accuracy;
  return (1.0 - c) * relative + c * (1.0 - retained_fraction);
}

double sign_accuracy(std::span<const double> decisions, std::span<const double> y) {
  if (decisions.size() != y.size()) fail(ErrorCode::kShape, "decision count differs from label count");
  if (y.empty()) fail(ErrorCode::kSplit, "accuracy of an empty split is undefined");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += (decisions[i] > 0.0 ? 1.0 : -1.0) == y[i];
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

std::size_t surviving_kernels(std::span<const std::uint8_t> mask) {
  std::size_t n = 0;
  for (std::size_t k = 0; 2 * k + 1 < mask.size(); ++k) n += (mask[2 * k] || mask[2 * k + 1]);
  return n;
}

namespace {

void check_split(std::span<const double> y, const char* name) {
  bool pos = false, neg = false;
  for (double v : y) (v > 0.0 ? pos : neg) = true;
  if (!(pos && neg)) fail(ErrorCode::kSplit, std::string(name) + " split must contain both classes");
}

std::vector<double> balance_weights(std::span<const double> y, const SfdOptions& o) {
  if (o.balance == ClassBalance::kWeights) return class_balance_weights(y);
  if (o.balance == ClassBalance::kResample) return class_balance_resample(y, 0);
  return std::vector<double>(y.size(), 1.0);
}

std::vector<double> masked_decisions(const RowMatrix& x, std::span<const std::size_t> active, const Eigen::VectorXd& beta,
                                     double intercept) {
  std::vector<double> d(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double* row = x.data() + r * x.cols();
    double acc = 0.0;
    for (std::size_t j = 0; j < active.size(); ++j) acc += row[active[j]] * beta[static_cast<Eigen::Index>(j)];
    d[static_cast<std::size_t>(r)] = acc + intercept;
  }
  return d;
}

}  // namespace

SfdResult run_sfd(const RowMatrix& x_train, std::span<const double> y_train, const RowMatrix& x_val,
                  std::span<const double> y_val, const SfdOptions& options) {
  if (x_train.rows() == 0 || x_val.rows() == 0) fail(ErrorCode::kSplit, "train and validation splits must be non-empty");
  if (x_train.cols() != x_val.cols()) fail(ErrorCode::kShape, "train and validation column counts differ");
  if (static_cast<std::size_t>(x_train.rows()) != y_train.size() || static_cast<std::size_t>(x_val.rows()) != y_val.size()) {
    fail(ErrorCode::kShape, "row count differs from label count");
  }
  if (!(options.drop_per_step > 0.0 && options.drop_per_step < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "drop per step must lie in (0, 1)");
  }
  if (!(options.alpha > 0.0)) fail(ErrorCode::kInvalidArgument, "ridge parameter must be positive");
  check_split(y_train, "training");
  check_split(y_val, "validation");
  if (!x_train.allFinite() || !x_val.allFinite()) fail(ErrorCode::kData, "non-finite feature value");

  const Eigen::Index n = x_train.rows();
  const Eigen::Index f = x_train.cols();
  const auto weights = balance_weights(y_train, options);
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), n);
  const Eigen::Map<const Eigen::VectorXd> y(y_train.data(), n);
  const double total = w.sum();
  const Eigen::RowVectorXd x_mean = (w.transpose() * x_train) / total;
  const double y_mean = w.dot(y) / total;
  const Eigen::VectorXd root = w.cwiseSqrt();
  RowMatrix z = x_train;
  z.rowwise() -= x_mean;
  z = root.asDiagonal() * z;
  const Eigen::VectorXd t = root.cwiseProduct(y - Eigen::VectorXd::Constant(n, y_mean));

  DetachmentTrace trace;
  trace.drop_per_step = options.drop_per_step;
  trace.tradeoff_c = options.tradeoff_c;
  trace.total_features = static_cast<std::size_t>(f);

  RidgeModel current;
  current.alpha = options.alpha;
  current.mask.assign(static_cast<std::size_t>(f), 1);

  // Gram matrix of the active centred columns, kept while the dual form is
  // cheaper; downdated by the removed columns and rebuilt once the removed
  // mass exceeds what remains.
  Eigen::MatrixXd gram;
  bool gram_valid = false;
  std::size_t removed_since_build = 0;
  auto build_gram = [&](std::span<const std::size_t> active) {
    RowMatrix za(n, static_cast<Eigen::Index>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) za.col(static_cast<Eigen::Index>(j)) = z.col(static_cast<Eigen::Index>(active[j]));
    gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(za);
    gram_valid = true;
    removed_since_build = 0;
  };

  while (true) {
    const auto active = current.active_columns();
    const auto m = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd beta;
    if (m > n) {
      if (!gram_valid) build_gram(active);
      Eigen::MatrixXd system = gram;
      system.diagonal().array() += options.alpha;
      const Eigen::LLT<Eigen::MatrixXd> llt(system.selfadjointView<Eigen::Lower>());
      if (llt.info() != Eigen::Success) fail(ErrorCode::kDegenerate, "dual ridge system is not positive definite");
      const Eigen::VectorXd a = llt.solve(t);
      beta.resize(m);
      for (Eigen::Index j = 0; j < m; ++j) beta[j] = z.col(static_cast<Eigen::Index>(active[static_cast<std::size_t>(j)])).dot(a);
    } else {
      RowMatrix za(n, m);
      for (Eigen::Index j = 0; j < m; ++j) za.col(j) = z.col(static_cast<Eigen::Index>(active[static_cast<std::size_t>(j)]));
      Eigen::MatrixXd system = Eigen::MatrixXd::Zero(m, m);
      system.selfadjointView<Eigen::Lower>().rankUpdate(za.transpose());
      system.diagonal().array() += options.alpha;
      const Eigen::LLT<Eigen::MatrixXd> llt(system.selfadjointView<Eigen::Lower>());
      if (llt.info() != Eigen::Success) fail(ErrorCode::kDegenerate, "primal ridge system is not positive definite");
      beta = llt.solve(za.transpose() * t);
    }
    double intercept = y_mean;
    for (Eigen::Index j = 0; j < m; ++j) intercept -= x_mean[static_cast<Eigen::Index>(active[static_cast<std::size_t>(j)])] * beta[j];

    DetachStep step;
    step.retained_count = active.size();
    step.retained_fraction = static_cast<double>(active.size()) / static_cast<double>(f);
    step.mask = current.mask;
    step.train_accuracy = sign_accuracy(masked_decisions(x_train, active, beta, intercept), y_train);
    step.val_accuracy = sign_accuracy(masked_decisions(x_val, active, beta, intercept), y_val);
    trace.steps.push_back(std::move(step));

    if (active.size() <= std::max<std::size_t>(1, options.min_features)) break;
    current.weights.assign(beta.data(), beta.data() + beta.size());
    auto next = detach_step(current, options.drop_per_step);
    if (next.dropped == 0) break;
    if (options.min_features > 1) {
      // Respect the configured floor: re-activate the strongest removed ones.
      const auto kept = active.size() - next.dropped;
      if (kept < options.min_features) {
        next = detach_step(current, static_cast<double>(active.size() - options.min_features) /
                                         static_cast<double>(active.size()));
        if (next.dropped == 0) break;
      }
    }
    const auto remaining = active.size() - next.dropped;
    if (gram_valid && static_cast<Eigen::Index>(remaining) > n) {
      removed_since_build += next.dropped;
      if (removed_since_build >= remaining) {
        gram_valid = false;
      } else {
        for (std::size_t c : active) {
          if (!next.mask[c]) {
            const auto col = z.col(static_cast<Eigen::Index>(c));
            gram.selfadjointView<Eigen::Lower>().rankUpdate(col, -1.0);
          }
        }
      }
    } else {
      gram_valid = false;
    }
    current.mask = std::move(next.mask);
  }

  const double full = trace.steps.front().val_accuracy;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    auto& st = trace.steps[s];
    st.score = detachment_score(st.val_accuracy, full, st.retained_fraction, options.tradeoff_c);
    if (st.score >= best) {
      best = st.score;
      trace.selected = s;
    }
  }

  const auto& mask = trace.steps[trace.selected].mask;
  SfdResult result;
  if (options.refit_on_train_val) {
    RowMatrix both(x_train.rows() + x_val.rows(), f);
    both << x_train, x_val;
    std::vector<double> y_both(y_train.begin(), y_train.end());
    y_both.insert(y_both.end(), y_val.begin(), y_val.end());
    result.model = fit_ridge(both, y_both, options.alpha, balance_weights(y_both, options), mask);
  } else {
    result.model = fit_ridge(x_train, y_train, options.alpha, weights, mask);
  }
  result.trace = std::move(trace);
  return result;
}

ExportedFeatures export_active_features(const RidgeModel& model, const FeatureMatrix& features) {
  if (features.num_columns() != model.num_features() && features.num_rows() > 0) {
    fail(ErrorCode::kShape, "feature matrix column count differs from model mask");
  }
  ExportedFeatures e;
  e.column_ids = model.active_columns();
  e.rows = features.rows;
  e.values.resize(features.values.rows(), static_cast<Eigen::Index>(e.column_ids.size()));
  for (std::size_t j = 0; j < e.column_ids.size(); ++j) {
    e.values.col(static_cast<Eigen::Index>(j)) = features.values.col(static_cast<Eigen::Index>(e.column_ids[j]));
  }
  return e;
}

void save_trace(std::ostream& out, const DetachmentTrace& trace) {
  const auto& sel = trace.steps.at(trace.selected);
  out << "# drop_per_step=" << trace.drop_per_step << " tradeoff_c=" << trace.tradeoff_c
      << " total_features=" << trace.total_features << " selected_step=" << trace.selected
      << " selected_features=" << sel.retained_count << " selected_kernels=" << surviving_kernels(sel.mask)
      << " total_kernels=" << trace.total_features / 2 << "\n";
  out << "step,retained_count,retained_fraction,train_acc,val_acc,score,selected\n";
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const auto& st = trace.steps[s];
    out << s << "," << st.retained_count << "," << text::digits17(st.retained_fraction) << ","
        << text::digits17(st.train_accuracy) << "," << text::digits17(st.val_accuracy) << ","
        << text::digits17(st.score) << "," << (s == trace.selected ? 1 : 0) << "\n";
  }
}

void save_exported_features(std::ostream& out, const ExportedFeatures& e) {
  std::string buf = "subject,condition,task,session,trial_index";
  for (auto c : e.column_ids) buf += ",f" + std::to_string(c);
  buf += '\n';
  out << buf;
  for (std::size_t r = 0; r < e.rows.size(); ++r) {
    const auto& m = e.rows[r];
    buf = m.subject_id + "," + std::string(to_string(m.condition)) + "," + std::string(to_string(m.task)) + "," +
          m.session_id + "," + std::to_string(m.trial_index);
    for (Eigen::Index j = 0; j < e.values.cols(); ++j) {
      buf += ',';
      text::append_shortest(buf, e.values(static_cast<Eigen::Index>(r), j));
    }
    buf += '\n';
    out << buf;
  }
}

}  // namespace fixrocket

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fixrocket/rocket.hpp"

namespace fixrocket {

inline constexpr double kDefaultAlpha = 1e4;

enum class RidgeSolver { kAuto, kPrimal, kDual };

struct RidgeSolution {
  Eigen::VectorXd weights;
  double intercept = 0.0;
};

// Centred, weighted ridge system prepared once and solved for any alpha.
class RidgeProblem {
 public:
  RidgeProblem(const RowMatrix& x, std::span<const double> y, std::span<const double> sample_weights = {},
               RidgeSolver solver = RidgeSolver::kAuto);

  RidgeSolution solve(double alpha) const;
  RidgeSolver solver() const { return solver_; }

 private:
  RidgeSolver solver_;
  RowMatrix z_;               // W^1/2 (X - mean)
  Eigen::VectorXd t_;         // W^1/2 (y - mean)
  Eigen::MatrixXd gram_;      // lower triangle of Z Z' (dual) or Z' Z (primal)
  Eigen::RowVectorXd x_mean_;
  double y_mean_ = 0.0;
};

// Minimises sum_i w_i (y_i - x_i.beta - b)^2 + alpha |beta|^2. Both forms
// centre X and y on their weighted means; primal solves
// (Xc' W Xc + alpha I) beta = Xc' W yc, dual solves the n x n system
// (W^1/2 Xc Xc' W^1/2 + alpha I) a = W^1/2 yc and sets beta = Xc' W^1/2 a.
// kAuto picks dual when columns outnumber rows.
RidgeSolution solve_ridge(const RowMatrix& x, std::span<const double> y, double alpha,
                          std::span<const double> sample_weights = {}, RidgeSolver solver = RidgeSolver::kAuto);

// Linear classifier over (optionally normalised) ROCKET features.
// Labels are encoded HC -> -1, PD -> +1; positive decision means PD.
struct RidgeModel {
  std::vector<double> weights;      // one per active column, ascending column order
  double intercept = 0.0;
  double alpha = kDefaultAlpha;
  std::vector<std::uint8_t> mask;   // one per feature column
  Normalizer normalizer;            // empty when inputs are already normalised
  std::uint64_t kernel_seed = 0;
  std::size_t num_kernels = 0;

  std::size_t num_features() const { return mask.size(); }
  std::size_t num_active() const;
  std::vector<std::size_t> active_columns() const;

  friend bool operator==(const RidgeModel&, const RidgeModel&) = default;
};

// Fits on normalised features restricted to mask (all columns when empty).
// Throws kDegenerate when y holds a single class and kData on non-finite X.
RidgeModel fit_ridge(const RowMatrix& x, std::span<const double> y, double alpha,
                     std::span<const double> sample_weights = {}, std::span<const std::uint8_t> mask = {});

// d = x_active . w + intercept; x is normalised first when the model carries
// normaliser statistics.
std::vector<double> decision_scores(const RidgeModel& model, const RowMatrix& x);

// Logistic squashing, 0.5 exactly at the decision boundary.
double probability(double decision);

enum class ClassBalance { kNone, kWeights, kResample };

// Per-row weight N_max / N_c: equivalent to duplicating each class up to the
// size of the largest class.
std::vector<double> class_balance_weights(std::span<const double> y);

// Draws y.size() rows with probability proportional to 1 / N_c and returns
// the draw count of every row.
std::vector<double> class_balance_resample(std::span<const double> y, std::uint64_t seed);

struct TrainOptions {
  double alpha = kDefaultAlpha;
  ClassBalance balance = ClassBalance::kWeights;
  std::uint64_t resample_seed = 0;
};

// Fits the normaliser on the given training rows of the raw feature matrix,
// then the ridge classifier on the normalised rows.
RidgeModel train_classifier(const FeatureMatrix& features, std::span<const std::size_t> train_rows,
                            const TrainOptions& options, std::span<const std::uint8_t> mask = {});

// Labels of the given rows as +-1.
std::vector<double> row_targets(const FeatureMatrix& features, std::span<const std::size_t> rows);

inline constexpr int kModelSchemaVersion = 1;

void save_model(std::ostream& out, const RidgeModel& model);
RidgeModel load_model(std::istream& in);

}  // namespace fixrocket

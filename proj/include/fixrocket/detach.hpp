#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fixrocket/ridge.hpp"

namespace fixrocket {

struct DetachStep {
  std::size_t retained_count = 0;
  double retained_fraction = 1.0;
  std::vector<std::uint8_t> mask;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double score = 0.0;
};

struct DetachmentTrace {
  std::vector<DetachStep> steps;
  double drop_per_step = 0.05;
  double tradeoff_c = 0.1;
  std::size_t selected = 0;
  std::size_t total_features = 0;
};

struct DetachStepResult {
  std::vector<std::uint8_t> mask;
  std::size_t dropped = 0;
  bool floored = false;  // the drop was capped to keep one feature alive
};

// Deactivates ceil(drop_fraction * active) active features with the smallest
// |weight|, lower column index first on ties.
DetachStepResult detach_step(const RidgeModel& model, double drop_fraction);

struct SfdOptions {
  double alpha = kDefaultAlpha;
  double drop_per_step = 0.05;
  double tradeoff_c = 0.1;
  std::size_t min_features = 1;
  bool refit_on_train_val = false;
  ClassBalance balance = ClassBalance::kWeights;
};

struct SfdResult {
  DetachmentTrace trace;
  RidgeModel model;
};

// Selection score of a step: (1 - c) * acc_val / acc_val(full) + c * (1 - retained_fraction).
double detachment_score(double val_accuracy, double full_val_accuracy, double retained_fraction, double c);

// Sequential feature detachment over normalised features. Each step refits
// the ridge classifier on the active columns, records accuracies and drops
// the smallest-|weight| share; the step with the best score is refit and
// returned. Ties in score go to the step with fewer features.
SfdResult run_sfd(const RowMatrix& x_train, std::span<const double> y_train, const RowMatrix& x_val,
                  std::span<const double> y_val, const SfdOptions& options = {});

// Fraction of rows whose decision sign matches y (d > 0 means +1).
double sign_accuracy(std::span<const double> decisions, std::span<const double> y);

// Number of kernels with at least one surviving feature, assuming
// (ppv, max) column pairs.
std::size_t surviving_kernels(std::span<const std::uint8_t> mask);

struct ExportedFeatures {
  RowMatrix values;
  std::vector<std::size_t> column_ids;  // ascending
  std::vector<RowMeta> rows;
};

// Active-column submatrix of the raw features, for external embedding tools.
ExportedFeatures export_active_features(const RidgeModel& model, const FeatureMatrix& features);

void save_trace(std::ostream& out, const DetachmentTrace& trace);
void save_exported_features(std::ostream& out, const ExportedFeatures& exported);

}  // namespace fixrocket

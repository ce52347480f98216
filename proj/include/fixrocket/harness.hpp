#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fixrocket/detach.hpp"
#include "fixrocket/preprocess.hpp"
#include "fixrocket/ridge.hpp"
#include "fixrocket/rocket.hpp"

namespace fixrocket {

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

// Default trial ratios follow an 880 / 264 / 440 partition of 1584 trials.
struct SplitRatios {
  double train = 880.0 / 1584.0;
  double val = 264.0 / 1584.0;
  double test = 440.0 / 1584.0;

  double operator[](Split s) const { return s == Split::kTrain ? train : s == Split::kVal ? val : test; }
};

struct SplitPlan {
  std::map<std::string, Split> assignment;  // subject -> split
  SplitRatios ratios;
  std::uint64_t seed = 0;

  Split split_of(const std::string& subject_id) const;
  // Indices of rows (trials) assigned to a split, ascending.
  std::vector<std::size_t> rows(std::span<const RowMeta> rows, Split s) const;
  std::vector<std::size_t> rows(const TrialDataset& dataset, Split s) const;

  friend bool operator==(const SplitPlan& a, const SplitPlan& b) {
    return a.assignment == b.assignment && a.seed == b.seed;
  }
};

// Subject-exclusive split, stratified by class. Per class, subjects are
// shuffled, ordered by trial count (largest first), one subject is placed in
// each split, and the rest go greedily to the split with the largest trial
// deficit against its target.
SplitPlan make_split(const TrialDataset& dataset, const SplitRatios& ratios, std::uint64_t seed);

// k subject-exclusive folds stratified by class; plan i has fold i as
// validation and every other fold as training.
std::vector<SplitPlan> make_folds(const TrialDataset& dataset, std::size_t k, std::uint64_t seed);

void save_split(std::ostream& out, const SplitPlan& plan);
SplitPlan load_split(std::istream& in);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool absent = false;  // class missing from both predictions and labels
};

struct Metrics {
  std::size_t count = 0;
  std::size_t true_pd = 0, false_pd = 0, true_hc = 0, false_hc = 0;
  double accuracy = 0.0;
  ClassMetrics hc;
  ClassMetrics pd;
  double uf1 = 0.0;  // unweighted mean of the two class F1 scores
};

Metrics compute_metrics(std::span<const Label> predictions, std::span<const Label> labels);

// uF1 of a classifier that always predicts the majority class, whose share
// of the samples is p: (2p / (1 + p)) / 2.
double majority_baseline_uf1(std::size_t pd_count, std::size_t hc_count);

struct SubjectScore {
  std::string subject_id;
  Label label = Label::kHC;
  double score = 0.0;
  Label prediction = Label::kHC;
  std::size_t trials = 0;
};

// Soft voting: subject score is the mean trial probability; PD iff score > threshold.
std::vector<SubjectScore> aggregate_subjects(std::span<const RowMeta> rows, std::span<const double> probabilities,
                                             double threshold = 0.5);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

struct ModelConfig {
  std::size_t num_kernels = kDefaultNumKernels;
  double alpha = kDefaultAlpha;
  ClassBalance balance = ClassBalance::kWeights;
  double threshold = 0.5;
  unsigned threads = 1;
};

// Kernel-bank seed derived from an experiment seed.
std::uint64_t kernel_seed_for(std::uint64_t seed);

struct Evaluation {
  std::vector<std::size_t> rows;       // evaluated feature rows
  std::vector<double> decisions;
  std::vector<double> probabilities;
  Metrics trial;
  std::vector<SubjectScore> subjects;
  Metrics subject;
};

Evaluation evaluate_model(const RidgeModel& model, const FeatureMatrix& features, std::span<const std::size_t> rows,
                          double threshold = 0.5);

// Normaliser and ridge fitted on the plan's training rows only.
RidgeModel train_on_plan(const FeatureMatrix& features, const SplitPlan& plan, const ModelConfig& config,
                         std::uint64_t kernel_seed);

// SFD on the plan's training and validation rows; the returned model carries
// the training-row normaliser.
SfdResult detach_on_plan(const FeatureMatrix& features, const SplitPlan& plan, const ModelConfig& config,
                         const SfdOptions& options, std::uint64_t kernel_seed);

struct SeedRun {
  std::uint64_t seed = 0;
  std::uint64_t kernel_seed = 0;
  Evaluation test;
};

struct ExperimentReport {
  ModelConfig config;
  std::vector<SeedRun> runs;
  MeanStd trial_accuracy, trial_uf1, subject_accuracy, subject_uf1;

  std::string table() const;
};

// For each seed: kernel bank, transform, train (class-balanced), evaluate on test.
ExperimentReport run_experiment(const TrialDataset& dataset, const SplitPlan& plan, const ModelConfig& config,
                                std::span<const std::uint64_t> seeds);

struct GridConfig {
  std::vector<std::size_t> kernel_counts{100, 1000, 10000};
  std::vector<double> alphas{1e-2, 1e-3, 1e-4};
  std::uint64_t seed = 0;
  ClassBalance balance = ClassBalance::kWeights;
  unsigned threads = 1;
};

struct GridResult {
  std::vector<std::size_t> kernel_counts;
  std::vector<double> alphas;
  std::vector<std::vector<double>> mean_uf1;                 // [kernels][alpha]
  std::vector<std::vector<std::vector<double>>> fold_uf1;    // [kernels][alpha][fold]
  std::size_t best_kernels = 0;
  std::size_t best_alpha = 0;

  std::string table() const;
};

// Mean over folds of the validation uF1 of one closed-form fit per cell.
GridResult grid_search(const TrialDataset& dataset, std::span<const SplitPlan> folds, const GridConfig& config);

struct SweepConfig {
  std::vector<double> cutoffs;  // 0 disables filtering
  int order = 8;
  FilterPasses passes = FilterPasses::kForwardBackward;
  ModelConfig model;
  SplitRatios ratios;
  std::uint64_t split_seed = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  // 0 followed by 2.5 ... 50 Hz in 2.5 Hz steps.
  static std::vector<double> default_cutoffs();
};

struct SweepPoint {
  double cutoff_hz = 0.0;
  MeanStd trial_uf1;
  MeanStd subject_uf1;
  MeanStd trial_accuracy;
  MeanStd subject_accuracy;
  double trial_baseline_uf1 = 0.0;
  double subject_baseline_uf1 = 0.0;
  std::size_t test_trials = 0;
  std::size_t test_subjects = 0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::string table() const;
};

SweepResult cutoff_sweep(std::span<const RawSession> sessions, const SweepConfig& config);

struct GroupAccuracy {
  std::string attribute;  // "task" or "medication"
  std::string level;      // "pro", "anti", "PD_ON", "PD_OFF"
  MeanStd accuracy;       // across seeds
  std::size_t trials = 0; // group size in one run
  bool present = false;
};

// Trial accuracy grouped by task and by medication state (PD trials only).
std::vector<GroupAccuracy> attribute_report(const ExperimentReport& report, std::span<const RowMeta> rows);
std::string attribute_table(std::span<const GroupAccuracy> groups);

// Per-trial predictions of one evaluated split; `report` rebuilds every
// summary table from this file alone.
struct Prediction {
  RowMeta meta;
  Split split = Split::kTest;
  double decision = 0.0;
  double probability = 0.0;
};

std::vector<Prediction> predictions_of(const Evaluation& evaluation, std::span<const RowMeta> rows, Split split);
void save_predictions(std::ostream& out, std::span<const Prediction> predictions);
std::vector<Prediction> load_predictions(std::istream& in);

struct RunSummary {
  Metrics trial;
  Metrics subject;
  std::vector<SubjectScore> subjects;
  std::vector<GroupAccuracy> groups;  // single run, std = 0
  double threshold = 0.5;
};

RunSummary summarize_predictions(std::span<const Prediction> predictions, double threshold = 0.5);
std::string summary_table(const RunSummary& summary);
// Flat key=value lines.
std::string metrics_kv(const RunSummary& summary);

// Plot-ready long format: experiment,parameter,level,metric,value.
std::string long_format(const ExperimentReport& report);
std::string long_format(const GridResult& grid);
std::string long_format(const SweepResult& sweep);

}  // namespace fixrocket

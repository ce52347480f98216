#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixrocket/error.hpp"
#include "fixrocket/harness.hpp"
#include "fixrocket/rng.hpp"
#include "text_util.hpp"

namespace fixrocket {

std::uint64_t kernel_seed_for(std::uint64_t seed) { return derive_seed(seed, "kernels"); }

Evaluation evaluate_model(const RidgeModel& model, const FeatureMatrix& features, std::span<const std::size_t> rows,
                          double threshold) {
  if (rows.empty()) fail(ErrorCode::kSplit, "evaluation split is empty");
  const FeatureMatrix sub = features.select_rows(rows);
  Evaluation e;
  e.rows.assign(rows.begin(), rows.end());
  e.decisions = decision_scores(model, sub.values);
  e.probabilities.reserve(e.decisions.size());
  std::vector<Label> pred, truth;
  for (std::size_t i = 0; i < e.decisions.size(); ++i) {
    e.probabilities.push_back(probability(e.decisions[i]));
    pred.push_back(e.decisions[i] > 0.0 ? Label::kPD : Label::kHC);
    truth.push_back(sub.rows[i].label());
  }
  e.trial = compute_metrics(pred, truth);
  e.subjects = aggregate_subjects(sub.rows, e.probabilities, threshold);
  pred.clear();
  truth.clear();
  for (const auto& s : e.subjects) {
    pred.push_back(s.prediction);
    truth.push_back(s.label);
  }
  e.subject = compute_metrics(pred, truth);
  return e;
}

RidgeModel train_on_plan(const FeatureMatrix& features, const SplitPlan& plan, const ModelConfig& config,
                         std::uint64_t kernel_seed) {
  const auto train = plan.rows(features.rows, Split::kTrain);
  TrainOptions opts;
  opts.alpha = config.alpha;
  opts.balance = config.balance;
  opts.resample_seed = derive_seed(plan.seed, "sampling");
  RidgeModel m = train_classifier(features, train, opts);
  m.kernel_seed = kernel_seed;
  m.num_kernels = features.num_columns() / 2;
  return m;
}

SfdResult detach_on_plan(const FeatureMatrix& features, const SplitPlan& plan, const ModelConfig& config,
                         const SfdOptions& options, std::uint64_t kernel_seed) {
  const auto train = plan.rows(features.rows, Split::kTrain);
  const auto val = plan.rows(features.rows, Split::kVal);
  if (train.empty() || val.empty()) fail(ErrorCode::kSplit, "SFD needs non-empty train and validation splits");
  const Normalizer norm = Normalizer::fit(features.values, train);
  const FeatureMatrix tr = features.select_rows(train);
  const FeatureMatrix va = features.select_rows(val);
  SfdOptions o = options;
  o.alpha = config.alpha;
  o.balance = config.balance;
  auto result = run_sfd(norm.apply(tr.values), row_targets(features, train), norm.apply(va.values),
                        row_targets(features, val), o);
  result.model.normalizer = norm;
  result.model.kernel_seed = kernel_seed;
  result.model.num_kernels = features.num_columns() / 2;
  return result;
}

ExperimentReport run_experiment(const TrialDataset& dataset, const SplitPlan& plan, const ModelConfig& config,
                                std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) fail(ErrorCode::kInvalidArgument, "experiment needs at least one seed");
  ExperimentReport report;
  report.config = config;
  const auto test = plan.rows(dataset, Split::kTest);
  std::vector<double> ta, tf, sa, sf;
  for (auto seed : seeds) {
    SeedRun run;
    run.seed = seed;
    run.kernel_seed = kernel_seed_for(seed);
    const auto bank = generate_kernels(config.num_kernels, kTrialLength, kTrialChannels, run.kernel_seed);
    const auto features = transform(dataset, bank, {config.threads});
    const auto model = train_on_plan(features, plan, config, run.kernel_seed);
    run.test = evaluate_model(model, features, test, config.threshold);
    ta.push_back(run.test.trial.accuracy);
    tf.push_back(run.test.trial.uf1);
    sa.push_back(run.test.subject.accuracy);
    sf.push_back(run.test.subject.uf1);
    report.runs.push_back(std::move(run));
  }
  report.trial_accuracy = mean_std(ta);
  report.trial_uf1 = mean_std(tf);
  report.subject_accuracy = mean_std(sa);
  report.subject_uf1 = mean_std(sf);
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string fmt(const MeanStd& m) { return fmt(m.mean) + " +- " + fmt(m.std); }

}  // namespace

std::string ExperimentReport::table() const {
  std::ostringstream o;
  o << "# experiment kernels=" << config.num_kernels << " alpha=" << text::digits17(config.alpha)
    << " threshold=" << config.threshold << " seeds=" << runs.size() << "\n";
  o << "seed,trial_accuracy,trial_uf1,subject_accuracy,subject_uf1,test_trials,test_subjects\n";
  for (const auto& r : runs) {
    o << r.seed << "," << fmt(r.test.trial.accuracy) << "," << fmt(r.test.trial.uf1) << ","
      << fmt(r.test.subject.accuracy) << "," << fmt(r.test.subject.uf1) << "," << r.test.trial.count << ","
      << r.test.subject.count << "\n";
  }
  o << "mean_std," << fmt(trial_accuracy) << "," << fmt(trial_uf1) << "," << fmt(subject_accuracy) << ","
    << fmt(subject_uf1) << ",,\n";
  return o.str();
}

GridResult grid_search(const TrialDataset& dataset, std::span<const SplitPlan> folds, const GridConfig& config) {
  if (folds.empty()) fail(ErrorCode::kFold, "grid search needs at least one fold");
  GridResult g;
  g.kernel_counts = config.kernel_counts;
  g.alphas = config.alphas;
  g.mean_uf1.assign(g.kernel_counts.size(), std::vector<double>(g.alphas.size(), 0.0));
  g.fold_uf1.assign(g.kernel_counts.size(), std::vector<std::vector<double>>(g.alphas.size()));

  for (std::size_t ki = 0; ki < g.kernel_counts.size(); ++ki) {
    const auto bank = generate_kernels(g.kernel_counts[ki], kTrialLength, kTrialChannels, kernel_seed_for(config.seed));
    const auto features = transform(dataset, bank, {config.threads});
    for (const auto& fold : folds) {
      const auto train = fold.rows(features.rows, Split::kTrain);
      const auto val = fold.rows(features.rows, Split::kVal);
      const Normalizer norm = Normalizer::fit(features.values, train);
      const auto y = row_targets(features, train);
      std::vector<double> w;
      if (config.balance == ClassBalance::kWeights) w = class_balance_weights(y);
      if (config.balance == ClassBalance::kResample) w = class_balance_resample(y, derive_seed(config.seed, "sampling"));
      const RidgeProblem problem(norm.apply(features.select_rows(train).values), y, w);
      const FeatureMatrix va = features.select_rows(val);
      const RowMatrix xv = norm.apply(va.values);
      for (std::size_t ai = 0; ai < g.alphas.size(); ++ai) {
        const auto s = problem.solve(g.alphas[ai]);
        const Eigen::VectorXd d = (xv * s.weights).array() + s.intercept;
        std::vector<Label> pred, truth;
        for (Eigen::Index i = 0; i < d.size(); ++i) {
          pred.push_back(d[i] > 0.0 ? Label::kPD : Label::kHC);
          truth.push_back(va.rows[static_cast<std::size_t>(i)].label());
        }
        g.fold_uf1[ki][ai].push_back(compute_metrics(pred, truth).uf1);
      }
    }
    for (std::size_t ai = 0; ai < g.alphas.size(); ++ai) g.mean_uf1[ki][ai] = mean_std(g.fold_uf1[ki][ai]).mean;
  }
  double best = -1.0;
  for (std::size_t ki = 0; ki < g.kernel_counts.size(); ++ki) {
    for (std::size_t ai = 0; ai < g.alphas.size(); ++ai) {
      if (g.mean_uf1[ki][ai] > best) {
        best = g.mean_uf1[ki][ai];
        g.best_kernels = ki;
        g.best_alpha = ai;
      }
    }
  }
  return g;
}

std::string GridResult::table() const {
  std::ostringstream o;
  o << "# grid search: mean validation uF1 over " << (fold_uf1.empty() || fold_uf1[0].empty() ? 0 : fold_uf1[0][0].size())
    << " folds; rows = kernels, columns = ridge parameter\n";
  o << "kernels";
  for (double a : alphas) o << "," << text::digits17(a);
  o << "\n";
  for (std::size_t ki = 0; ki < kernel_counts.size(); ++ki) {
    o << kernel_counts[ki];
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) o << "," << fmt(mean_uf1[ki][ai]);
    o << "\n";
  }
  if (!kernel_counts.empty() && !alphas.empty()) {
    o << "# best kernels=" << kernel_counts[best_kernels] << " alpha=" << text::digits17(alphas[best_alpha]) << "\n";
  }
  return o.str();
}

std::vector<double> SweepConfig::default_cutoffs() {
  std::vector<double> c{0.0};
  for (int i = 1; i <= 20; ++i) c.push_back(2.5 * i);
  return c;
}

SweepResult cutoff_sweep(std::span<const RawSession> sessions, const SweepConfig& config) {
  if (sessions.empty()) fail(ErrorCode::kInvalidArgument, "cutoff sweep needs sessions");
  SweepResult result;
  for (double cutoff : config.cutoffs) {
    PreprocessOptions options;
    if (cutoff > 0.0) {
      FilterSpec spec;
      spec.cutoff_hz = cutoff;
      spec.order = config.order;
      spec.passes = config.passes;
      spec.sample_rate = sessions.front().sample_rate;
      spec.validate();
      options.filter = spec;
    } else {
      options.filter.reset();
    }
    const auto pre = preprocess_pipeline(sessions, options);
    const auto plan = make_split(pre.dataset, config.ratios, config.split_seed);
    const auto report = run_experiment(pre.dataset, plan, config.model, config.seeds);

    SweepPoint p;
    p.cutoff_hz = cutoff;
    p.trial_uf1 = report.trial_uf1;
    p.subject_uf1 = report.subject_uf1;
    p.trial_accuracy = report.trial_accuracy;
    p.subject_accuracy = report.subject_accuracy;
    const auto& first = report.runs.front().test;
    std::size_t pd = 0, hc = 0, spd = 0, shc = 0;
    for (auto r : first.rows) (pre.dataset[r].label() == Label::kPD ? pd : hc)++;
    for (const auto& s : first.subjects) (s.label == Label::kPD ? spd : shc)++;
    p.trial_baseline_uf1 = majority_baseline_uf1(pd, hc);
    p.subject_baseline_uf1 = majority_baseline_uf1(spd, shc);
    p.test_trials = pd + hc;
    p.test_subjects = spd + shc;
    result.points.push_back(p);
  }
  return result;
}

std::string SweepResult::table() const {
  std::ostringstream o;
  o << "cutoff_hz,trial_uf1_mean,trial_uf1_std,subject_uf1_mean,subject_uf1_std,trial_baseline_uf1,"
       "subject_baseline_uf1,test_trials,test_subjects\n";
  for (const auto& p : points) {
    o << text::shortest(p.cutoff_hz) << "," << fmt(p.trial_uf1.mean) << "," << fmt(p.trial_uf1.std) << ","
      << fmt(p.subject_uf1.mean) << "," << fmt(p.subject_uf1.std) << "," << fmt(p.trial_baseline_uf1) << ","
      << fmt(p.subject_baseline_uf1) << "," << p.test_trials << "," << p.test_subjects << "\n";
  }
  return o.str();
}

std::vector<GroupAccuracy> attribute_report(const ExperimentReport& report, std::span<const RowMeta> rows) {
  struct Group {
    const char* attribute;
    const char* level;
    bool (*member)(const RowMeta&);
  };
  static const Group kGroups[] = {
      {"task", "pro", [](const RowMeta& r) { return r.task == Task::kProsaccade; }},
      {"task", "anti", [](const RowMeta& r) { return r.task == Task::kAntisaccade; }},
      {"medication", "PD_ON", [](const RowMeta& r) { return r.condition == Condition::kPDOn; }},
      {"medication", "PD_OFF", [](const RowMeta& r) { return r.condition == Condition::kPDOff; }},
  };
  std::vector<GroupAccuracy> out;
  for (const auto& g : kGroups) {
    GroupAccuracy ga;
    ga.attribute = g.attribute;
    ga.level = g.level;
    std::vector<double> acc;
    for (const auto& run : report.runs) {
      std::size_t hits = 0, n = 0;
      for (std::size_t i = 0; i < run.test.rows.size(); ++i) {
        const auto& meta = rows[run.test.rows[i]];
        if (!g.member(meta)) continue;
        ++n;
        hits += (run.test.decisions[i] > 0.0) == (meta.label() == Label::kPD);
      }
      ga.trials = n;
      if (n > 0) acc.push_back(static_cast<double>(hits) / static_cast<double>(n));
    }
    ga.present = !acc.empty();
    ga.accuracy = mean_std(acc);
    out.push_back(std::move(ga));
  }
  return out;
}

std::string attribute_table(std::span<const GroupAccuracy> groups) {
  std::ostringstream o;
  o << "attribute,level,trials,accuracy_mean,accuracy_std\n";
  for (const auto& g : groups) {
    o << g.attribute << "," << g.level << "," << g.trials << ",";
    if (g.present) o << fmt(g.accuracy.mean) << "," << fmt(g.accuracy.std) << "\n";
    else o << "absent,absent\n";
  }
  return o.str();
}

std::string long_format(const ExperimentReport& report) {
  std::ostringstream o;
  o << "experiment,parameter,level,metric,value\n";
  for (const auto& r : report.runs) {
    const std::string level = std::to_string(r.seed);
    o << "experiment,seed," << level << ",trial_accuracy," << text::digits17(r.test.trial.accuracy) << "\n";
    o << "experiment,seed," << level << ",trial_uf1," << text::digits17(r.test.trial.uf1) << "\n";
    o << "experiment,seed," << level << ",subject_accuracy," << text::digits17(r.test.subject.accuracy) << "\n";
    o << "experiment,seed," << level << ",subject_uf1," << text::digits17(r.test.subject.uf1) << "\n";
  }
  return o.str();
}

std::string long_format(const GridResult& g) {
  std::ostringstream o;
  o << "experiment,parameter,level,metric,value\n";
  for (std::size_t ki = 0; ki < g.kernel_counts.size(); ++ki) {
    for (std::size_t ai = 0; ai < g.alphas.size(); ++ai) {
      o << "grid_search,kernels:alpha," << g.kernel_counts[ki] << ":" << text::digits17(g.alphas[ai])
        << ",mean_val_uf1," << text::digits17(g.mean_uf1[ki][ai]) << "\n";
    }
  }
  return o.str();
}

std::string long_format(const SweepResult& s) {
  std::ostringstream o;
  o << "experiment,parameter,level,metric,value\n";
  for (const auto& p : s.points) {
    const auto level = text::shortest(p.cutoff_hz);
    o << "cutoff_sweep,cutoff_hz," << level << ",trial_uf1," << text::digits17(p.trial_uf1.mean) << "\n";
    o << "cutoff_sweep,cutoff_hz," << level << ",subject_uf1," << text::digits17(p.subject_uf1.mean) << "\n";
    o << "cutoff_sweep,cutoff_hz," << level << ",trial_baseline_uf1," << text::digits17(p.trial_baseline_uf1) << "\n";
    o << "cutoff_sweep,cutoff_hz," << level << ",subject_baseline_uf1," << text::digits17(p.subject_baseline_uf1) << "\n";
  }
  return o.str();
}

}  // namespace fixrocket

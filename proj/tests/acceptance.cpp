// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance --criterion N    run one criterion (exit 0 on pass)
//   acceptance                  run all of them

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fixrocket/detach.hpp"
#include "fixrocket/harness.hpp"
#include "fixrocket/preprocess.hpp"
#include "fixrocket/ridge.hpp"
#include "fixrocket/rng.hpp"
#include "fixrocket/rocket.hpp"
#include "fixrocket/synthgen.hpp"

using namespace fixrocket;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

// ---------------------------------------------------------------------------
// 1. convolution oracle

std::vector<double> naive_map(const Trial& t, const Kernel& k) {
  const long n = static_cast<long>(kTrialLength);
  const long pad = k.padding ? (k.length - 1) * k.dilation / 2 : 0;
  const long out = n + 2 * pad - (k.length - 1) * k.dilation;
  std::vector<double> f(static_cast<std::size_t>(std::max(0L, out)));
  for (long i = 0; i < out; ++i) {
    double acc = k.bias;
    for (std::size_t c = 0; c < k.channels.size(); ++c) {
      const auto ch = t.channel(static_cast<std::size_t>(k.channels[c]));
      for (long j = 0; j < k.length; ++j) {
        const long s = i - pad + j * k.dilation;
        if (s >= 0 && s < n) acc += k.weights[c * static_cast<std::size_t>(k.length) + static_cast<std::size_t>(j)] * ch[static_cast<std::size_t>(s)];
      }
    }
    f[static_cast<std::size_t>(i)] = acc;
  }
  return f;
}

Outcome convolution_oracle() {
  Stopwatch sw;
  const auto bank = generate_kernels(50, kTrialLength, kTrialChannels, 20240);
  Rng rng(77);
  double worst = 0.0;
  for (const auto& k : bank.kernels) {
    Trial t;
    t.values.resize(kTrialChannels * kTrialLength);
    for (auto& v : t.values) v = rng.normal();
    const auto want = naive_map(t, k);
    const auto got = feature_map(view_of(t), k);
    if (got.size() != want.size()) return {false, "feature map length mismatch"};
    double mx = -1e300, pos = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i) {
      worst = std::max(worst, std::abs(got[i] - want[i]) / std::max(1.0, std::abs(want[i])));
      mx = std::max(mx, want[i]);
      pos += want[i] > 0.0;
    }
    const auto f = apply_kernel(view_of(t), k);
    worst = std::max(worst, rel(f.max, mx));
    worst = std::max(worst, std::abs(f.ppv - pos / static_cast<double>(want.size())));
  }
  const double secs = sw.seconds();
  return {worst <= 1e-9 && secs < 10.0,
          "50 pairs, worst relative error " + fmt("%.2e", worst) + " (limit 1e-9), " + fmt("%.2f", secs) + " s (limit 10 s)"};
}

// ---------------------------------------------------------------------------
// 2. ridge oracle

Outcome ridge_oracle() {
  Stopwatch sw;
  Rng rng(4242);
  double worst_oracle = 0.0, worst_forms = 0.0;
  for (int p = 0; p < 20; ++p) {
    const long n = 4 + static_cast<long>(rng.below(27));
    const long f = 1 + static_cast<long>(rng.below(10));
    RowMatrix x(n, f);
    std::vector<double> y(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < f; ++j) x(i, j) = rng.normal();
      y[static_cast<std::size_t>(i)] = i % 2 ? 1.0 : -1.0;
    }
    const double alpha = std::pow(10.0, rng.uniform(-2.0, 2.0));
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::MatrixXd xc = x.rowwise() - mean;
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    const Eigen::VectorXd yc = yv.array() - yv.mean();
    const Eigen::MatrixXd inv = (xc.transpose() * xc + alpha * Eigen::MatrixXd::Identity(f, f)).inverse();
    const Eigen::VectorXd w = inv * xc.transpose() * yc;
    const auto primal = solve_ridge(x, y, alpha, {}, RidgeSolver::kPrimal);
    const auto dual = solve_ridge(x, y, alpha, {}, RidgeSolver::kDual);
    const double scale = w.cwiseAbs().maxCoeff();
    worst_oracle = std::max(worst_oracle, (primal.weights - w).cwiseAbs().maxCoeff() / scale);
    worst_oracle = std::max(worst_oracle, (dual.weights - w).cwiseAbs().maxCoeff() / scale);
    worst_forms = std::max(worst_forms, (dual.weights - primal.weights).cwiseAbs().maxCoeff() / scale);
  }
  const double secs = sw.seconds();
  return {worst_oracle <= 1e-6 && worst_forms <= 1e-6 && secs < 5.0,
          "20 problems, worst vs explicit inverse " + fmt("%.2e", worst_oracle) + ", dual vs primal " +
              fmt("%.2e", worst_forms) + " (limit 1e-6), " + fmt("%.2f", secs) + " s (limit 5 s)"};
}

// ---------------------------------------------------------------------------
// 3. filter response

double steady_gain(double f_hz, const FilterSpec& spec) {
  const std::size_t n = 9000;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * std::numbers::pi * f_hz * static_cast<double>(i) / spec.sample_rate);
  const auto y = butterworth_highpass(x, spec);
  double s = 0.0, c = 0.0;
  const std::size_t lo = 1500, hi = 7500;  // 20 s window, whole cycles for 0.05 Hz steps
  for (std::size_t i = lo; i < hi; ++i) {
    const double w = 2.0 * std::numbers::pi * f_hz * static_cast<double>(i) / spec.sample_rate;
    s += y[i] * std::sin(w);
    c += y[i] * std::cos(w);
  }
  return 2.0 * std::hypot(s, c) / static_cast<double>(hi - lo);
}

double db(double g) { return 20.0 * std::log10(std::max(g, 1e-300)); }

Outcome filter_response() {
  Stopwatch sw;
  const FilterSpec spec;
  const double g5 = db(steady_gain(5.0, spec));
  double worst_low = -1e300, worst_low_f = 0.0, worst_high = -1e300, worst_high_f = 0.0;
  for (double f = 4.0; f <= 7.0 + 1e-9; f += 0.25) {
    const double g = db(steady_gain(f, spec));
    if (g > worst_low) worst_low = g, worst_low_f = f;
  }
  for (double f = 8.0; f <= 14.0 + 1e-9; f += 0.25) {
    const double g = db(steady_gain(f, spec));
    if (g > worst_high) worst_high = g, worst_high_f = f;
  }
  const double r20 = steady_gain(20.0, spec);
  const double g40 = db(steady_gain(40.0, spec));
  const double secs = sw.seconds();
  const bool ok5 = g5 <= -80.0, ok_low = worst_low <= -60.0, ok_high = worst_high <= -60.0;
  const bool ok20 = std::abs(r20 - 0.5) <= 0.02, ok40 = std::abs(g40) <= 0.2, ok_t = secs < 5.0;
  std::string d = "5 Hz " + fmt("%.1f", g5) + " dB" + (ok5 ? "" : " [over -80]") + "; 4-7 Hz max " +
                  fmt("%.1f", worst_low) + " dB at " + fmt("%.2f", worst_low_f) + " Hz" + (ok_low ? "" : " [over -60]") +
                  "; 8-14 Hz max " + fmt("%.1f", worst_high) + " dB at " + fmt("%.2f", worst_high_f) + " Hz" +
                  (ok_high ? "" : " [over -60]") + "; 20 Hz ratio " + fmt("%.4f", r20) + (ok20 ? "" : " [outside 0.5+-0.02]") +
                  "; 40 Hz " + fmt("%.3f", g40) + " dB" + (ok40 ? "" : " [outside 0.2 dB]") + "; " + fmt("%.2f", secs) + " s";
  return {ok5 && ok_low && ok_high && ok20 && ok40 && ok_t, d};
}

// ---------------------------------------------------------------------------
// 4. metrics oracle

struct MetricCase {
  std::vector<int> pred, truth;  // 1 = PD
  std::size_t tp, fp, tn, fn;
  double accuracy, hc_f1, pd_f1, uf1;
};

std::vector<int> repeat(std::initializer_list<std::pair<int, int>> runs) {
  std::vector<int> v;
  for (auto [value, count] : runs) v.insert(v.end(), static_cast<std::size_t>(count), value);
  return v;
}

Outcome metrics_oracle() {
  // Hand-computed confusion matrices. F1 = 2 tp / (2 tp + fp + fn) per class.
  const std::vector<MetricCase> cases{
      {{1, 0, 1, 0}, {1, 0, 1, 0}, 2, 0, 2, 0, 1.0, 1.0, 1.0, 1.0},
      {{1, 0, 0, 1}, {1, 1, 0, 0}, 1, 1, 1, 1, 0.5, 0.5, 0.5, 0.5},
      {repeat({{0, 100}}), repeat({{1, 40}, {0, 60}}), 0, 0, 60, 40, 0.6, 0.75, 0.0, 0.375},
      {repeat({{1, 10}}), repeat({{1, 7}, {0, 3}}), 7, 3, 0, 0, 0.7, 0.0, 14.0 / 17.0, 7.0 / 17.0},
      {{0, 1, 0, 1}, {1, 0, 1, 0}, 0, 2, 0, 2, 0.0, 0.0, 0.0, 0.0},
      {{1, 1, 1, 0, 0}, {1, 1, 0, 0, 1}, 2, 1, 1, 1, 0.6, 0.5, 2.0 / 3.0, 7.0 / 12.0},
      {repeat({{1, 3}, {0, 3}}), repeat({{1, 5}, {0, 1}}), 3, 0, 1, 2, 4.0 / 6.0, 0.5, 0.75, 0.625},
      {{0, 0, 0}, {0, 0, 0}, 0, 0, 3, 0, 1.0, 1.0, 0.0, 0.5},
      {repeat({{1, 9}, {0, 1}, {1, 2}, {0, 8}}), repeat({{1, 10}, {0, 10}}), 9, 2, 8, 1, 0.85, 16.0 / 19.0, 18.0 / 21.0,
       (16.0 / 19.0 + 18.0 / 21.0) / 2.0},
      {{1}, {0}, 0, 1, 0, 0, 0.0, 0.0, 0.0, 0.0},
  };
  const double tol = 1e-12;
  int failed = 0;
  std::string first_failure;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    std::vector<Label> p, t;
    for (int v : c.pred) p.push_back(v ? Label::kPD : Label::kHC);
    for (int v : c.truth) t.push_back(v ? Label::kPD : Label::kHC);
    const auto m = compute_metrics(p, t);
    const bool ok = m.true_pd == c.tp && m.false_pd == c.fp && m.true_hc == c.tn && m.false_hc == c.fn &&
                    std::abs(m.accuracy - c.accuracy) <= tol && std::abs(m.hc.f1 - c.hc_f1) <= tol &&
                    std::abs(m.pd.f1 - c.pd_f1) <= tol && std::abs(m.uf1 - c.uf1) <= tol;
    if (!ok) {
      ++failed;
      if (first_failure.empty()) first_failure = " first failing case " + std::to_string(i + 1);
    }
  }
  // Always-majority closed form against the confusion-matrix value.
  double worst_baseline = 0.0;
  for (auto [pd, hc] : std::vector<std::pair<std::size_t, std::size_t>>{{40, 60}, {13, 7}, {1, 99}, {50, 50}}) {
    const double p = static_cast<double>(std::max(pd, hc)) / static_cast<double>(pd + hc);
    const double closed = (2.0 * p / (1.0 + p)) / 2.0;
    worst_baseline = std::max(worst_baseline, std::abs(majority_baseline_uf1(pd, hc) - closed));
    std::vector<Label> truth(pd, Label::kPD), pred(pd + hc, pd >= hc ? Label::kPD : Label::kHC);
    truth.insert(truth.end(), hc, Label::kHC);
    worst_baseline = std::max(worst_baseline, std::abs(compute_metrics(pred, truth).uf1 - closed));
  }
  const bool ok = failed == 0 && worst_baseline <= tol;
  return {ok, std::to_string(cases.size() - static_cast<std::size_t>(failed)) + "/" + std::to_string(cases.size()) +
                  " confusion cases exact to 1e-12, majority baseline error " + fmt("%.1e", worst_baseline) + first_failure};
}

// ---------------------------------------------------------------------------
// 5. no leakage

std::string model_bytes(const RidgeModel& m) {
  std::ostringstream o;
  save_model(o, m);
  return o.str();
}

Outcome no_leakage() {
  CohortSpec spec;
  spec.subjects_per_class = 10;
  spec.seed = 11;
  auto dataset = preprocess_pipeline(generate_cohort(spec, worker_threads())).dataset;
  const auto plan = make_split(dataset, {}, 11);
  ModelConfig cfg;
  cfg.num_kernels = 1000;
  cfg.threads = worker_threads();
  const auto bank = generate_kernels(cfg.num_kernels, kTrialLength, kTrialChannels, kernel_seed_for(11));
  const SfdOptions opt;

  auto fit = [&](const TrialDataset& d) {
    const auto features = transform(d, bank, {cfg.threads});
    const auto model = train_on_plan(features, plan, cfg, bank.seed);
    const auto sfd = detach_on_plan(features, plan, cfg, opt, bank.seed);
    return std::pair{model_bytes(model), model_bytes(sfd.model)};
  };
  const auto before = fit(dataset);

  Rng rng(99);
  std::size_t perturbed = 0;
  for (auto& t : dataset.mutable_trials()) {
    if (plan.split_of(t.subject_id) != Split::kTest) continue;
    for (auto& v : t.values) v = 5.0 * v + rng.normal();
    ++perturbed;
  }
  const auto after = fit(dataset);
  const bool same_model = before.first == after.first, same_sfd = before.second == after.second;
  return {perturbed > 0 && same_model && same_sfd,
          std::to_string(perturbed) + " test trials perturbed; trained model file " + (same_model ? "identical" : "CHANGED") +
              " (" + std::to_string(before.first.size()) + " bytes); SFD model file incl. mask " +
              (same_sfd ? "identical" : "CHANGED")};
}

// ---------------------------------------------------------------------------
// 6. split invariants

Outcome split_invariants() {
  const auto dataset = preprocess_pipeline(generate_cohort(CohortSpec{}, worker_threads())).dataset;
  Stopwatch sw;
  const SplitRatios ratios;
  std::size_t overlap = 0, scattered = 0, missing_class = 0, proportion = 0;
  double worst = 0.0;
  std::map<std::string, std::pair<bool, bool>> on_off;  // subject -> (has ON, has OFF)
  for (const auto& t : dataset.trials()) {
    if (t.condition == Condition::kPDOn) on_off[t.subject_id].first = true;
    if (t.condition == Condition::kPDOff) on_off[t.subject_id].second = true;
  }
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto plan = make_split(dataset, ratios, seed);
    std::map<std::string, std::set<int>> seen;
    std::array<std::array<double, 2>, 3> count{};
    std::array<double, 2> total{};
    for (const auto& t : dataset.trials()) {
      const int s = static_cast<int>(plan.split_of(t.subject_id));
      const int c = t.label() == Label::kPD;
      seen[t.subject_id].insert(s);
      count[s][c] += 1;
      total[c] += 1;
    }
    for (const auto& [id, splits] : seen) {
      if (splits.size() != 1) {
        ++overlap;
        if (on_off[id].first && on_off[id].second) ++scattered;
      }
    }
    for (int s = 0; s < 3; ++s) {
      for (int c = 0; c < 2; ++c) {
        if (count[s][c] == 0) ++missing_class;
        const double target = ratios[static_cast<Split>(s)];
        const double dev = std::abs(count[s][c] / total[c] - target) / target;
        worst = std::max(worst, dev);
        if (dev > 0.10) ++proportion;
      }
    }
  }
  std::size_t both = 0;
  for (const auto& [id, f] : on_off) both += f.first && f.second;
  const double secs = sw.seconds();
  const bool ok = overlap == 0 && scattered == 0 && missing_class == 0 && proportion == 0 && secs < 30.0;
  return {ok, "1000 plans over " + std::to_string(dataset.subjects().size()) + " subjects (" + std::to_string(both) +
                  " with ON and OFF sessions): subject overlaps " + std::to_string(overlap) + ", split ON/OFF pairs " +
                  std::to_string(scattered) + ", splits lacking a class " + std::to_string(missing_class) +
                  ", worst per-class proportion deviation " + fmt("%.1f", 100.0 * worst) + "% of target (limit 10%), " +
                  fmt("%.1f", secs) + " s (limit 30 s)"};
}

// ---------------------------------------------------------------------------
// 7 and 8. held-out-subject accuracy on synthetic cohorts

struct CohortRun {
  double trial_accuracy = 0.0;
  double subject_accuracy = 0.0;
  std::size_t subjects = 0;
  std::size_t subjects_correct = 0;
};

// One seed: an independent cohort, split and kernel bank all drawn from it.
CohortRun run_cohort_seed(CohortSpec spec, std::uint64_t seed) {
  spec.seed = seed;
  const auto dataset = preprocess_pipeline(generate_cohort(spec, worker_threads())).dataset;
  const auto plan = make_split(dataset, {}, seed);
  ModelConfig cfg;
  cfg.threads = worker_threads();
  const std::vector<std::uint64_t> seeds{seed};
  const auto report = run_experiment(dataset, plan, cfg, seeds);
  const auto& test = report.runs.at(0).test;
  CohortRun r;
  r.trial_accuracy = test.trial.accuracy;
  r.subject_accuracy = test.subject.accuracy;
  r.subjects = test.subject.count;
  r.subjects_correct = test.subject.true_pd + test.subject.true_hc;
  return r;
}

Outcome learnability() {
  Stopwatch sw;
  double trial = 0.0, subject = 0.0;
  std::string per_seed;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto r = run_cohort_seed(CohortSpec{}, s);
    trial += r.trial_accuracy / 5.0;
    subject += r.subject_accuracy / 5.0;
    per_seed += " " + fmt("%.3f", r.subject_accuracy) + "/" + fmt("%.3f", r.trial_accuracy);
  }
  const double secs = sw.seconds();
  return {subject >= 0.90 && trial >= 0.75,
          "mean held-out-subject accuracy " + fmt("%.4f", subject) + " (>= 0.90), trial accuracy " + fmt("%.4f", trial) +
              " (>= 0.75); per seed subject/trial" + per_seed + "; " + fmt("%.0f", secs) + " s on " +
              std::to_string(worker_threads()) + " hardware thread(s)"};
}

// Central 95% acceptance region of Binomial(n, 1/2) for the correct count.
std::pair<std::size_t, std::size_t> chance_interval(std::size_t n) {
  std::vector<double> pmf(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    pmf[k] = std::exp(std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(k) + 1) -
                      std::lgamma(static_cast<double>(n - k) + 1) - static_cast<double>(n) * std::log(2.0));
  }
  std::size_t lo = 0, hi = n;
  double tail = 0.0;
  while (lo < n && tail + pmf[lo] <= 0.025) tail += pmf[lo++];
  tail = 0.0;
  while (hi > 0 && tail + pmf[hi] <= 0.025) tail += pmf[hi--];
  return {lo, hi};
}

Outcome tremor_non_exploitability() {
  Stopwatch sw;
  CohortSpec spec;
  spec.signature_multiplier = 1.0;
  std::size_t n = 0, correct = 0;
  std::string per_seed;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto r = run_cohort_seed(spec, s);
    n += r.subjects;
    correct += r.subjects_correct;
    per_seed += " " + std::to_string(r.subjects_correct) + "/" + std::to_string(r.subjects);
  }
  const auto [lo, hi] = chance_interval(n);
  const bool ok = correct >= lo && correct <= hi;
  const double secs = sw.seconds();
  return {ok, "pooled held-out subjects correct " + std::to_string(correct) + "/" + std::to_string(n) + " = " +
                  fmt("%.3f", static_cast<double>(correct) / static_cast<double>(n)) + ", chance 95% interval [" +
                  std::to_string(lo) + ", " + std::to_string(hi) + "]; per seed" + per_seed + "; " + fmt("%.0f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// 9. SFD efficacy

Outcome sfd_efficacy() {
  Rng rng(2024);
  const long features = 200, informative = 10;
  Eigen::VectorXd beta(informative);
  for (long j = 0; j < informative; ++j) beta[j] = rng.uniform(0.5, 1.5) * (j % 2 ? -1.0 : 1.0);
  auto make = [&](long n, RowMatrix& x, std::vector<double>& y) {
    x.resize(n, features);
    for (long i = 0; i < n; ++i) {
      double s = 0.0;
      for (long j = 0; j < features; ++j) {
        x(i, j) = rng.normal();
        if (j < informative) s += beta[j] * x(i, j);
      }
      y.push_back(s + 0.5 * rng.normal() > 0.0 ? 1.0 : -1.0);
    }
  };
  RowMatrix xt, xv;
  std::vector<double> yt, yv;
  make(400, xt, yt);
  make(200, xv, yv);
  SfdOptions opt;
  opt.tradeoff_c = 0.1;
  const auto r = run_sfd(xt, yt, xv, yv, opt);
  const auto& steps = r.trace.steps;
  const auto& sel = steps.at(r.trace.selected);
  bool nested = true;
  for (std::size_t s = 1; s < steps.size(); ++s) {
    bool strict = false;
    for (std::size_t j = 0; j < steps[s].mask.size(); ++j) {
      if (steps[s].mask[j] > steps[s - 1].mask[j]) nested = false;
      if (steps[s].mask[j] < steps[s - 1].mask[j]) strict = true;
    }
    nested = nested && strict;
  }
  bool maximal = true;
  for (const auto& s : steps) maximal = maximal && sel.score >= s.score;
  std::size_t support = 0;
  for (long j = 0; j < informative; ++j) support += sel.mask[static_cast<std::size_t>(j)];
  const bool ok = sel.retained_fraction <= 0.25 && sel.val_accuracy >= steps[0].val_accuracy - 0.02 && nested && maximal;
  return {ok, "selected step " + std::to_string(r.trace.selected) + "/" + std::to_string(steps.size() - 1) + " retains " +
                  std::to_string(sel.retained_count) + " of 200 (" + fmt("%.1f", 100.0 * sel.retained_fraction) +
                  "%, limit 25%), " + std::to_string(support) + " of 10 informative kept; validation accuracy " +
                  fmt("%.3f", sel.val_accuracy) + " vs full " + fmt("%.3f", steps[0].val_accuracy) +
                  " (floor full - 0.02); masks strictly nested " + (nested ? "yes" : "NO") + "; selection score maximal " +
                  (maximal ? "yes" : "NO")};
}

// ---------------------------------------------------------------------------
// 10. CLI determinism

int run_cli(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" FIXROCKET_CLI "' " + args + " >> cli.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> artifacts(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (e.path().extension() == ".manifest" || name == "cli.log") continue;  // manifests echo --threads
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[fs::relative(e.path(), root).string()] = s.str();
  }
  return out;
}

Outcome cli_determinism() {
  const auto base = fs::temp_directory_path() / ("fixrocket_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  const std::vector<std::pair<std::string, unsigned>> runs{{"a", 1}, {"b", 4}, {"c", 1}};
  for (const auto& [name, threads] : runs) {
    const auto dir = base / name;
    fs::create_directories(dir);
    const std::string t = "--threads " + std::to_string(threads) + " ";
    const std::vector<std::string> steps{
        "generate --subjects 10 --seed 7 --out cohort",
        "preprocess --cohort cohort --out run",
        "transform --dataset run/dataset.txt --seed 7 --out run",
        "train --dataset run/dataset.txt --features run/features.bin --seed 7 --out run",
        "detach --dataset run/dataset.txt --features run/features.bin --split run/split.txt --seed 7 --out run",
        "evaluate --dataset run/dataset.txt --features run/features.bin --model run/model.txt --split run/split.txt "
        "--out run",
        "report --run run"};
    for (const auto& s : steps) {
      if (run_cli(dir, t + s) != 0) {
        fs::remove_all(base);
        return {false, "run " + name + " failed at: " + s};
      }
    }
  }
  const auto a = artifacts(base / "a"), b = artifacts(base / "b"), c = artifacts(base / "c");
  std::size_t differ = 0;
  std::string first;
  for (const auto& [name, body] : a) {
    const bool same = b.count(name) && c.count(name) && b.at(name) == body && c.at(name) == body;
    if (!same) {
      ++differ;
      if (first.empty()) first = ", first difference " + name;
    }
  }
  const bool files_match = a.size() == b.size() && a.size() == c.size();
  const bool key_files = a.count("run/model.txt") && a.count("run/model_sfd.txt") && a.count("run/metrics_test.txt") &&
                         a.count("run/report_test.txt");
  fs::remove_all(base);
  return {files_match && key_files && differ == 0,
          std::to_string(a.size()) + " artifacts (cohort, dataset, features, model, SFD model and trace, predictions, "
                                     "metrics, reports) compared across --threads 1, 4, 1: " +
              std::to_string(differ) + " differ" + first};
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list{
      {1, "convolution oracle", convolution_oracle},
      {2, "ridge oracle", ridge_oracle},
      {3, "filter response", filter_response},
      {4, "metrics oracle", metrics_oracle},
      {5, "no leakage", no_leakage},
      {6, "split invariants", split_invariants},
      {7, "synthetic learnability", learnability},
      {8, "tremor non-exploitability", tremor_non_exploitability},
      {9, "SFD efficacy", sfd_efficacy},
      {10, "determinism", cli_determinism},
  };
  return list;
}

bool run_one(const Criterion& c) {
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s criterion %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
  std::fflush(stdout);
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 1;
    }
  }
  bool all = true;
  bool matched = false;
  for (const auto& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    matched = true;
    all = run_one(c) && all;
  }
  if (!matched) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 1;
  }
  return all ? 0 : 1;
}

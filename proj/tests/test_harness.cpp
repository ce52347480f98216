#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixrocket/error.hpp"
#include "fixrocket/harness.hpp"
#include "fixrocket/rng.hpp"
#include "fixrocket/synthgen.hpp"
#include "test_util.hpp"

using namespace fixrocket;

namespace {

Metrics metrics_of(std::vector<int> pred, std::vector<int> truth) {
  std::vector<Label> p, t;
  for (int v : pred) p.push_back(v ? Label::kPD : Label::kHC);
  for (int v : truth) t.push_back(v ? Label::kPD : Label::kHC);
  return compute_metrics(p, t);
}

// 30 + 30 subjects of 20 trials; PD subjects hold both ON and OFF sessions.
TrialDataset balanced_dataset(int per_class = 30, int trials = 20) {
  std::vector<Trial> out;
  for (int s = 0; s < 2 * per_class; ++s) {
    const bool pd = s >= per_class;
    const std::string id = (pd ? "PD" : "HC") + std::to_string(s);
    for (int k = 0; k < trials; ++k) {
      Trial t;
      t.subject_id = id;
      t.condition = pd ? (k < trials / 2 ? Condition::kPDOn : Condition::kPDOff) : Condition::kHC;
      t.session_id = id + (k < trials / 2 ? "_a" : "_b");
      t.trial_index = k;
      t.values.assign(kTrialChannels * kTrialLength, 0.0);
      out.push_back(std::move(t));
    }
  }
  return TrialDataset(std::move(out));
}

FeatureMatrix toy_features(const TrialDataset& d, long cols, std::uint64_t seed, double signal = 0.8) {
  Rng rng(seed);
  FeatureMatrix fm;
  fm.values = RowMatrix(static_cast<long>(d.size()), cols);
  for (long i = 0; i < fm.values.rows(); ++i) {
    const auto& t = d[static_cast<std::size_t>(i)];
    fm.rows.push_back(row_meta(t));
    for (long j = 0; j < cols; ++j) fm.values(i, j) = rng.normal() + (j < 3 ? signal * label_sign(t.label()) : 0.0);
  }
  return fm;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("split invariants") {
    const auto d = balanced_dataset();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto plan = make_split(d, {}, seed);
      CHECK(plan.assignment.size() == 60);
      std::array<std::array<double, 2>, 3> trials{};
      for (const auto& t : d.trials()) trials[static_cast<int>(plan.split_of(t.subject_id))][t.label() == Label::kPD] += 1;
      for (int s = 0; s < 3; ++s) {
        CHECK(trials[s][0] > 0);
        CHECK(trials[s][1] > 0);
        const double frac = trials[s][1] / (trials[s][0] + trials[s][1]);
        CHECK(std::abs(frac - 0.5) <= 0.05);
      }
      CHECK(make_split(d, {}, seed) == plan);
    }
    CHECK_FALSE(make_split(d, {}, 1) == make_split(d, {}, 2));
  }

  TEST_CASE("split needs three subjects per class") {
    const auto d = testutil::toy_dataset(2, 5, 3);
    try {
      make_split(d, {}, 0);
      FAIL("expected split error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSplit);
    }
  }

  TEST_CASE("split file round-trip") {
    const auto plan = make_split(balanced_dataset(), {}, 9);
    std::stringstream io;
    save_split(io, plan);
    CHECK(load_split(io) == plan);
  }

  TEST_CASE("folds partition subjects") {
    const auto d = balanced_dataset();
    const auto folds = make_folds(d, 5, 3);
    REQUIRE(folds.size() == 5);
    std::map<std::string, int> val_count;
    for (const auto& f : folds) {
      int n = 0, pd = 0;
      for (const auto& [id, s] : f.assignment) {
        if (s == Split::kVal) {
          ++val_count[id];
          ++n;
          pd += d.subject_label(id) == Label::kPD;
        } else {
          CHECK(s == Split::kTrain);
        }
      }
      CHECK(std::abs(n - 12) <= 1);
      CHECK(std::abs(pd - 6) <= 1);
    }
    CHECK(val_count.size() == 60);
    for (const auto& [id, c] : val_count) CHECK(c == 1);
  }

  TEST_CASE("leave one subject out") {
    const auto d = testutil::toy_dataset(4, 4, 2);
    const auto folds = make_folds(d, 4, 1);
    for (const auto& f : folds) {
      int val = 0;
      for (const auto& [id, s] : f.assignment) val += s == Split::kVal;
      CHECK(val == 2);
    }
    CHECK_THROWS_AS(make_folds(d, 5, 1), Error);
  }

  TEST_CASE("metrics examples") {
    const auto perfect = metrics_of({1, 0, 1, 0}, {1, 0, 1, 0});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.uf1 == 1.0);

    std::vector<int> truth(100, 0), majority(100, 0);
    for (int i = 0; i < 40; ++i) truth[static_cast<std::size_t>(i)] = 1;
    const auto m = metrics_of(majority, truth);
    CHECK(m.hc.f1 == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(m.pd.f1 == 0.0);
    CHECK(m.uf1 == doctest::Approx(0.375).epsilon(1e-12));
    CHECK(m.uf1 == doctest::Approx(majority_baseline_uf1(40, 60)).epsilon(1e-12));

    const auto half = metrics_of({1, 0, 0, 1}, {1, 1, 0, 0});
    CHECK(half.accuracy == 0.5);
    CHECK(half.uf1 == 0.5);
    CHECK(half.true_pd + half.false_pd + half.true_hc + half.false_hc == 4);

    const auto absent = metrics_of({0, 0}, {0, 0});
    CHECK(absent.pd.absent);
    CHECK(absent.uf1 == 0.5);
    CHECK_THROWS_AS(metrics_of({0}, {0, 1}), Error);
  }

  TEST_CASE("uF1 is invariant under a joint label swap") {
    Rng rng(4);
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<int> p(30), t(30), ps(30), ts(30);
      for (std::size_t i = 0; i < 30; ++i) {
        p[i] = static_cast<int>(rng.below(2));
        t[i] = static_cast<int>(rng.below(2));
        ps[i] = 1 - p[i];
        ts[i] = 1 - t[i];
      }
      const auto a = metrics_of(p, t), b = metrics_of(ps, ts);
      CHECK(a.uf1 == doctest::Approx(b.uf1).epsilon(1e-15));
      CHECK(a.accuracy == b.accuracy);
      CHECK(a.uf1 >= 0.0);
      CHECK(a.uf1 <= 1.0);
    }
  }

  TEST_CASE("majority baseline closed form") {
    for (auto [pd, hc] : std::vector<std::pair<std::size_t, std::size_t>>{{10, 30}, {30, 10}, {5, 5}, {1, 99}}) {
      const double p = static_cast<double>(std::max(pd, hc)) / static_cast<double>(pd + hc);
      CHECK(majority_baseline_uf1(pd, hc) == doctest::Approx((2 * p / (1 + p)) / 2).epsilon(1e-12));
    }
  }

  TEST_CASE("subject aggregation") {
    std::vector<RowMeta> rows(6);
    for (int i = 0; i < 3; ++i) rows[static_cast<std::size_t>(i)] = {"A", "A_s", Condition::kPDOn, Task::kProsaccade, i};
    for (int i = 3; i < 5; ++i) rows[static_cast<std::size_t>(i)] = {"B", "B_s", Condition::kHC, Task::kProsaccade, i};
    rows[5] = {"C", "C_s", Condition::kHC, Task::kAntisaccade, 0};
    const std::vector<double> p{0.9, 0.2, 0.7, 0.5, 0.5, 0.31};
    const auto s = aggregate_subjects(rows, p);
    REQUIRE(s.size() == 3);
    CHECK(s[0].subject_id == "A");
    CHECK(s[0].score == doctest::Approx(0.6));
    CHECK(s[0].prediction == Label::kPD);
    CHECK(s[1].score == 0.5);
    CHECK(s[1].prediction == Label::kHC);
    CHECK(s[2].score == 0.31);
    CHECK(s[2].trials == 1);

    std::vector<RowMeta> mixed{{"A", "x", Condition::kHC, Task::kProsaccade, 0}, {"A", "y", Condition::kPDOff, Task::kProsaccade, 1}};
    const std::vector<double> q{0.1, 0.2};
    CHECK_THROWS_AS(aggregate_subjects(mixed, q), Error);
  }

  TEST_CASE("balanced resampling is uniform over classes") {
    std::vector<double> y(10000, -1.0);
    for (std::size_t i = 0; i < 2500; ++i) y[i] = 1.0;
    const auto counts = class_balance_resample(y, 17);
    const double pd = std::accumulate(counts.begin(), counts.begin() + 2500, 0.0);
    CHECK(std::abs(pd / 10000.0 - 0.5) <= 0.02);
    const auto w = class_balance_weights(y);
    const double total_pd = std::accumulate(w.begin(), w.begin() + 2500, 0.0);
    const double total_hc = std::accumulate(w.begin() + 2500, w.end(), 0.0);
    CHECK(total_pd == total_hc);
  }

  TEST_CASE("mean and std") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto m = mean_std(v);
    CHECK(m.mean == 2.5);
    CHECK(m.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    const std::vector<double> one{7.0};
    CHECK(mean_std(one).std == 0.0);
  }

  TEST_CASE("training ignores test rows") {
    const auto d = balanced_dataset(10, 8);
    auto fm = toy_features(d, 40, 1);
    const auto plan = make_split(d, {}, 2);
    ModelConfig cfg;
    cfg.alpha = 10.0;
    const auto a = train_on_plan(fm, plan, cfg, 5);
    SfdOptions opt;
    opt.alpha = 10.0;
    const auto sa = detach_on_plan(fm, plan, cfg, opt, 5);
    for (auto r : plan.rows(fm.rows, Split::kTest)) fm.values.row(static_cast<long>(r)).array() += 1000.0;
    CHECK(train_on_plan(fm, plan, cfg, 5) == a);
    CHECK(detach_on_plan(fm, plan, cfg, opt, 5).model == sa.model);
    CHECK(a.kernel_seed == 5);
    CHECK(a.num_kernels == 20);
  }

  TEST_CASE("evaluation and predictions file") {
    const auto d = balanced_dataset(10, 8);
    const auto fm = toy_features(d, 40, 2, 1.5);
    const auto plan = make_split(d, {}, 3);
    ModelConfig cfg;
    cfg.alpha = 10.0;
    const auto model = train_on_plan(fm, plan, cfg, 1);
    const auto rows = plan.rows(fm.rows, Split::kTest);
    const auto ev = evaluate_model(model, fm, rows);
    CHECK(ev.trial.count == rows.size());
    CHECK(ev.trial.accuracy > 0.9);
    CHECK(ev.subject.accuracy == 1.0);
    for (std::size_t i = 0; i < ev.decisions.size(); ++i) CHECK(ev.probabilities[i] == probability(ev.decisions[i]));

    const auto preds = predictions_of(ev, fm.rows, Split::kTest);
    std::stringstream io;
    save_predictions(io, preds);
    const auto back = load_predictions(io);
    REQUIRE(back.size() == preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      CHECK(back[i].decision == preds[i].decision);
      CHECK(back[i].meta.subject_id == preds[i].meta.subject_id);
    }
    const auto summary = summarize_predictions(back);
    CHECK(summary.trial.accuracy == ev.trial.accuracy);
    CHECK(summary.subject.accuracy == ev.subject.accuracy);
    const auto kv = metrics_kv(summary);
    CHECK(kv.find("trial.accuracy=") != std::string::npos);
    CHECK(kv.find("subject.uf1=") != std::string::npos);
    CHECK(summary_table(summary).find("subject") != std::string::npos);

    std::size_t task_sum = 0, med_sum = 0, pd_trials = 0;
    for (const auto& g : summary.groups) (g.attribute == "task" ? task_sum : med_sum) += g.trials;
    for (const auto& p : back) pd_trials += p.meta.label() == Label::kPD;
    CHECK(task_sum == back.size());
    CHECK(med_sum == pd_trials);
  }

  TEST_CASE("experiment over seeds on a synthetic cohort") {
    CohortSpec spec;
    spec.subjects_per_class = 8;
    spec.seed = 4;
    const auto sessions = generate_cohort(spec);
    const auto pre = preprocess_pipeline(sessions);
    const auto plan = make_split(pre.dataset, {}, 1);
    ModelConfig cfg;
    cfg.num_kernels = 300;
    const std::vector<std::uint64_t> seeds{0, 1, 2};
    const auto report = run_experiment(pre.dataset, plan, cfg, seeds);
    REQUIRE(report.runs.size() == 3);
    CHECK(std::isfinite(report.subject_accuracy.std));
    CHECK(report.subject_accuracy.std >= 0.0);
    CHECK(report.runs[0].kernel_seed == kernel_seed_for(0));
    CHECK(report.table().find("mean_std") != std::string::npos);

    std::vector<RowMeta> meta;
    for (const auto& t : pre.dataset.trials()) meta.push_back(row_meta(t));
    const auto groups = attribute_report(report, meta);
    std::size_t task = 0, med = 0;
    for (const auto& g : groups) (g.attribute == "task" ? task : med) += g.trials;
    const auto& test = report.runs[0].test;
    std::size_t pd = 0;
    for (auto r : test.rows) pd += meta[r].label() == Label::kPD;
    CHECK(task == test.rows.size());
    CHECK(med == pd);
    const auto& pro = *std::find_if(groups.begin(), groups.end(), [](const auto& g) { return g.level == "pro"; });
    const auto& anti = *std::find_if(groups.begin(), groups.end(), [](const auto& g) { return g.level == "anti"; });
    const double spread = 2.0 * std::max({pro.accuracy.std, anti.accuracy.std, 0.02});
    CHECK(std::abs(pro.accuracy.mean - anti.accuracy.mean) <= spread);

    const auto long_text = long_format(report);
    CHECK(long_text.rfind("experiment,parameter,level,metric,value\n", 0) == 0);
  }

  TEST_CASE("grid search shape and kernel count effect") {
    CohortSpec spec;
    spec.subjects_per_class = 10;
    spec.seed = 6;
    const auto pre = preprocess_pipeline(generate_cohort(spec));
    const auto folds = make_folds(pre.dataset, 5, derive_seed(6, "folds"));
    GridConfig cfg;
    cfg.seed = 6;
    const auto g = grid_search(pre.dataset, folds, cfg);
    REQUIRE(g.mean_uf1.size() == 3);
    int wins = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      REQUIRE(g.mean_uf1[0].size() == 3);
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(g.mean_uf1[k][a] >= 0.0);
        CHECK(g.mean_uf1[k][a] <= 1.0);
        CHECK(g.fold_uf1[k][a].size() == 5);
      }
      wins += g.mean_uf1[2][a] >= g.mean_uf1[0][a];
    }
    CHECK(wins >= 2);
    CHECK(g.mean_uf1[g.best_kernels][g.best_alpha] == *std::max_element(g.mean_uf1[g.best_kernels].begin(), g.mean_uf1[g.best_kernels].end()));
    CHECK(g.table().find("kernels") != std::string::npos);
  }

  TEST_CASE("cutoff sweep loses a signature just above the cutoff") {
    CohortSpec spec;
    spec.subjects_per_class = 12;
    spec.signature_band = {22.0, 35.0};
    spec.signature_multiplier = 4.0;
    spec.seed = 8;
    const auto sessions = generate_cohort(spec);
    SweepConfig cfg;
    cfg.cutoffs = {0.0, 20.0, 40.0};
    cfg.model.num_kernels = 1000;
    cfg.seeds = {0, 1};
    cfg.split_seed = 8;
    const auto r = cutoff_sweep(sessions, cfg);
    REQUIRE(r.points.size() == 3);
    CHECK(r.points[0].cutoff_hz == 0.0);
    CHECK(r.points[2].trial_uf1.mean < r.points[1].trial_uf1.mean);
    for (const auto& p : r.points) {
      CHECK(p.trial_baseline_uf1 > 0.0);
      CHECK(p.trial_baseline_uf1 <= 0.5);
    }
    CHECK(long_format(r).find("sweep") != std::string::npos);
  }
}

#include "fixrocket/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "fixrocket/error.hpp"
#include "fixrocket/rng.hpp"
#include "text_util.hpp"

namespace fixrocket {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  fail(ErrorCode::kFormat, "unknown split '" + std::string(s) + "'");
}

Split SplitPlan::split_of(const std::string& subject_id) const {
  const auto it = assignment.find(subject_id);
  if (it == assignment.end()) fail(ErrorCode::kSplit, "subject " + subject_id + " is not assigned to a split");
  return it->second;
}

std::vector<std::size_t> SplitPlan::rows(std::span<const RowMeta> rows, Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (split_of(rows[i].subject_id) == s) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> SplitPlan::rows(const TrialDataset& dataset, Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (split_of(dataset[i].subject_id) == s) out.push_back(i);
  }
  return out;
}

namespace {

struct SubjectCount {
  std::string id;
  std::size_t trials;
};

// Subjects of each class: [0] HC, [1] PD.
std::array<std::vector<SubjectCount>, 2> subjects_by_class(const TrialDataset& dataset) {
  dataset.validate();
  std::array<std::vector<SubjectCount>, 2> out;
  for (const auto& [id, idx] : dataset.subject_index()) {
    const int cls = dataset.subject_label(id) == Label::kPD ? 1 : 0;
    out[cls].push_back({id, idx.size()});
  }
  return out;
}

}  // namespace

SplitPlan make_split(const TrialDataset& dataset, const SplitRatios& ratios, std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0)) {
    fail(ErrorCode::kSplit, "split ratios must all be positive");
  }
  const double ratio_sum = ratios.train + ratios.val + ratios.test;
  auto classes = subjects_by_class(dataset);
  SplitPlan plan;
  plan.ratios = ratios;
  plan.seed = seed;
  Rng rng(derive_seed(seed, "split"));
  static constexpr Split kSeedOrder[] = {Split::kTest, Split::kVal, Split::kTrain};
  for (int cls = 0; cls < 2; ++cls) {
    auto& subjects = classes[cls];
    if (subjects.size() < 3) {
      fail(ErrorCode::kSplit, std::string("need at least 3 subjects per class, ") + (cls ? "PD" : "HC") + " has " +
                                  std::to_string(subjects.size()));
    }
    rng.shuffle(subjects);
    std::stable_sort(subjects.begin(), subjects.end(),
                     [](const SubjectCount& a, const SubjectCount& b) { return a.trials > b.trials; });
    const double total = std::accumulate(subjects.begin(), subjects.end(), 0.0,
                                         [](double acc, const SubjectCount& s) { return acc + s.trials; });
    std::array<double, 3> target{}, current{};
    for (int s = 0; s < 3; ++s) target[s] = total * ratios[static_cast<Split>(s)] / ratio_sum;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      Split chosen;
      if (i < 3) {
        chosen = kSeedOrder[i];
      } else {
        int best = 0;
        for (int s = 1; s < 3; ++s) {
          if (target[s] - current[s] > target[best] - current[best]) best = s;
        }
        chosen = static_cast<Split>(best);
      }
      current[static_cast<int>(chosen)] += static_cast<double>(subjects[i].trials);
      plan.assignment[subjects[i].id] = chosen;
    }
  }
  return plan;
}

std::vector<SplitPlan> make_folds(const TrialDataset& dataset, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::kFold, "need at least 2 folds");
  auto classes = subjects_by_class(dataset);
  for (int cls = 0; cls < 2; ++cls) {
    if (classes[cls].size() < k) {
      fail(ErrorCode::kFold, std::to_string(k) + " folds need at least as many subjects per class; " +
                                 (cls ? "PD" : "HC") + " has " + std::to_string(classes[cls].size()));
    }
  }
  Rng rng(derive_seed(seed, "folds"));
  std::map<std::string, std::size_t> fold_of;
  std::size_t offset = 0;
  for (auto& subjects : classes) {
    rng.shuffle(subjects);
    for (std::size_t i = 0; i < subjects.size(); ++i) fold_of[subjects[i].id] = (offset + i) % k;
    offset += subjects.size();
  }
  std::vector<SplitPlan> plans(k);
  for (std::size_t f = 0; f < k; ++f) {
    plans[f].seed = seed;
    for (const auto& [id, fold] : fold_of) plans[f].assignment[id] = fold == f ? Split::kVal : Split::kTrain;
  }
  return plans;
}

void save_split(std::ostream& out, const SplitPlan& plan) {
  out << "#split-plan v1\n";
  out << "seed=" << plan.seed << "\n";
  out << "ratios=" << text::digits17(plan.ratios.train) << "," << text::digits17(plan.ratios.val) << ","
      << text::digits17(plan.ratios.test) << "\n";
  out << "columns=subject,split\n";
  for (const auto& [id, s] : plan.assignment) out << id << "," << to_string(s) << "\n";
}

SplitPlan load_split(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "#split-plan v1") fail(ErrorCode::kFormat, "missing '#split-plan v1' line");
  SplitPlan plan;
  while (std::getline(in, line)) {
    auto kv = text::key_value(line, ErrorCode::kFormat);
    if (kv.first == "seed") plan.seed = text::to_int<std::uint64_t>(kv.second, ErrorCode::kFormat, "seed");
    if (kv.first == "ratios") {
      const auto r = text::split(kv.second, ',');
      if (r.size() != 3) fail(ErrorCode::kFormat, "ratios needs three values");
      plan.ratios.train = text::to_double(r[0], ErrorCode::kFormat, "ratio");
      plan.ratios.val = text::to_double(r[1], ErrorCode::kFormat, "ratio");
      plan.ratios.test = text::to_double(r[2], ErrorCode::kFormat, "ratio");
    }
    if (kv.first == "columns") break;
  }
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto f = text::split(text::trim(line), ',');
    if (f.size() != 2) fail(ErrorCode::kFormat, "split row must be subject,split");
    plan.assignment[std::string(f[0])] = parse_split(f[1]);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.absent = tp + fp + fn == 0;
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace

Metrics compute_metrics(std::span<const Label> predictions, std::span<const Label> labels) {
  if (predictions.size() != labels.size()) fail(ErrorCode::kShape, "prediction count differs from label count");
  if (labels.empty()) fail(ErrorCode::kShape, "metrics need at least one sample");
  Metrics m;
  m.count = labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_pd = predictions[i] == Label::kPD;
    const bool is_pd = labels[i] == Label::kPD;
    if (pred_pd && is_pd) ++m.true_pd;
    else if (pred_pd) ++m.false_pd;
    else if (!is_pd) ++m.true_hc;
    else ++m.false_hc;
  }
  m.accuracy = static_cast<double>(m.true_pd + m.true_hc) / static_cast<double>(m.count);
  m.pd = class_metrics(m.true_pd, m.false_pd, m.false_hc);
  m.hc = class_metrics(m.true_hc, m.false_hc, m.false_pd);
  m.uf1 = (m.pd.f1 + m.hc.f1) / 2.0;
  return m;
}

double majority_baseline_uf1(std::size_t pd_count, std::size_t hc_count) {
  const std::size_t total = pd_count + hc_count;
  if (total == 0) fail(ErrorCode::kShape, "baseline needs at least one sample");
  const double p = static_cast<double>(std::max(pd_count, hc_count)) / static_cast<double>(total);
  return (2.0 * p / (1.0 + p)) / 2.0;
}

std::vector<SubjectScore> aggregate_subjects(std::span<const RowMeta> rows, std::span<const double> probabilities,
                                             double threshold) {
  if (rows.size() != probabilities.size()) fail(ErrorCode::kShape, "probability count differs from row count");
  std::map<std::string, SubjectScore> by_subject;
  std::map<std::string, double> sums;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& s = by_subject[rows[i].subject_id];
    if (s.trials == 0) {
      s.subject_id = rows[i].subject_id;
      s.label = rows[i].label();
    } else if (s.label != rows[i].label()) {
      fail(ErrorCode::kAggregation, "subject " + s.subject_id + " has trials of both labels");
    }
    ++s.trials;
    sums[rows[i].subject_id] += probabilities[i];
  }
  std::vector<SubjectScore> out;
  out.reserve(by_subject.size());
  for (auto& [id, s] : by_subject) {
    if (s.trials == 0) fail(ErrorCode::kAggregation, "subject " + id + " has no scored trials");
    s.score = sums[id] / static_cast<double>(s.trials);
    s.prediction = s.score > threshold ? Label::kPD : Label::kHC;
    out.push_back(std::move(s));
  }
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  r.n = values.size();
  if (values.empty()) return r;
  r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

}  // namespace fixrocket

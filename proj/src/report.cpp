#include <istream>
#include <ostream>
#include <sstream>

#include "fixrocket/error.hpp"
#include "fixrocket/harness.hpp"
#include "text_util.hpp"

namespace fixrocket {

namespace {

constexpr const char* kPredictionHeader = "subject,session,condition,task,trial_index,split,decision,probability";

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void metrics_row(std::ostringstream& o, const char* level, const Metrics& m) {
  o << level << "," << m.count << "," << fixed(m.accuracy) << "," << fixed(m.uf1) << "," << fixed(m.hc.f1) << ","
    << fixed(m.pd.f1) << "," << m.true_pd << "," << m.false_pd << "," << m.true_hc << "," << m.false_hc << "\n";
}

void metrics_kv(std::ostringstream& o, const std::string& p, const Metrics& m) {
  o << p << ".count=" << m.count << "\n"
    << p << ".accuracy=" << text::digits17(m.accuracy) << "\n"
    << p << ".uf1=" << text::digits17(m.uf1) << "\n"
    << p << ".true_pd=" << m.true_pd << "\n"
    << p << ".false_pd=" << m.false_pd << "\n"
    << p << ".true_hc=" << m.true_hc << "\n"
    << p << ".false_hc=" << m.false_hc << "\n";
  for (auto [name, c] : {std::pair{"hc", &m.hc}, std::pair{"pd", &m.pd}}) {
    o << p << "." << name << ".precision=" << text::digits17(c->precision) << "\n"
      << p << "." << name << ".recall=" << text::digits17(c->recall) << "\n"
      << p << "." << name << ".f1=" << text::digits17(c->f1) << "\n"
      << p << "." << name << ".absent=" << (c->absent ? 1 : 0) << "\n";
  }
}

}  // namespace

std::vector<Prediction> predictions_of(const Evaluation& evaluation, std::span<const RowMeta> rows, Split split) {
  std::vector<Prediction> out;
  out.reserve(evaluation.rows.size());
  for (std::size_t i = 0; i < evaluation.rows.size(); ++i) {
    if (evaluation.rows[i] >= rows.size()) fail(ErrorCode::kShape, "evaluation row outside feature matrix");
    out.push_back({rows[evaluation.rows[i]], split, evaluation.decisions[i], evaluation.probabilities[i]});
  }
  return out;
}

void save_predictions(std::ostream& out, std::span<const Prediction> predictions) {
  std::string buf = "#predictions v1\n";
  buf += kPredictionHeader;
  buf += "\n";
  for (const auto& p : predictions) {
    buf += p.meta.subject_id + "," + p.meta.session_id + "," + std::string(to_string(p.meta.condition)) + "," +
           std::string(to_string(p.meta.task)) + "," + std::to_string(p.meta.trial_index) + "," +
           std::string(to_string(p.split)) + "," + text::digits17(p.decision) + "," + text::digits17(p.probability) +
           "\n";
  }
  out << buf;
  if (!out) fail(ErrorCode::kIo, "prediction write failed");
}

std::vector<Prediction> load_predictions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "#predictions v1") {
    fail(ErrorCode::kFormat, "missing '#predictions v1' magic line");
  }
  if (!std::getline(in, line) || text::trim(line) != kPredictionHeader) {
    fail(ErrorCode::kSchema, "unexpected prediction columns");
  }
  std::vector<Prediction> out;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty()) continue;
    const auto f = text::split(t, ',');
    if (f.size() != 8) fail(ErrorCode::kIntegrity, "prediction record needs 8 fields");
    Prediction p;
    p.meta.subject_id = std::string(f[0]);
    p.meta.session_id = std::string(f[1]);
    p.meta.condition = parse_condition(f[2]);
    p.meta.task = parse_task(f[3]);
    p.meta.trial_index = text::to_int<int>(f[4], ErrorCode::kFormat, "trial_index");
    p.split = parse_split(f[5]);
    p.decision = text::to_double(f[6], ErrorCode::kFormat, "decision");
    p.probability = text::to_double(f[7], ErrorCode::kFormat, "probability");
    out.push_back(std::move(p));
  }
  return out;
}

RunSummary summarize_predictions(std::span<const Prediction> predictions, double threshold) {
  if (predictions.empty()) fail(ErrorCode::kAggregation, "no predictions to summarize");
  RunSummary s;
  s.threshold = threshold;
  std::vector<RowMeta> rows;
  std::vector<double> probs;
  std::vector<Label> pred, truth;
  for (const auto& p : predictions) {
    rows.push_back(p.meta);
    probs.push_back(p.probability);
    pred.push_back(p.decision > 0.0 ? Label::kPD : Label::kHC);
    truth.push_back(p.meta.label());
  }
  s.trial = compute_metrics(pred, truth);
  s.subjects = aggregate_subjects(rows, probs, threshold);
  pred.clear();
  truth.clear();
  for (const auto& subj : s.subjects) {
    pred.push_back(subj.prediction);
    truth.push_back(subj.label);
  }
  s.subject = compute_metrics(pred, truth);

  ExperimentReport one;
  SeedRun run;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    run.test.rows.push_back(i);
    run.test.decisions.push_back(predictions[i].decision);
  }
  one.runs.push_back(std::move(run));
  s.groups = attribute_report(one, rows);
  return s;
}

std::string summary_table(const RunSummary& s) {
  std::ostringstream o;
  o << "# run summary, subject threshold=" << text::shortest(s.threshold) << "\n";
  o << "level,count,accuracy,uf1,hc_f1,pd_f1,true_pd,false_pd,true_hc,false_hc\n";
  metrics_row(o, "trial", s.trial);
  metrics_row(o, "subject", s.subject);
  o << "\nsubject,label,trials,score,prediction\n";
  for (const auto& subj : s.subjects) {
    o << subj.subject_id << "," << to_string(subj.label) << "," << subj.trials << "," << fixed(subj.score) << ","
      << to_string(subj.prediction) << "\n";
  }
  o << "\n" << attribute_table(s.groups);
  return o.str();
}

std::string metrics_kv(const RunSummary& s) {
  std::ostringstream o;
  o << "threshold=" << text::digits17(s.threshold) << "\n";
  metrics_kv(o, "trial", s.trial);
  metrics_kv(o, "subject", s.subject);
  for (const auto& g : s.groups) {
    o << "group." << g.attribute << "." << g.level << ".trials=" << g.trials << "\n";
    o << "group." << g.attribute << "." << g.level << ".accuracy="
      << (g.present ? text::digits17(g.accuracy.mean) : std::string("absent")) << "\n";
  }
  return o.str();
}

}  // namespace fixrocket

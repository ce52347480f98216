#include "fixrocket/data_model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "fixrocket/error.hpp"
#include "text_util.hpp"

namespace fixrocket {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kSequencing: return "sequencing";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kIncompatible: return "incompatibility";
    case ErrorCode::kIntegrity: return "integrity";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kDesign: return "design";
    case ErrorCode::kData: return "data";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kSplit: return "split";
    case ErrorCode::kFold: return "fold";
    case ErrorCode::kAggregation: return "aggregation";
    case ErrorCode::kSpec: return "spec";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kHC: return "HC";
    case Condition::kPDOn: return "PD_ON";
    case Condition::kPDOff: return "PD_OFF";
  }
  return "?";
}

std::string_view to_string(Task t) { return t == Task::kProsaccade ? "pro" : "anti"; }

std::string_view to_string(Label l) { return l == Label::kHC ? "HC" : "PD"; }

Condition parse_condition(std::string_view s) {
  if (s == "HC") return Condition::kHC;
  if (s == "PD_ON") return Condition::kPDOn;
  if (s == "PD_OFF") return Condition::kPDOff;
  fail(ErrorCode::kFormat, "unknown condition '" + std::string(s) + "'");
}

Task parse_task(std::string_view s) {
  if (s == "pro") return Task::kProsaccade;
  if (s == "anti") return Task::kAntisaccade;
  fail(ErrorCode::kFormat, "unknown task '" + std::string(s) + "'");
}

namespace {

bool valid_identifier(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (c == ',' || c == '=' || c == ' ' || c == '\t' || c == '\n' || c == '\r') return false;
  }
  return true;
}

void check_identifier(std::string_view id, std::string_view what) {
  if (!valid_identifier(id)) fail(ErrorCode::kData, "invalid " + std::string(what) + " '" + std::string(id) + "'");
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

void RawSession::validate() const {
  check_identifier(subject_id, "subject id");
  check_identifier(session_id, "session id");
  if (!(sample_rate > 0.0)) fail(ErrorCode::kData, "sample rate must be positive");
  if (!(screen_distance_cm > 0.0)) fail(ErrorCode::kData, "screen distance must be positive");
  const std::size_t n = left_x.size();
  if (left_y.size() != n || right_x.size() != n || right_y.size() != n) {
    fail(ErrorCode::kData, "gaze channels differ in length");
  }
  if (n < kMinSessionLength) {
    fail(ErrorCode::kData, "session " + session_id + " has " + std::to_string(n) + " samples, need >= 440");
  }
  for (std::size_t i = 0; i < target_onsets.size(); ++i) {
    if (target_onsets[i] >= n) fail(ErrorCode::kData, "target onset outside recording");
    if (i > 0 && target_onsets[i] <= target_onsets[i - 1]) {
      fail(ErrorCode::kData, "target onsets not strictly increasing");
    }
  }
  if (!all_finite(left_x) || !all_finite(left_y) || !all_finite(right_x) || !all_finite(right_y)) {
    fail(ErrorCode::kData, "non-finite gaze sample in session " + session_id);
  }
}

void Trial::validate() const {
  check_identifier(subject_id, "subject id");
  check_identifier(session_id, "session id");
  if (values.size() != kTrialChannels * kTrialLength) {
    fail(ErrorCode::kData, "trial must hold 4 x 440 values, got " + std::to_string(values.size()));
  }
  if (!all_finite(values)) fail(ErrorCode::kData, "non-finite value in trial of " + subject_id);
}

TrialDataset::TrialDataset(std::vector<Trial> trials, DatasetProvenance provenance)
    : trials_(std::move(trials)), provenance_(std::move(provenance)) {
  for (std::size_t i = 0; i < trials_.size(); ++i) subject_index_[trials_[i].subject_id].push_back(i);
}

void TrialDataset::add(Trial t) {
  subject_index_[t.subject_id].push_back(trials_.size());
  trials_.push_back(std::move(t));
}

std::vector<std::string> TrialDataset::subjects() const {
  std::vector<std::string> out;
  out.reserve(subject_index_.size());
  for (const auto& [id, idx] : subject_index_) out.push_back(id);
  return out;
}

Label TrialDataset::subject_label(const std::string& subject_id) const {
  const auto it = subject_index_.find(subject_id);
  if (it == subject_index_.end() || it->second.empty()) fail(ErrorCode::kData, "unknown subject " + subject_id);
  return trials_[it->second.front()].label();
}

void TrialDataset::validate() const {
  std::size_t covered = 0;
  for (const auto& [id, idx] : subject_index_) {
    const Label l = trials_.at(idx.front()).label();
    for (std::size_t i : idx) {
      if (trials_.at(i).subject_id != id) fail(ErrorCode::kData, "subject index out of sync");
      if (trials_[i].label() != l) fail(ErrorCode::kData, "subject " + id + " has trials of both labels");
    }
    covered += idx.size();
  }
  if (covered != trials_.size()) fail(ErrorCode::kData, "subject index does not cover every trial");
  for (const auto& t : trials_) t.validate();
}

TrialDataset TrialDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<Trial> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(trials_.at(i));
  return TrialDataset(std::move(out), provenance_);
}

bool operator==(const Trial& a, const Trial& b) {
  return a.subject_id == b.subject_id && a.session_id == b.session_id && a.condition == b.condition &&
         a.task == b.task && a.trial_index == b.trial_index && a.values == b.values;
}

bool operator==(const DatasetProvenance& a, const DatasetProvenance& b) {
  return a.cutoff_hz == b.cutoff_hz && a.filter_order == b.filter_order && a.passes == b.passes;
}

bool operator==(const TrialDataset& a, const TrialDataset& b) {
  return a.provenance() == b.provenance() && a.trials() == b.trials();
}

// ---------------------------------------------------------------------------
// Raw session CSV

RawSession load_raw_session(std::istream& in, std::string session_id) {
  std::string line;
  if (!next_line(in, line) || text::trim(line) != "#fixation-raw v1") {
    fail(ErrorCode::kFormat, "missing '#fixation-raw v1' magic line");
  }
  if (!next_line(in, line)) fail(ErrorCode::kFormat, "missing metadata line");

  RawSession s;
  s.session_id = std::move(session_id);
  bool have_subject = false, have_condition = false, have_task = false, have_fs = false, have_distance = false;
  for (auto field : text::split(line, ',')) {
    auto [key, value] = text::key_value(field, ErrorCode::kFormat);
    if (key == "subject") {
      s.subject_id = std::string(value);
      have_subject = true;
    } else if (key == "condition") {
      s.condition = parse_condition(value);
      have_condition = true;
    } else if (key == "task") {
      s.task = parse_task(value);
      have_task = true;
    } else if (key == "fs") {
      s.sample_rate = text::to_double(value, ErrorCode::kFormat, "fs");
      have_fs = true;
    } else if (key == "distance_cm") {
      s.screen_distance_cm = text::to_double(value, ErrorCode::kFormat, "distance_cm");
      have_distance = true;
    } else {
      fail(ErrorCode::kFormat, "unknown metadata key '" + std::string(key) + "'");
    }
  }
  if (!(have_subject && have_condition && have_task && have_fs && have_distance)) {
    fail(ErrorCode::kFormat, "metadata line lacks one of subject, condition, task, fs, distance_cm");
  }
  if (!(s.sample_rate > 0.0) || !(s.screen_distance_cm > 0.0)) {
    fail(ErrorCode::kFormat, "fs and distance_cm must be positive");
  }

  if (!next_line(in, line)) fail(ErrorCode::kFormat, "missing column header");
  static constexpr std::string_view kColumns[] = {"t", "lx_deg", "ly_deg", "rx_deg", "ry_deg", "event"};
  const auto header = text::split(line, ',');
  int position[6];
  for (int c = 0; c < 6; ++c) {
    position[c] = -1;
    for (std::size_t h = 0; h < header.size(); ++h) {
      if (text::trim(header[h]) == kColumns[c]) position[c] = static_cast<int>(h);
    }
    if (position[c] < 0) fail(ErrorCode::kSchema, "required column '" + std::string(kColumns[c]) + "' missing");
  }

  const double period = 1.0 / s.sample_rate;
  double previous_t = 0.0;
  std::size_t row = 0;
  while (next_line(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != header.size()) {
      fail(ErrorCode::kFormat, "row " + std::to_string(row) + " has " + std::to_string(fields.size()) + " fields");
    }
    const double t = text::to_double(fields[position[0]], ErrorCode::kFormat, "t");
    if (row > 0) {
      if (!(t > previous_t)) fail(ErrorCode::kSequencing, "timestamps not strictly increasing at row " + std::to_string(row));
      if (std::abs((t - previous_t) / period - 1.0) > 0.01) {
        fail(ErrorCode::kSequencing, "sample spacing is not 1/fs at row " + std::to_string(row));
      }
    }
    previous_t = t;
    s.left_x.push_back(text::to_double(fields[position[1]], ErrorCode::kFormat, "lx_deg"));
    s.left_y.push_back(text::to_double(fields[position[2]], ErrorCode::kFormat, "ly_deg"));
    s.right_x.push_back(text::to_double(fields[position[3]], ErrorCode::kFormat, "rx_deg"));
    s.right_y.push_back(text::to_double(fields[position[4]], ErrorCode::kFormat, "ry_deg"));
    const auto event = text::trim(fields[position[5]]);
    if (event == "1") {
      s.target_onsets.push_back(row);
    } else if (event != "0") {
      fail(ErrorCode::kFormat, "event must be 0 or 1 at row " + std::to_string(row));
    }
    ++row;
  }
  s.validate();
  return s;
}

RawSession load_raw_session_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return load_raw_session(in, path.stem().string());
}

void write_raw_session(std::ostream& out, const RawSession& s) {
  s.validate();
  std::string buf;
  buf.reserve(64 * s.size() + 256);
  buf += "#fixation-raw v1\n";
  buf += "subject=" + s.subject_id + ",condition=" + std::string(to_string(s.condition)) +
         ",task=" + std::string(to_string(s.task)) + ",fs=" + text::shortest(s.sample_rate) +
         ",distance_cm=" + text::shortest(s.screen_distance_cm) + "\n";
  buf += "t,lx_deg,ly_deg,rx_deg,ry_deg,event\n";
  std::size_t next_onset = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    text::append_shortest(buf, static_cast<double>(i) / s.sample_rate);
    for (double v : {s.left_x[i], s.left_y[i], s.right_x[i], s.right_y[i]}) {
      buf += ',';
      text::append_shortest(buf, v);
    }
    const bool onset = next_onset < s.target_onsets.size() && s.target_onsets[next_onset] == i;
    if (onset) ++next_onset;
    buf += onset ? ",1\n" : ",0\n";
  }
  out << buf;
}

// ---------------------------------------------------------------------------
// Trial dataset file

void save_dataset(std::ostream& out, const TrialDataset& dataset) {
  dataset.validate();
  const auto& p = dataset.provenance();
  std::string buf;
  buf += "#fixation-trials\n";
  buf += "schema_version=" + std::to_string(kDatasetSchemaVersion) + "\n";
  buf += "trial_count=" + std::to_string(dataset.size()) + "\n";
  buf += "channels=" + std::to_string(kTrialChannels) + "\n";
  buf += "length=" + std::to_string(kTrialLength) + "\n";
  buf += "cutoff_hz=" + text::shortest(p.cutoff_hz) + "\n";
  buf += "filter_order=" + std::to_string(p.filter_order) + "\n";
  buf += "passes=" + p.passes + "\n";
  buf += "columns=subject,condition,task,session,trial_index,values\n";
  out << buf;
  for (const auto& t : dataset.trials()) {
    buf.clear();
    buf += t.subject_id;
    buf += ',';
    buf += to_string(t.condition);
    buf += ',';
    buf += to_string(t.task);
    buf += ',';
    buf += t.session_id;
    buf += ',';
    buf += std::to_string(t.trial_index);
    for (double v : t.values) {
      buf += ',';
      text::append_shortest(buf, v);
    }
    buf += '\n';
    out << buf;
  }
}

TrialDataset load_dataset(std::istream& in) {
  std::string line;
  if (!next_line(in, line) || text::trim(line) != "#fixation-trials") {
    fail(ErrorCode::kFormat, "missing '#fixation-trials' magic line");
  }
  std::unordered_map<std::string, std::string> header;
  while (true) {
    if (!next_line(in, line)) fail(ErrorCode::kIntegrity, "file ends inside header");
    auto [key, value] = text::key_value(line, ErrorCode::kFormat);
    header.emplace(std::string(key), std::string(value));
    if (key == "schema_version") {
      const int version = text::to_int<int>(value, ErrorCode::kFormat, "schema_version");
      if (version != kDatasetSchemaVersion) {
        fail(ErrorCode::kIncompatible, "dataset schema_version " + std::to_string(version) + " is not supported");
      }
    }
    if (key == "columns") break;
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) fail(ErrorCode::kFormat, std::string("dataset header lacks ") + key);
    return it->second;
  };
  get("schema_version");
  const auto count = text::to_int<std::size_t>(get("trial_count"), ErrorCode::kFormat, "trial_count");
  if (text::to_int<std::size_t>(get("channels"), ErrorCode::kFormat, "channels") != kTrialChannels ||
      text::to_int<std::size_t>(get("length"), ErrorCode::kFormat, "length") != kTrialLength) {
    fail(ErrorCode::kIncompatible, "dataset trial shape differs from 4 x 440");
  }
  DatasetProvenance p;
  p.cutoff_hz = text::to_double(get("cutoff_hz"), ErrorCode::kFormat, "cutoff_hz");
  p.filter_order = text::to_int<int>(get("filter_order"), ErrorCode::kFormat, "filter_order");
  p.passes = get("passes");

  constexpr std::size_t kValues = kTrialChannels * kTrialLength;
  std::vector<Trial> trials;
  trials.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!next_line(in, line)) {
      fail(ErrorCode::kIntegrity, "truncated dataset: expected " + std::to_string(count) + " trials, found " +
                                      std::to_string(i));
    }
    const auto fields = text::split(line, ',');
    if (fields.size() != 5 + kValues) {
      fail(ErrorCode::kIntegrity, "trial record " + std::to_string(i) + " has " + std::to_string(fields.size()) +
                                      " fields, expected " + std::to_string(5 + kValues));
    }
    Trial t;
    t.subject_id = std::string(fields[0]);
    t.condition = parse_condition(fields[1]);
    t.task = parse_task(fields[2]);
    t.session_id = std::string(fields[3]);
    t.trial_index = text::to_int<int>(fields[4], ErrorCode::kFormat, "trial_index");
    t.values.resize(kValues);
    for (std::size_t k = 0; k < kValues; ++k) t.values[k] = text::to_double(fields[5 + k], ErrorCode::kFormat, "value");
    trials.push_back(std::move(t));
  }
  while (next_line(in, line)) {
    if (!text::trim(line).empty()) fail(ErrorCode::kIntegrity, "trailing data after declared trial_count");
  }
  TrialDataset d(std::move(trials), std::move(p));
  d.validate();
  return d;
}

void save_dataset_file(const std::filesystem::path& path, const TrialDataset& dataset) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  save_dataset(out, dataset);
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

TrialDataset load_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return load_dataset(in);
}

}  // namespace fixrocket

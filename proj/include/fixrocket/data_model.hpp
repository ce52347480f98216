#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fixrocket {

enum class Condition { kHC, kPDOn, kPDOff };
enum class Task { kProsaccade, kAntisaccade };
enum class Label { kHC, kPD };

// HC -> HC; PD_ON, PD_OFF -> PD. The binary label is never stored.
constexpr Label label_of(Condition c) { return c == Condition::kHC ? Label::kHC : Label::kPD; }

// Ridge target encoding: HC -> -1, PD -> +1.
constexpr double label_sign(Label l) { return l == Label::kPD ? 1.0 : -1.0; }

std::string_view to_string(Condition c);
std::string_view to_string(Task t);
std::string_view to_string(Label l);
Condition parse_condition(std::string_view s);
Task parse_task(std::string_view s);

inline constexpr double kSampleRateHz = 300.0;
inline constexpr double kScreenDistanceCm = 60.0;
inline constexpr std::size_t kTrialLength = 440;
inline constexpr std::size_t kTrialChannels = 4;
inline constexpr std::size_t kMinSessionLength = 440;

// One recording of one subject performing one task. Gaze angles in degrees.
struct RawSession {
  std::string subject_id;
  std::string session_id;
  Condition condition = Condition::kHC;
  Task task = Task::kProsaccade;
  double sample_rate = kSampleRateHz;
  double screen_distance_cm = kScreenDistanceCm;
  std::vector<double> left_x, left_y, right_x, right_y;
  std::vector<std::size_t> target_onsets;

  std::size_t size() const { return left_x.size(); }
  double duration_s() const { return static_cast<double>(size()) / sample_rate; }
  Label label() const { return label_of(condition); }

  // Throws Error(kData) on any violated invariant.
  void validate() const;
};

// 4 x 440 fixation segment; channels ordered x_pos, y_pos, x_vel, y_vel.
struct Trial {
  std::vector<double> values;  // channel-major, kTrialChannels * kTrialLength
  std::string subject_id;
  std::string session_id;
  Condition condition = Condition::kHC;
  Task task = Task::kProsaccade;
  int trial_index = 0;

  Label label() const { return label_of(condition); }

  std::span<const double> channel(std::size_t c) const {
    return std::span<const double>(values).subspan(c * kTrialLength, kTrialLength);
  }
  std::span<double> channel(std::size_t c) { return std::span<double>(values).subspan(c * kTrialLength, kTrialLength); }

  void validate() const;
};

// Preprocessing parameters recorded in the dataset file header.
struct DatasetProvenance {
  double cutoff_hz = 20.0;
  int filter_order = 8;
  std::string passes = "forward_backward";
};

class TrialDataset {
 public:
  TrialDataset() = default;
  explicit TrialDataset(std::vector<Trial> trials, DatasetProvenance provenance = {});

  const std::vector<Trial>& trials() const { return trials_; }
  std::vector<Trial>& mutable_trials() { return trials_; }
  const DatasetProvenance& provenance() const { return provenance_; }
  void set_provenance(DatasetProvenance p) { provenance_ = std::move(p); }

  std::size_t size() const { return trials_.size(); }
  bool empty() const { return trials_.empty(); }
  const Trial& operator[](std::size_t i) const { return trials_[i]; }

  void add(Trial t);

  // subject_id -> trial indices, ascending. Covers every trial exactly once.
  const std::map<std::string, std::vector<std::size_t>>& subject_index() const { return subject_index_; }
  std::vector<std::string> subjects() const;

  // Label of a subject; every trial of a subject must agree.
  Label subject_label(const std::string& subject_id) const;

  // Rebuilds the subject index and checks every dataset invariant.
  void validate() const;

  TrialDataset subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<Trial> trials_;
  std::map<std::string, std::vector<std::size_t>> subject_index_;
  DatasetProvenance provenance_;
};

bool operator==(const Trial& a, const Trial& b);
bool operator==(const DatasetProvenance& a, const DatasetProvenance& b);
bool operator==(const TrialDataset& a, const TrialDataset& b);

// Raw Session CSV, version 1:
//   #fixation-raw v1
//   subject=<id>,condition=<HC|PD_ON|PD_OFF>,task=<pro|anti>,fs=300,distance_cm=60
//   t,lx_deg,ly_deg,rx_deg,ry_deg,event
//   <one row per sample>
RawSession load_raw_session(std::istream& in, std::string session_id);
RawSession load_raw_session_file(const std::filesystem::path& path);
void write_raw_session(std::ostream& out, const RawSession& session);

inline constexpr int kDatasetSchemaVersion = 1;

void save_dataset(std::ostream& out, const TrialDataset& dataset);
TrialDataset load_dataset(std::istream& in);
void save_dataset_file(const std::filesystem::path& path, const TrialDataset& dataset);
TrialDataset load_dataset_file(const std::filesystem::path& path);

}  // namespace fixrocket

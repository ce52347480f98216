#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fixrocket/data_model.hpp"

namespace fixrocket {

enum class FilterPasses { kSingle, kForwardBackward };

std::string_view to_string(FilterPasses p);
FilterPasses parse_filter_passes(std::string_view s);

struct FilterSpec {
  int order = 8;
  double cutoff_hz = 20.0;
  double sample_rate = kSampleRateHz;
  FilterPasses passes = FilterPasses::kForwardBackward;

  // 0 < cutoff < fs/2, order even and >= 2. Throws Error(kDesign).
  void validate() const;
};

// One second-order section, transposed direct form II, a0 == 1.
struct Biquad {
  double b0, b1, b2, a1, a2;
};

class SosFilter {
 public:
  SosFilter() = default;
  explicit SosFilter(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

  // Analog Butterworth prototype -> high-pass -> bilinear transform with
  // pre-warped cutoff, poles paired into conjugate second-order sections.
  static SosFilter butterworth_highpass(const FilterSpec& spec);

  const std::vector<Biquad>& sections() const { return sections_; }

  // |H(e^{j 2 pi f / fs})| of one pass.
  double magnitude(double frequency_hz, double sample_rate) const;

  // Causal filtering from rest.
  std::vector<double> filter(std::span<const double> x) const;

  // Causal filtering with section states initialised to the steady state of
  // a constant input equal to x[0].
  std::vector<double> filter_steady(std::span<const double> x) const;

 private:
  std::vector<Biquad> sections_;
};

// Applies the spec to one channel. Edges are extended by odd reflection of
// 3 * order samples; single mode runs the cascade once, forward_backward runs
// it forward then time-reversed. Output length equals input length.
std::vector<double> butterworth_highpass(std::span<const double> x, const FilterSpec& spec);
std::vector<double> butterworth_highpass(std::span<const double> x, const SosFilter& sos, const FilterSpec& spec);

// pos = distance * tan(angle); |angle| >= 90 deg -> Error(kDomain).
std::vector<double> angular_to_positional(std::span<const double> degrees, double distance_cm);

struct PositionSeries {
  std::vector<double> x;
  std::vector<double> y;
};

// Averages both eyes in cm and subtracts the mean of the first 300 samples.
PositionSeries combine_and_calibrate(const RawSession& session);

inline constexpr std::size_t kCalibrationSamples = 300;

// Replaces samples further than 3 std from the channel mean by linear
// interpolation between the nearest retained neighbours.
std::vector<double> replace_outliers(std::span<const double> channel);

// v[t] = (p[t] - p[t-1]) * fs, v[0] = v[1].
std::vector<double> differentiate(std::span<const double> position, double sample_rate);

// Session-length 4-channel series (x_pos, y_pos, x_vel, y_vel).
struct SessionSeries {
  std::array<std::vector<double>, kTrialChannels> channels;
  std::size_t size() const { return channels[0].size(); }
};

enum class SessionStatistic { kMaxAbsX = 0, kMaxAbsY = 1, kMeanAbsVx = 2, kMeanAbsVy = 3 };
std::string_view to_string(SessionStatistic s);

using SessionStats = std::array<double, 4>;

SessionStats session_statistics(const SessionSeries& series);

struct Exclusion {
  std::size_t session_index = 0;
  std::string session_id;
  std::vector<SessionStatistic> triggered;
};

struct SanitizeReport {
  std::vector<SessionStats> stats;
  std::array<double, 4> median{};
  std::array<double, 4> mad{};
  std::array<double, 4> threshold{};
  std::vector<Exclusion> exclusions;  // ascending session index

  bool excluded(std::size_t session_index) const;
};

// Cohort median/MAD per statistic; a session is excluded iff any statistic
// exceeds median + 3 MAD. Needs at least 3 sessions.
SanitizeReport sanitize_sessions(std::span<const SessionStats> stats, std::span<const std::string> session_ids = {});
SanitizeReport sanitize_sessions(std::span<const SessionSeries> sessions, std::span<const std::string> session_ids = {});

inline constexpr double kMadThreshold = 3.0;
inline constexpr std::size_t kMinOnsetSeparation = 300;

struct SegmentResult {
  std::vector<Trial> trials;
  std::size_t skipped = 0;
};

// Emits [o - 440, o) for every onset o whose window fits the recording and
// starts at least 300 samples after the previous onset. Each emitted channel
// is centred on its window mean.
SegmentResult segment_trials(const SessionSeries& series, std::span<const std::size_t> onsets,
                             const RawSession& meta);

// Per-session steps before cohort sanitization: combine, calibrate, replace
// outliers, differentiate.
SessionSeries session_series(const RawSession& session);

struct PreprocessOptions {
  std::optional<FilterSpec> filter = FilterSpec{};  // nullopt disables filtering
};

struct PipelineReport {
  std::size_t sessions_in = 0;
  std::size_t sessions_excluded = 0;
  std::size_t sessions_out = 0;
  std::size_t trials_emitted = 0;
  std::size_t trials_skipped = 0;
  SanitizeReport sanitize;
  std::vector<std::string> session_ids;

  std::string summary() const;
};

struct PipelineResult {
  TrialDataset dataset;
  PipelineReport report;
};

// combine_and_calibrate -> replace_outliers -> differentiate ->
// sanitize_sessions -> high-pass on the full session -> segment_trials.
PipelineResult preprocess_pipeline(std::span<const RawSession> sessions, const PreprocessOptions& options = {});

}  // namespace fixrocket

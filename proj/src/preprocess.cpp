#include "fixrocket/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fixrocket/error.hpp"

namespace fixrocket {

std::vector<double> angular_to_positional(std::span<const double> degrees, double distance_cm) {
  if (!(distance_cm > 0.0)) fail(ErrorCode::kDomain, "screen distance must be positive");
  std::vector<double> out(degrees.size());
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    const double a = degrees[i];
    if (!(std::abs(a) < 90.0)) fail(ErrorCode::kDomain, "gaze angle " + std::to_string(a) + " deg outside (-90, 90)");
    out[i] = distance_cm * std::tan(a * std::numbers::pi / 180.0);
  }
  return out;
}

PositionSeries combine_and_calibrate(const RawSession& session) {
  const std::size_t n = session.size();
  if (n < kCalibrationSamples) {
    fail(ErrorCode::kInsufficientData, "calibration needs 300 samples, session has " + std::to_string(n));
  }
  const double d = session.screen_distance_cm;
  const auto lx = angular_to_positional(session.left_x, d);
  const auto ly = angular_to_positional(session.left_y, d);
  const auto rx = angular_to_positional(session.right_x, d);
  const auto ry = angular_to_positional(session.right_y, d);

  PositionSeries p;
  p.x.resize(n);
  p.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.x[i] = (lx[i] + rx[i]) / 2.0;
    p.y[i] = (ly[i] + ry[i]) / 2.0;
  }
  for (auto* ch : {&p.x, &p.y}) {
    const double offset =
        std::accumulate(ch->begin(), ch->begin() + kCalibrationSamples, 0.0) / static_cast<double>(kCalibrationSamples);
    for (double& v : *ch) v -= offset;
  }
  return p;
}

std::vector<double> replace_outliers(std::span<const double> channel) {
  const std::size_t n = channel.size();
  if (n < 2) fail(ErrorCode::kInsufficientData, "outlier replacement needs at least 2 samples");
  const double mean = std::accumulate(channel.begin(), channel.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : channel) ss += (v - mean) * (v - mean);
  const double limit = 3.0 * std::sqrt(ss / static_cast<double>(n));

  std::vector<double> out(channel.begin(), channel.end());
  std::vector<std::size_t> kept;
  kept.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(std::abs(channel[i] - mean) > limit)) kept.push_back(i);
  }
  if (kept.empty()) fail(ErrorCode::kDegenerate, "every sample of the channel is an outlier");
  if (kept.size() == n) return out;

  for (std::size_t i = 0; i < kept.front(); ++i) out[i] = channel[kept.front()];
  for (std::size_t i = kept.back() + 1; i < n; ++i) out[i] = channel[kept.back()];
  for (std::size_t k = 0; k + 1 < kept.size(); ++k) {
    const std::size_t a = kept[k], b = kept[k + 1];
    for (std::size_t i = a + 1; i < b; ++i) {
      const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
      out[i] = channel[a] + t * (channel[b] - channel[a]);
    }
  }
  return out;
}

std::vector<double> differentiate(std::span<const double> position, double sample_rate) {
  const std::size_t n = position.size();
  if (n < 2) fail(ErrorCode::kInsufficientData, "differentiation needs at least 2 samples");
  std::vector<double> v(n);
  for (std::size_t t = 1; t < n; ++t) v[t] = (position[t] - position[t - 1]) * sample_rate;
  v[0] = v[1];
  return v;
}

std::string_view to_string(SessionStatistic s) {
  switch (s) {
    case SessionStatistic::kMaxAbsX: return "max_abs_x";
    case SessionStatistic::kMaxAbsY: return "max_abs_y";
    case SessionStatistic::kMeanAbsVx: return "mean_abs_vx";
    case SessionStatistic::kMeanAbsVy: return "mean_abs_vy";
  }
  return "?";
}

SessionStats session_statistics(const SessionSeries& series) {
  SessionStats s{};
  for (int c = 0; c < 2; ++c) {
    double m = 0.0;
    for (double v : series.channels[c]) m = std::max(m, std::abs(v));
    s[c] = m;
  }
  for (int c = 2; c < 4; ++c) {
    double sum = 0.0;
    for (double v : series.channels[c]) sum += std::abs(v);
    s[c] = series.channels[c].empty() ? 0.0 : sum / static_cast<double>(series.channels[c].size());
  }
  return s;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

bool SanitizeReport::excluded(std::size_t session_index) const {
  return std::any_of(exclusions.begin(), exclusions.end(),
                     [&](const Exclusion& e) { return e.session_index == session_index; });
}

SanitizeReport sanitize_sessions(std::span<const SessionStats> stats, std::span<const std::string> session_ids) {
  if (stats.size() < 3) {
    fail(ErrorCode::kInsufficientData, "insufficient cohort: sanitization needs at least 3 sessions, got " +
                                           std::to_string(stats.size()));
  }
  SanitizeReport r;
  r.stats.assign(stats.begin(), stats.end());
  for (int k = 0; k < 4; ++k) {
    std::vector<double> col(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) col[i] = stats[i][k];
    r.median[k] = median(col);
    for (double& v : col) v = std::abs(v - r.median[k]);
    r.mad[k] = median(std::move(col));
    r.threshold[k] = r.median[k] + kMadThreshold * r.mad[k];
  }
  for (std::size_t i = 0; i < stats.size(); ++i) {
    Exclusion e;
    e.session_index = i;
    if (i < session_ids.size()) e.session_id = session_ids[i];
    for (int k = 0; k < 4; ++k) {
      if (stats[i][k] > r.threshold[k]) e.triggered.push_back(static_cast<SessionStatistic>(k));
    }
    if (!e.triggered.empty()) r.exclusions.push_back(std::move(e));
  }
  return r;
}

SanitizeReport sanitize_sessions(std::span<const SessionSeries> sessions, std::span<const std::string> session_ids) {
  std::vector<SessionStats> stats;
  stats.reserve(sessions.size());
  for (const auto& s : sessions) stats.push_back(session_statistics(s));
  return sanitize_sessions(stats, session_ids);
}

SegmentResult segment_trials(const SessionSeries& series, std::span<const std::size_t> onsets, const RawSession& meta) {
  SegmentResult r;
  const std::size_t n = series.size();
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    const std::size_t o = onsets[i];
    if (o < kTrialLength || o > n) {
      ++r.skipped;
      continue;
    }
    const std::size_t start = o - kTrialLength;
    if (i > 0 && start < onsets[i - 1] + kMinOnsetSeparation) {
      ++r.skipped;
      continue;
    }
    Trial t;
    t.subject_id = meta.subject_id;
    t.session_id = meta.session_id;
    t.condition = meta.condition;
    t.task = meta.task;
    t.trial_index = static_cast<int>(i);
    t.values.resize(kTrialChannels * kTrialLength);
    for (std::size_t c = 0; c < kTrialChannels; ++c) {
      const auto& src = series.channels[c];
      auto dst = t.channel(c);
      std::copy(src.begin() + static_cast<std::ptrdiff_t>(start), src.begin() + static_cast<std::ptrdiff_t>(o),
                dst.begin());
      const double mean = std::accumulate(dst.begin(), dst.end(), 0.0) / static_cast<double>(kTrialLength);
      for (double& v : dst) v -= mean;
    }
    r.trials.push_back(std::move(t));
  }
  return r;
}

SessionSeries session_series(const RawSession& session) {
  const auto pos = combine_and_calibrate(session);
  SessionSeries s;
  s.channels[0] = replace_outliers(pos.x);
  s.channels[1] = replace_outliers(pos.y);
  s.channels[2] = differentiate(s.channels[0], session.sample_rate);
  s.channels[3] = differentiate(s.channels[1], session.sample_rate);
  return s;
}

std::string PipelineReport::summary() const {
  std::ostringstream o;
  o << "sessions_in=" << sessions_in << "\n";
  o << "sessions_excluded=" << sessions_excluded << "\n";
  o << "sessions_out=" << sessions_out << "\n";
  o << "trials_emitted=" << trials_emitted << "\n";
  o << "trials_skipped=" << trials_skipped << "\n";
  for (int k = 0; k < 4; ++k) {
    const auto name = to_string(static_cast<SessionStatistic>(k));
    o << name << ".median=" << sanitize.median[k] << " " << name << ".mad=" << sanitize.mad[k] << " " << name
      << ".threshold=" << sanitize.threshold[k] << "\n";
  }
  for (const auto& e : sanitize.exclusions) {
    o << "excluded " << e.session_id << ":";
    for (auto s : e.triggered) o << " " << to_string(s) << "=" << sanitize.stats[e.session_index][static_cast<int>(s)];
    o << "\n";
  }
  return o.str();
}

namespace {

template <class F>
auto in_stage(const char* stage, const std::string& session, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("stage ") + stage + ", session " + session + ": " + e.what());
  }
}

}  // namespace

PipelineResult preprocess_pipeline(std::span<const RawSession> sessions, const PreprocessOptions& options) {
  std::optional<SosFilter> sos;
  if (options.filter) sos = SosFilter::butterworth_highpass(*options.filter);

  PipelineResult result;
  auto& report = result.report;
  report.sessions_in = sessions.size();

  std::vector<SessionSeries> series;
  series.reserve(sessions.size());
  for (const auto& s : sessions) {
    report.session_ids.push_back(s.session_id);
    in_stage("validate", s.session_id, [&] { s.validate(); });
    series.push_back(in_stage("combine_and_calibrate", s.session_id, [&] { return session_series(s); }));
  }

  report.sanitize = sanitize_sessions(series, report.session_ids);
  report.sessions_excluded = report.sanitize.exclusions.size();
  report.sessions_out = sessions.size() - report.sessions_excluded;

  DatasetProvenance provenance;
  if (options.filter) {
    provenance.cutoff_hz = options.filter->cutoff_hz;
    provenance.filter_order = options.filter->order;
    provenance.passes = std::string(to_string(options.filter->passes));
  } else {
    provenance.cutoff_hz = 0.0;
    provenance.filter_order = 0;
    provenance.passes = "none";
  }
  result.dataset.set_provenance(provenance);

  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (report.sanitize.excluded(i)) continue;
    auto& s = series[i];
    if (sos) {
      in_stage("butterworth_highpass", sessions[i].session_id, [&] {
        for (auto& ch : s.channels) ch = butterworth_highpass(ch, *sos, *options.filter);
      });
    }
    auto seg = segment_trials(s, sessions[i].target_onsets, sessions[i]);
    report.trials_emitted += seg.trials.size();
    report.trials_skipped += seg.skipped;
    for (auto& t : seg.trials) result.dataset.add(std::move(t));
  }
  result.dataset.validate();
  return result;
}

}  // namespace fixrocket

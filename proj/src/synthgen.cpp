#include "fixrocket/synthgen.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "fixrocket/error.hpp"
#include "fixrocket/rng.hpp"
#include "text_util.hpp"

namespace fixrocket {

namespace {

constexpr double kFirstOnsetS = 2.0;
constexpr double kMinSpacingS = 2.5;
constexpr double kMaxSpacingS = 3.0;
constexpr double kTailS = 1.0;
constexpr std::size_t kRampSamples = 6;
constexpr double kAuditKaiserBeta = 25.0;

// FFTW's planner is not reentrant; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

template <class T>
struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(static_cast<T*>(fftw_malloc(sizeof(T) * n))), size(n) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  T* data;
  std::size_t size;
};

// Real transform pair of length n sharing one time and one frequency buffer.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n), time_(n), freq_(n / 2 + 1) {
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), time_.data, freq_.data, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq_.data, time_.data, FFTW_ESTIMATE);
    if (forward_ == nullptr || inverse_ == nullptr) fail(ErrorCode::kDesign, "FFT planning failed");
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return freq_.size; }
  double* time() { return time_.data; }
  std::complex<double>* freq() { return reinterpret_cast<std::complex<double>*>(freq_.data); }

  void forward() { fftw_execute(forward_); }
  // Unnormalized; callers divide by n.
  void inverse() { fftw_execute(inverse_); }

 private:
  std::size_t n_;
  FftwBuffer<double> time_;
  FftwBuffer<fftw_complex> freq_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

struct SubjectTraits {
  double gain = 1.0;
  double offset_x = 0.0;
  double offset_y = 0.0;
  double floor_scale = 1.0;
  double tremor_hz = 0.0;
  double tremor_phase = 0.0;
};

SubjectTraits draw_traits(const CohortSpec& spec, Rng& rng) {
  SubjectTraits t;
  t.gain = std::exp(spec.idiosyncrasy * rng.normal());
  t.offset_x = 2.0 * spec.idiosyncrasy * rng.normal();
  t.offset_y = 2.0 * spec.idiosyncrasy * rng.normal();
  t.floor_scale = std::exp(spec.idiosyncrasy * rng.normal());
  t.tremor_hz = rng.uniform(spec.tremor_min_hz, spec.tremor_max_hz);
  t.tremor_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return t;
}

std::vector<std::size_t> draw_onsets(const CohortSpec& spec, Rng& rng, std::size_t& length) {
  const double fs = spec.sample_rate;
  const auto min_gap = static_cast<std::size_t>(std::ceil(kMinSpacingS * fs));
  std::vector<std::size_t> onsets;
  auto o = static_cast<std::size_t>(std::llround(kFirstOnsetS * fs));
  for (std::size_t i = 0; i < spec.trials_per_session; ++i) {
    if (i > 0) {
      o += std::max(min_gap, static_cast<std::size_t>(std::llround(rng.uniform(kMinSpacingS, kMaxSpacingS) * fs)));
    }
    onsets.push_back(o);
  }
  length = onsets.back() + static_cast<std::size_t>(std::llround(kTailS * fs));
  return onsets;
}

// Piecewise-constant fixation offsets joined by short raised-cosine ramps;
// each jump pulls partly back toward the fixation point.
void microsaccades(const CohortSpec& spec, Rng& rng, std::vector<double>& x, std::vector<double>& y) {
  const std::size_t n = x.size();
  std::fill(x.begin(), x.end(), 0.0);
  std::fill(y.begin(), y.end(), 0.0);
  if (spec.microsaccade_rate_hz <= 0.0 || spec.microsaccade_amplitude <= 0.0) return;
  double cx = 0.0, cy = 0.0;
  double t = 0.0;
  std::size_t filled = 0;
  while (true) {
    t += -std::log(1.0 - rng.uniform()) / spec.microsaccade_rate_hz;
    const auto start = static_cast<std::size_t>(t * spec.sample_rate);
    if (start >= n) break;
    const double nx = 0.5 * cx + spec.microsaccade_amplitude * rng.normal();
    const double ny = 0.5 * cy + spec.microsaccade_amplitude * rng.normal();
    for (; filled < start; ++filled) {
      x[filled] = cx;
      y[filled] = cy;
    }
    for (std::size_t k = 0; k < kRampSamples && filled < n; ++k, ++filled) {
      const double r = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(k + 1) / (kRampSamples + 1));
      x[filled] = cx + (nx - cx) * r;
      y[filled] = cy + (ny - cy) * r;
    }
    cx = nx;
    cy = ny;
  }
  for (; filled < n; ++filled) {
    x[filled] = cx;
    y[filled] = cy;
  }
}

std::string subject_name(Label label, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", label == Label::kPD ? "PD" : "HC", index + 1);
  return buf;
}

std::vector<RawSession> generate_subject(const CohortSpec& spec, Label label, std::size_t index) {
  const bool pd = label == Label::kPD;
  const std::uint64_t subject_seed = derive_seed(spec.seed, pd ? "subject-pd" : "subject-hc", index);
  Rng traits_rng(derive_seed(subject_seed, "traits"));
  const SubjectTraits traits = draw_traits(spec, traits_rng);
  const std::string subject = subject_name(label, index);
  const double fs = spec.sample_rate;
  const double band_gain = pd ? std::sqrt(spec.signature_multiplier) : 1.0;

  std::vector<RawSession> out;
  for (std::size_t k = 0; k < spec.sessions_per_subject; ++k) {
    Rng rng(derive_seed(subject_seed, "session", k));
    RawSession s;
    s.subject_id = subject;
    s.task = k % 2 == 0 ? Task::kProsaccade : Task::kAntisaccade;
    s.condition = !pd ? Condition::kHC : ((k + k / 2 + index) % 2 == 0 ? Condition::kPDOn : Condition::kPDOff);
    s.session_id = subject + "_s" + std::to_string(k + 1) + "_" + std::string(to_string(s.task));
    s.sample_rate = fs;
    std::size_t n = 0;
    s.target_onsets = draw_onsets(spec, rng, n);

    std::vector<double> step_x(n), step_y(n);
    microsaccades(spec, rng, step_x, step_y);

    RealFft fft(n);
    const std::size_t bins = fft.bins();
    std::vector<std::complex<double>> step_spec[2];
    for (int axis = 0; axis < 2; ++axis) {
      const auto& src = axis == 0 ? step_x : step_y;
      std::copy(src.begin(), src.end(), fft.time());
      fft.forward();
      step_spec[axis].assign(fft.freq(), fft.freq() + bins);
    }

    // Each eye: shared and independent 1/f + white noise halves, plus the
    // shared microsaccade track. PD boosts the signature band of the sum.
    const double floor_var = spec.noise_level * spec.noise_level * traits.floor_scale;
    std::vector<std::complex<double>> shared[2];
    for (int axis = 0; axis < 2; ++axis) shared[axis].assign(bins, 0.0);
    auto noise_bin = [&](std::size_t b) {
      const double f = static_cast<double>(b) * fs / static_cast<double>(n);
      const double var = 0.5 * floor_var * (1.0 + spec.noise_knee_hz / f) * static_cast<double>(n);
      const bool nyquist = (n % 2 == 0) && b == bins - 1;
      if (nyquist) return std::complex<double>(std::sqrt(var) * rng.normal(), 0.0);
      const double a = std::sqrt(0.5 * var);
      return std::complex<double>(a * rng.normal(), a * rng.normal());
    };
    for (int axis = 0; axis < 2; ++axis) {
      for (std::size_t b = 1; b < bins; ++b) shared[axis][b] = noise_bin(b);
    }
    std::vector<double>* eyes[4] = {&s.left_x, &s.left_y, &s.right_x, &s.right_y};
    for (int e = 0; e < 4; ++e) {
      const int axis = e % 2;
      std::complex<double>* spec_out = fft.freq();
      spec_out[0] = step_spec[axis][0];
      for (std::size_t b = 1; b < bins; ++b) {
        const double f = static_cast<double>(b) * fs / static_cast<double>(n);
        std::complex<double> v = shared[axis][b] + noise_bin(b) + step_spec[axis][b];
        if (f >= spec.signature_band.lo_hz && f <= spec.signature_band.hi_hz) v *= band_gain;
        spec_out[b] = v;
      }
      fft.inverse();
      const double* t = fft.time();
      const double tremor_amp = pd ? spec.tremor_amplitude * (axis == 0 ? 1.0 : 0.6) : 0.0;
      const double offset = axis == 0 ? traits.offset_x : traits.offset_y;
      auto& dst = *eyes[e];
      dst.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        double v = t[i] / static_cast<double>(n);
        if (tremor_amp > 0.0) {
          v += tremor_amp * std::sin(2.0 * std::numbers::pi * traits.tremor_hz * static_cast<double>(i) / fs +
                                     traits.tremor_phase + (axis == 0 ? 0.0 : 0.5 * std::numbers::pi));
        }
        dst[i] = traits.gain * v + offset;
      }
    }
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> kaiser_window(std::size_t n, double beta) {
  std::vector<double> w(n);
  const double denom = std::cyl_bessel_i(0.0, beta);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = n == 1 ? 0.0 : 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
    w[i] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
  }
  return w;
}

// One-sided power spectral density integrated over each band.
std::vector<double> band_powers(std::span<const double> x, double fs, const std::vector<FrequencyBand>& bands) {
  const std::size_t n = x.size();
  const auto w = kaiser_window(n, kAuditKaiserBeta);
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double wsum = 0.0;
  for (double v : w) wsum += v * v;
  RealFft fft(n);
  for (std::size_t i = 0; i < n; ++i) fft.time()[i] = (x[i] - mean) * w[i];
  fft.forward();
  const double df = fs / static_cast<double>(n);
  std::vector<double> out(bands.size(), 0.0);
  for (std::size_t b = 0; b < fft.bins(); ++b) {
    const double f = static_cast<double>(b) * df;
    const bool edge = b == 0 || ((n % 2 == 0) && b == fft.bins() - 1);
    const double psd = (edge ? 1.0 : 2.0) * std::norm(fft.freq()[b]) / (fs * wsum);
    for (std::size_t k = 0; k < bands.size(); ++k) {
      if (f >= bands[k].lo_hz && f <= bands[k].hi_hz) out[k] += psd * df;
    }
  }
  return out;
}

}  // namespace

void CohortSpec::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::kSpec, m); };
  if (subjects_per_class == 0) bad("subjects per class must be positive");
  if (sessions_per_subject == 0) bad("sessions per subject must be positive");
  if (trials_per_session == 0) bad("trials per session must be positive");
  if (!(sample_rate > 0.0)) bad("sample rate must be positive");
  if (!(noise_level > 0.0)) bad("noise level must be positive");
  if (!(noise_knee_hz >= 0.0)) bad("noise knee must be non-negative");
  if (!(microsaccade_rate_hz >= 0.0) || !(microsaccade_amplitude >= 0.0)) bad("microsaccade parameters must be >= 0");
  if (!(tremor_amplitude >= 0.0)) bad("tremor amplitude must be >= 0");
  if (!(signature_multiplier > 0.0)) bad("signature multiplier must be positive");
  if (!(idiosyncrasy >= 0.0)) bad("idiosyncrasy must be >= 0");
  if (!(tremor_min_hz > 0.0) || tremor_max_hz < tremor_min_hz) bad("tremor band must satisfy 0 < min <= max");
  if (!(tremor_max_hz < reference_cutoff_hz)) bad("tremor band must lie below the reference cutoff");
  if (!(signature_band.lo_hz > reference_cutoff_hz)) bad("signature band must lie above the reference cutoff");
  if (!(signature_band.hi_hz > signature_band.lo_hz)) bad("signature band is empty");
  if (!(signature_band.hi_hz < 0.5 * sample_rate)) bad("signature band must lie below Nyquist");
}

std::string CohortSpec::to_manifest() const {
  std::ostringstream o;
  o << "subjects_per_class=" << subjects_per_class << "\n"
    << "sessions_per_subject=" << sessions_per_subject << "\n"
    << "trials_per_session=" << trials_per_session << "\n"
    << "noise_level=" << text::shortest(noise_level) << "\n"
    << "noise_knee_hz=" << text::shortest(noise_knee_hz) << "\n"
    << "microsaccade_rate_hz=" << text::shortest(microsaccade_rate_hz) << "\n"
    << "microsaccade_amplitude=" << text::shortest(microsaccade_amplitude) << "\n"
    << "tremor_amplitude=" << text::shortest(tremor_amplitude) << "\n"
    << "tremor_min_hz=" << text::shortest(tremor_min_hz) << "\n"
    << "tremor_max_hz=" << text::shortest(tremor_max_hz) << "\n"
    << "signature_multiplier=" << text::shortest(signature_multiplier) << "\n"
    << "signature_lo_hz=" << text::shortest(signature_band.lo_hz) << "\n"
    << "signature_hi_hz=" << text::shortest(signature_band.hi_hz) << "\n"
    << "idiosyncrasy=" << text::shortest(idiosyncrasy) << "\n"
    << "reference_cutoff_hz=" << text::shortest(reference_cutoff_hz) << "\n"
    << "sample_rate=" << text::shortest(sample_rate) << "\n"
    << "seed=" << seed << "\n";
  return o.str();
}

std::vector<RawSession> generate_cohort(const CohortSpec& spec, unsigned threads) {
  spec.validate();
  const std::size_t jobs = 2 * spec.subjects_per_class;
  std::vector<std::vector<RawSession>> slots(jobs);
  auto run = [&](std::size_t j) {
    const Label label = j < spec.subjects_per_class ? Label::kHC : Label::kPD;
    slots[j] = generate_subject(spec, label, j % spec.subjects_per_class);
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs)));
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs; ++j) run(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs;) {
          try {
            run(j);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }
  std::vector<RawSession> out;
  for (auto& slot : slots) {
    for (auto& s : slot) out.push_back(std::move(s));
  }
  return out;
}

void write_cohort(const std::filesystem::path& dir, const std::vector<RawSession>& sessions, const CohortSpec& spec) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& s : sessions) {
    const auto path = dir / (s.session_id + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
    write_raw_session(out, s);
    if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
  }
  const auto manifest = dir / "cohort.manifest";
  std::ofstream out(manifest, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + manifest.string());
  out << "#cohort-manifest v1\n" << spec.to_manifest() << "sessions=" << sessions.size() << "\n";
}

std::vector<RawSession> read_cohort_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) fail(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorCode::kIo, "no session files in " + dir.string());
  std::vector<RawSession> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_raw_session_file(f));
  return out;
}

std::vector<BandPower> spectral_audit(const std::vector<RawSession>& sessions, const std::vector<FrequencyBand>& bands,
                                      const std::optional<FilterSpec>& filter) {
  if (sessions.empty()) fail(ErrorCode::kInvalidArgument, "spectral audit needs sessions");
  std::vector<double> sum[2];
  std::size_t count[2] = {0, 0};
  sum[0].assign(bands.size(), 0.0);
  sum[1].assign(bands.size(), 0.0);
  std::optional<SosFilter> sos;
  if (filter) sos = SosFilter::butterworth_highpass(*filter);
  for (const auto& s : sessions) {
    const SessionSeries series = session_series(s);
    const int cls = s.label() == Label::kPD ? 1 : 0;
    for (int c = 0; c < 2; ++c) {
      std::vector<double> x = series.channels[c];
      if (sos) x = butterworth_highpass(x, *sos, *filter);
      const auto p = band_powers(x, s.sample_rate, bands);
      for (std::size_t k = 0; k < bands.size(); ++k) sum[cls][k] += p[k];
      ++count[cls];
    }
  }
  std::vector<BandPower> out;
  for (std::size_t k = 0; k < bands.size(); ++k) {
    BandPower bp;
    bp.band = bands[k];
    bp.hc = count[0] ? sum[0][k] / static_cast<double>(count[0]) : 0.0;
    bp.pd = count[1] ? sum[1][k] / static_cast<double>(count[1]) : 0.0;
    out.push_back(bp);
  }
  return out;
}

std::string audit_table(const std::vector<BandPower>& rows) {
  std::ostringstream o;
  o << "band_lo_hz,band_hi_hz,hc_power,pd_power,pd_hc_ratio\n";
  for (const auto& r : rows) {
    o << text::shortest(r.band.lo_hz) << "," << text::shortest(r.band.hi_hz) << "," << text::digits17(r.hc) << ","
      << text::digits17(r.pd) << "," << text::digits17(r.ratio()) << "\n";
  }
  return o.str();
}

}  // namespace fixrocket

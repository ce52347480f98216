#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "fixrocket/error.hpp"
#include "fixrocket/preprocess.hpp"

namespace fixrocket {

std::string_view to_string(FilterPasses p) { return p == FilterPasses::kSingle ? "single" : "forward_backward"; }

FilterPasses parse_filter_passes(std::string_view s) {
  if (s == "single") return FilterPasses::kSingle;
  if (s == "forward_backward") return FilterPasses::kForwardBackward;
  fail(ErrorCode::kInvalidArgument, "passes must be 'single' or 'forward_backward', got '" + std::string(s) + "'");
}

void FilterSpec::validate() const {
  if (!(sample_rate > 0.0)) fail(ErrorCode::kDesign, "sample rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < sample_rate / 2.0)) {
    fail(ErrorCode::kDesign, "cutoff " + std::to_string(cutoff_hz) + " Hz must lie in (0, fs/2)");
  }
  if (order < 2 || order % 2 != 0) fail(ErrorCode::kDesign, "filter order must be even and >= 2");
}

SosFilter SosFilter::butterworth_highpass(const FilterSpec& spec) {
  spec.validate();
  using cd = std::complex<double>;
  const int n = spec.order;
  const double fs2 = 2.0 * spec.sample_rate;
  const double warped = fs2 * std::tan(std::numbers::pi * spec.cutoff_hz / spec.sample_rate);

  std::vector<Biquad> sections;
  sections.reserve(n / 2);
  // Upper-half-plane prototype poles; each stands for its conjugate pair.
  for (int k = 1; k <= n / 2; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + n - 1.0) / (2.0 * n);
    const cd prototype = std::polar(1.0, theta);
    const cd analog = warped / prototype;  // low-pass -> high-pass
    const cd z = (fs2 + analog) / (fs2 - analog);
    const double a1 = -2.0 * z.real();
    const double a2 = std::norm(z);
    // Unit gain at Nyquist, where the numerator (1 - z^-1)^2 equals 4.
    const double g = (1.0 - a1 + a2) / 4.0;
    sections.push_back({g, -2.0 * g, g, a1, a2});
  }
  return SosFilter(std::move(sections));
}

double SosFilter::magnitude(double frequency_hz, double sample_rate) const {
  const double w = 2.0 * std::numbers::pi * frequency_hz / sample_rate;
  const std::complex<double> z1 = std::polar(1.0, -w);
  const std::complex<double> z2 = z1 * z1;
  double gain = 1.0;
  for (const auto& s : sections_) {
    gain *= std::abs((s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2));
  }
  return gain;
}

namespace {

void run_sections(const std::vector<Biquad>& sections, std::vector<double>& x, bool steady) {
  double u = x.empty() ? 0.0 : x.front();
  for (const auto& s : sections) {
    double s1 = 0.0, s2 = 0.0;
    if (steady) {
      const double y = u * (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
      s2 = s.b2 * u - s.a2 * y;
      s1 = s.b1 * u - s.a1 * y + s2;
      u = y;
    }
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + s1;
      s1 = s.b1 * in - s.a1 * out + s2;
      s2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

}  // namespace

std::vector<double> SosFilter::filter(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  run_sections(sections_, y, false);
  return y;
}

std::vector<double> SosFilter::filter_steady(std::span<const double> x) const {
  std::vector<double> y(x.begin(), x.end());
  run_sections(sections_, y, true);
  return y;
}

std::vector<double> butterworth_highpass(std::span<const double> x, const FilterSpec& spec) {
  return butterworth_highpass(x, SosFilter::butterworth_highpass(spec), spec);
}

std::vector<double> butterworth_highpass(std::span<const double> x, const SosFilter& sos, const FilterSpec& spec) {
  const std::size_t pad = 3 * static_cast<std::size_t>(spec.order);
  if (x.size() <= pad) {
    fail(ErrorCode::kInsufficientData, "filter input of " + std::to_string(x.size()) + " samples, need > " +
                                           std::to_string(pad));
  }
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorCode::kData, "non-finite filter input");
  }
  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_sections(sos.sections(), ext, true);
  if (spec.passes == FilterPasses::kForwardBackward) {
    std::reverse(ext.begin(), ext.end());
    run_sections(sos.sections(), ext, true);
    std::reverse(ext.begin(), ext.end());
  }
  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

}  // namespace fixrocket

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fixrocket/data_model.hpp"
#include "fixrocket/preprocess.hpp"

namespace fixrocket {

struct FrequencyBand {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

// Parameters of a synthetic cohort. Amplitudes are gaze angles in degrees.
struct CohortSpec {
  std::size_t subjects_per_class = 30;
  std::size_t sessions_per_subject = 2;  // alternating pro / anti
  std::size_t trials_per_session = 12;
  double noise_level = 0.02;             // white floor, deg per sample
  double noise_knee_hz = 10.0;           // 1/f component equals the floor here
  double microsaccade_rate_hz = 1.0;
  double microsaccade_amplitude = 0.15;
  double tremor_amplitude = 0.05;
  double tremor_min_hz = 4.0;
  double tremor_max_hz = 6.0;
  double signature_multiplier = 2.5;     // PD / HC power ratio inside the band
  FrequencyBand signature_band{25.0, 60.0};
  double idiosyncrasy = 0.1;
  double reference_cutoff_hz = 20.0;     // bands are checked against this cutoff
  double sample_rate = kSampleRateHz;
  std::uint64_t seed = 0;

  // Throws Error(kSpec).
  void validate() const;

  // key=value lines covering every field.
  std::string to_manifest() const;
};

// Deterministic in spec alone; threads only change wall time.
std::vector<RawSession> generate_cohort(const CohortSpec& spec, unsigned threads = 1);

// Writes <dir>/<session_id>.csv for every session plus <dir>/cohort.manifest.
void write_cohort(const std::filesystem::path& dir, const std::vector<RawSession>& sessions, const CohortSpec& spec);

// Loads every *.csv in dir, sorted by file name.
std::vector<RawSession> read_cohort_dir(const std::filesystem::path& dir);

struct BandPower {
  FrequencyBand band;
  double hc = 0.0;
  double pd = 0.0;
  double ratio() const { return pd / hc; }
};

// Mean band power of the calibrated gaze position (x and y), averaged over
// the sessions of each class. A Kaiser-windowed periodogram keeps leakage
// from strong low-frequency components out of attenuated bands. With a
// filter, every session is high-passed before the periodogram.
std::vector<BandPower> spectral_audit(const std::vector<RawSession>& sessions, const std::vector<FrequencyBand>& bands,
                                      const std::optional<FilterSpec>& filter = std::nullopt);

std::string audit_table(const std::vector<BandPower>& rows);

}  // namespace fixrocket

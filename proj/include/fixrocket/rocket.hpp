#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fixrocket/data_model.hpp"

namespace fixrocket {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Read-only multichannel series, channel-major.
struct SeriesView {
  std::span<const double> data;
  std::size_t channels = 0;
  std::size_t length = 0;

  std::span<const double> channel(std::size_t c) const { return data.subspan(c * length, length); }
};

inline SeriesView view_of(const Trial& t) { return {t.values, kTrialChannels, kTrialLength}; }

struct Kernel {
  int length = 9;
  std::vector<int> channels;    // ascending, distinct
  std::vector<double> weights;  // channels.size() x length, channel-major
  double bias = 0.0;
  int dilation = 1;
  bool padding = false;

  int pad() const { return padding ? (length - 1) * dilation / 2 : 0; }
  // Number of feature-map positions for a series of the given length; may be <= 0.
  long output_length(std::size_t input_length) const;
  void validate(std::size_t num_channels) const;
};

bool operator==(const Kernel& a, const Kernel& b);

struct KernelBank {
  std::vector<Kernel> kernels;
  std::uint64_t seed = 0;
  std::size_t input_length = kTrialLength;
  std::size_t num_channels = kTrialChannels;

  std::size_t num_features() const { return 2 * kernels.size(); }
};

bool operator==(const KernelBank& a, const KernelBank& b);

inline constexpr std::size_t kDefaultNumKernels = 10000;

// Per kernel: length uniform on {7, 9, 11}; c = floor(2^u) channels,
// u ~ U[0, log2(num_channels)], drawn without replacement; N(0,1) weights
// centred per channel; bias ~ U[-1, 1]; dilation = floor(2^a),
// a ~ U[0, log2((input_length - 1) / (length - 1))]; padding with p = 1/2.
KernelBank generate_kernels(std::size_t num, std::size_t input_length, std::size_t num_channels, std::uint64_t seed);

struct KernelFeatures {
  double ppv = 0.0;
  double max = 0.0;
};

// Feature map of one kernel, zero-padded when kernel.padding is set.
std::vector<double> feature_map(const SeriesView& x, const Kernel& kernel);

// ppv = fraction of map values > 0, max = largest map value.
KernelFeatures apply_kernel(const SeriesView& x, const Kernel& kernel);

struct RowMeta {
  std::string subject_id;
  std::string session_id;
  Condition condition = Condition::kHC;
  Task task = Task::kProsaccade;
  int trial_index = 0;

  Label label() const { return label_of(condition); }
};

RowMeta row_meta(const Trial& t);

// Rows follow dataset order; columns (ppv_k, max_k) per kernel k.
struct FeatureMatrix {
  RowMatrix values;
  std::vector<RowMeta> rows;
  std::uint64_t kernel_seed = 0;  // seed of the bank that produced the columns

  std::size_t num_rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t num_columns() const { return static_cast<std::size_t>(values.cols()); }
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
};

struct TransformOptions {
  unsigned threads = 1;
};

FeatureMatrix transform(const TrialDataset& dataset, const KernelBank& bank, const TransformOptions& options = {});

// Writes one row of 2 * bank.kernels.size() features.
void transform_row(const SeriesView& x, const KernelBank& bank, std::span<double> out);

class Normalizer {
 public:
  static constexpr double kEpsilon = 1e-8;

  Normalizer() = default;
  Normalizer(std::vector<double> mean, std::vector<double> std) : mean_(std::move(mean)), std_(std::move(std)) {}

  // Column statistics over the given rows (all rows when empty); population std.
  static Normalizer fit(const RowMatrix& x, std::span<const std::size_t> rows = {});

  // (v - mean) / (std + epsilon), column-wise.
  RowMatrix apply(const RowMatrix& x) const;
  void apply_in_place(RowMatrix& x) const;

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& std() const { return std_; }
  std::size_t size() const { return mean_.size(); }
  bool empty() const { return mean_.empty(); }

  friend bool operator==(const Normalizer&, const Normalizer&) = default;

 private:
  std::vector<double> mean_;
  std::vector<double> std_;
};

// Text audit format; regeneration from the seed is the canonical path.
void save_kernel_bank(std::ostream& out, const KernelBank& bank);
KernelBank load_kernel_bank(std::istream& in);

// Feature matrix cache: text header and row metadata, then rows * cols
// little-endian IEEE doubles, row-major.
void save_features(std::ostream& out, const FeatureMatrix& features);
FeatureMatrix load_features(std::istream& in);

}  // namespace fixrocket

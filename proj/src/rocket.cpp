#include "fixrocket/rocket.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <thread>

#include "fixrocket/error.hpp"
#include "fixrocket/rng.hpp"
#include "text_util.hpp"

namespace fixrocket {

long Kernel::output_length(std::size_t input_length) const {
  return static_cast<long>(input_length) + 2L * pad() - static_cast<long>(length - 1) * dilation;
}

void Kernel::validate(std::size_t num_channels) const {
  if (length < 1) fail(ErrorCode::kDomain, "kernel length must be >= 1");
  if (dilation < 1) fail(ErrorCode::kDomain, "kernel dilation must be >= 1");
  if (channels.empty()) fail(ErrorCode::kDomain, "kernel uses no channel");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i] < 0 || static_cast<std::size_t>(channels[i]) >= num_channels) {
      fail(ErrorCode::kShape, "kernel channel index out of range");
    }
    if (i > 0 && channels[i] <= channels[i - 1]) fail(ErrorCode::kDomain, "kernel channels must be ascending");
  }
  if (weights.size() != channels.size() * static_cast<std::size_t>(length)) {
    fail(ErrorCode::kDomain, "kernel weight count does not match channels x length");
  }
}

bool operator==(const Kernel& a, const Kernel& b) {
  return a.length == b.length && a.channels == b.channels && a.weights == b.weights && a.bias == b.bias &&
         a.dilation == b.dilation && a.padding == b.padding;
}

bool operator==(const KernelBank& a, const KernelBank& b) {
  return a.seed == b.seed && a.input_length == b.input_length && a.num_channels == b.num_channels &&
         a.kernels == b.kernels;
}

KernelBank generate_kernels(std::size_t num, std::size_t input_length, std::size_t num_channels, std::uint64_t seed) {
  if (num < 1) fail(ErrorCode::kDomain, "need at least one kernel");
  if (num_channels < 1) fail(ErrorCode::kDomain, "need at least one input channel");
  if (input_length < 2) fail(ErrorCode::kDomain, "input length must be >= 2");

  static constexpr int kLengths[] = {7, 9, 11};
  Rng rng(seed);
  KernelBank bank;
  bank.seed = seed;
  bank.input_length = input_length;
  bank.num_channels = num_channels;
  bank.kernels.reserve(num);

  std::vector<int> pool(num_channels);
  for (std::size_t i = 0; i < num; ++i) {
    Kernel k;
    k.length = kLengths[rng.below(3)];

    const double u = rng.uniform(0.0, std::log2(static_cast<double>(num_channels)));
    const auto count = std::min<std::size_t>(num_channels, static_cast<std::size_t>(std::floor(std::exp2(u))));
    for (std::size_t c = 0; c < num_channels; ++c) pool[c] = static_cast<int>(c);
    for (std::size_t c = 0; c < count; ++c) {
      const auto j = c + rng.below(num_channels - c);
      std::swap(pool[c], pool[j]);
    }
    k.channels.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(k.channels.begin(), k.channels.end());

    k.weights.resize(count * k.length);
    for (std::size_t c = 0; c < count; ++c) {
      double* w = k.weights.data() + c * k.length;
      double mean = 0.0;
      for (int j = 0; j < k.length; ++j) {
        w[j] = rng.normal();
        mean += w[j];
      }
      mean /= k.length;
      for (int j = 0; j < k.length; ++j) w[j] -= mean;
    }
    k.bias = rng.uniform(-1.0, 1.0);

    const double span = static_cast<double>(input_length - 1) / static_cast<double>(k.length - 1);
    const double a = rng.uniform(0.0, std::max(0.0, std::log2(span)));
    k.dilation = std::max(1, static_cast<int>(std::floor(std::exp2(a))));
    k.padding = rng.below(2) == 1;
    bank.kernels.push_back(std::move(k));
  }
  return bank;
}

namespace {

// Accumulates bias + sum_c sum_j w[c][j] * x_c[i + j * d - pad] into map.
void compute_map(const SeriesView& x, const Kernel& k, std::vector<double>& map) {
  const long out_len = k.output_length(x.length);
  if (out_len <= 0) fail(ErrorCode::kDegenerate, "kernel produces an empty feature map");
  map.assign(static_cast<std::size_t>(out_len), k.bias);
  const long n = static_cast<long>(x.length);
  const long pad = k.pad();
  double* f = map.data();
  for (std::size_t c = 0; c < k.channels.size(); ++c) {
    const double* xc = x.channel(static_cast<std::size_t>(k.channels[c])).data();
    const double* w = k.weights.data() + c * k.length;
    for (int j = 0; j < k.length; ++j) {
      const long off = static_cast<long>(j) * k.dilation - pad;
      const long lo = std::max(0L, -off);
      const long hi = std::min(out_len, n - off);
      const double wj = w[j];
      for (long i = lo; i < hi; ++i) f[i] += wj * xc[i + off];
    }
  }
}

KernelFeatures pool(const std::vector<double>& map) {
  std::size_t positive = 0;
  double best = map.front();
  for (double v : map) {
    positive += v > 0.0;
    best = std::max(best, v);
  }
  return {static_cast<double>(positive) / static_cast<double>(map.size()), best};
}

}  // namespace

std::vector<double> feature_map(const SeriesView& x, const Kernel& kernel) {
  kernel.validate(x.channels);
  std::vector<double> map;
  compute_map(x, kernel, map);
  return map;
}

KernelFeatures apply_kernel(const SeriesView& x, const Kernel& kernel) { return pool(feature_map(x, kernel)); }

void transform_row(const SeriesView& x, const KernelBank& bank, std::span<double> out) {
  if (x.length != bank.input_length || x.channels != bank.num_channels) {
    fail(ErrorCode::kShape, "series shape " + std::to_string(x.channels) + "x" + std::to_string(x.length) +
                                " does not match kernel bank " + std::to_string(bank.num_channels) + "x" +
                                std::to_string(bank.input_length));
  }
  std::vector<double> map;
  map.reserve(x.length);
  for (std::size_t k = 0; k < bank.kernels.size(); ++k) {
    compute_map(x, bank.kernels[k], map);
    const auto f = pool(map);
    out[2 * k] = f.ppv;
    out[2 * k + 1] = f.max;
  }
}

RowMeta row_meta(const Trial& t) { return {t.subject_id, t.session_id, t.condition, t.task, t.trial_index}; }

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.kernel_seed = kernel_seed;
  out.values.resize(static_cast<Eigen::Index>(indices.size()), values.cols());
  out.rows.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(static_cast<Eigen::Index>(indices[i]));
    out.rows.push_back(rows.at(indices[i]));
  }
  return out;
}

FeatureMatrix transform(const TrialDataset& dataset, const KernelBank& bank, const TransformOptions& options) {
  for (const auto& k : bank.kernels) k.validate(bank.num_channels);
  const std::size_t n = dataset.size();
  FeatureMatrix fm;
  fm.kernel_seed = bank.seed;
  fm.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(bank.num_features()));
  fm.rows.reserve(n);
  for (const auto& t : dataset.trials()) {
    if (t.values.size() != bank.num_channels * bank.input_length) {
      fail(ErrorCode::kShape, "trial shape does not match kernel bank");
    }
    fm.rows.push_back(row_meta(t));
  }
  if (n == 0) return fm;

  const std::size_t cols = bank.num_features();
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& t = dataset[i];
      transform_row({t.values, bank.num_channels, bank.input_length}, bank,
                    std::span<double>(fm.values.data() + i * cols, cols));
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, n);
  if (workers == 1) {
    run(0, n);
    return fm;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        run(n * w / workers, n * (w + 1) / workers);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return fm;
}

Normalizer Normalizer::fit(const RowMatrix& x, std::span<const std::size_t> rows) {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(static_cast<std::size_t>(x.rows()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rows = all;
  }
  if (rows.size() < 2) fail(ErrorCode::kInsufficientData, "normalizer needs at least 2 training rows");
  const auto cols = static_cast<std::size_t>(x.cols());
  std::vector<double> mean(cols, 0.0), sd(cols, 0.0), lo(cols), hi(cols);
  for (std::size_t c = 0; c < cols; ++c) lo[c] = hi[c] = x(static_cast<Eigen::Index>(rows[0]), static_cast<Eigen::Index>(c));
  for (std::size_t r : rows) {
    const double* row = x.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      mean[c] += row[c];
      lo[c] = std::min(lo[c], row[c]);
      hi[c] = std::max(hi[c], row[c]);
    }
  }
  const double count = static_cast<double>(rows.size());
  for (std::size_t c = 0; c < cols; ++c) mean[c] /= count;
  for (std::size_t r : rows) {
    const double* row = x.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) sd[c] += (row[c] - mean[c]) * (row[c] - mean[c]);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    if (lo[c] == hi[c]) {
      mean[c] = lo[c];  // constant column maps to exact zeros
      sd[c] = 0.0;
    } else {
      sd[c] = std::sqrt(sd[c] / count);
    }
  }
  return Normalizer(std::move(mean), std::move(sd));
}

void Normalizer::apply_in_place(RowMatrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != mean_.size()) {
    fail(ErrorCode::kShape, "normalizer fitted on " + std::to_string(mean_.size()) + " columns, got " +
                                std::to_string(x.cols()));
  }
  const auto cols = mean_.size();
  std::vector<double> scale(cols);
  for (std::size_t c = 0; c < cols; ++c) scale[c] = std_[c] + kEpsilon;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double* row = x.data() + r * static_cast<Eigen::Index>(cols);
    for (std::size_t c = 0; c < cols; ++c) row[c] = (row[c] - mean_[c]) / scale[c];
  }
}

RowMatrix Normalizer::apply(const RowMatrix& x) const {
  RowMatrix out = x;
  apply_in_place(out);
  return out;
}

void save_kernel_bank(std::ostream& out, const KernelBank& bank) {
  std::string buf;
  buf += "#kernel-bank v1\n";
  buf += "seed=" + std::to_string(bank.seed) + "\n";
  buf += "num_kernels=" + std::to_string(bank.kernels.size()) + "\n";
  buf += "input_length=" + std::to_string(bank.input_length) + "\n";
  buf += "num_channels=" + std::to_string(bank.num_channels) + "\n";
  buf += "columns=length,dilation,padding,bias,num_channels,channels...,weights...\n";
  out << buf;
  for (const auto& k : bank.kernels) {
    buf.clear();
    buf += std::to_string(k.length) + "," + std::to_string(k.dilation) + "," + (k.padding ? "1" : "0") + "," +
           text::digits17(k.bias) + "," + std::to_string(k.channels.size());
    for (int c : k.channels) buf += "," + std::to_string(c);
    for (double w : k.weights) buf += "," + text::digits17(w);
    buf += '\n';
    out << buf;
  }
}

KernelBank load_kernel_bank(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "#kernel-bank v1") {
    fail(ErrorCode::kFormat, "missing '#kernel-bank v1' magic line");
  }
  KernelBank bank;
  std::size_t count = 0;
  while (true) {
    if (!std::getline(in, line)) fail(ErrorCode::kIntegrity, "kernel bank ends inside header");
    auto [key, value] = text::key_value(line, ErrorCode::kFormat);
    if (key == "seed") bank.seed = text::to_int<std::uint64_t>(value, ErrorCode::kFormat, "seed");
    else if (key == "num_kernels") count = text::to_int<std::size_t>(value, ErrorCode::kFormat, "num_kernels");
    else if (key == "input_length") bank.input_length = text::to_int<std::size_t>(value, ErrorCode::kFormat, "input_length");
    else if (key == "num_channels") bank.num_channels = text::to_int<std::size_t>(value, ErrorCode::kFormat, "num_channels");
    else if (key == "columns") break;
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) fail(ErrorCode::kIntegrity, "truncated kernel bank");
    const auto f = text::split(text::trim(line), ',');
    if (f.size() < 5) fail(ErrorCode::kIntegrity, "short kernel record");
    Kernel k;
    k.length = text::to_int<int>(f[0], ErrorCode::kFormat, "length");
    k.dilation = text::to_int<int>(f[1], ErrorCode::kFormat, "dilation");
    k.padding = text::to_int<int>(f[2], ErrorCode::kFormat, "padding") != 0;
    k.bias = text::to_double(f[3], ErrorCode::kFormat, "bias");
    const auto nc = text::to_int<std::size_t>(f[4], ErrorCode::kFormat, "num_channels");
    if (f.size() != 5 + nc + nc * static_cast<std::size_t>(k.length)) fail(ErrorCode::kIntegrity, "kernel record size mismatch");
    for (std::size_t c = 0; c < nc; ++c) k.channels.push_back(text::to_int<int>(f[5 + c], ErrorCode::kFormat, "channel"));
    for (std::size_t j = 5 + nc; j < f.size(); ++j) k.weights.push_back(text::to_double(f[j], ErrorCode::kFormat, "weight"));
    k.validate(bank.num_channels);
    bank.kernels.push_back(std::move(k));
  }
  return bank;
}

void save_features(std::ostream& out, const FeatureMatrix& features) {
  static_assert(std::endian::native == std::endian::little, "feature cache assumes a little-endian host");
  out << "#feature-matrix v1\nkernel_seed=" << features.kernel_seed << "\nrows=" << features.num_rows()
      << "\ncolumns=" << features.num_columns() << "\n";
  for (const auto& r : features.rows) {
    out << r.subject_id << "," << r.session_id << "," << to_string(r.condition) << "," << to_string(r.task) << ","
        << r.trial_index << "\n";
  }
  out << "data\n";
  out.write(reinterpret_cast<const char*>(features.values.data()),
            static_cast<std::streamsize>(sizeof(double) * features.values.size()));
  if (!out) fail(ErrorCode::kIo, "feature matrix write failed");
}

FeatureMatrix load_features(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "#feature-matrix v1") {
    fail(ErrorCode::kFormat, "missing '#feature-matrix v1' magic line");
  }
  FeatureMatrix f;
  std::size_t rows = 0, cols = 0;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(in, line)) fail(ErrorCode::kIntegrity, "feature matrix ends inside header");
    auto [key, value] = text::key_value(line, ErrorCode::kFormat);
    if (key == "kernel_seed") f.kernel_seed = text::to_int<std::uint64_t>(value, ErrorCode::kFormat, "kernel_seed");
    else if (key == "rows") rows = text::to_int<std::size_t>(value, ErrorCode::kFormat, "rows");
    else if (key == "columns") cols = text::to_int<std::size_t>(value, ErrorCode::kFormat, "columns");
    else fail(ErrorCode::kFormat, "unexpected feature matrix key '" + std::string(key) + "'");
  }
  f.rows.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) fail(ErrorCode::kIntegrity, "truncated feature matrix row list");
    const auto parts = text::split(text::trim(line), ',');
    if (parts.size() != 5) fail(ErrorCode::kIntegrity, "feature row record needs 5 fields");
    RowMeta m;
    m.subject_id = std::string(parts[0]);
    m.session_id = std::string(parts[1]);
    m.condition = parse_condition(parts[2]);
    m.task = parse_task(parts[3]);
    m.trial_index = text::to_int<int>(parts[4], ErrorCode::kFormat, "trial_index");
    f.rows.push_back(std::move(m));
  }
  if (!std::getline(in, line) || text::trim(line) != "data") fail(ErrorCode::kFormat, "missing feature data marker");
  f.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const auto bytes = static_cast<std::streamsize>(sizeof(double) * rows * cols);
  in.read(reinterpret_cast<char*>(f.values.data()), bytes);
  if (in.gcount() != bytes) fail(ErrorCode::kIntegrity, "truncated feature data");
  return f;
}

}  // namespace fixrocket

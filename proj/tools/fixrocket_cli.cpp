#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "fixrocket/fixrocket.h"

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutputRootEnv = "FIXROCKET_OUTPUT_ROOT";

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(fxr_status s) {
  if (s != FXR_OK) throw DataError(fxr_last_error());
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};

using Cohort = std::unique_ptr<fxr_cohort, Deleter<fxr_cohort, fxr_cohort_free>>;
using Dataset = std::unique_ptr<fxr_dataset, Deleter<fxr_dataset, fxr_dataset_free>>;
using Bank = std::unique_ptr<fxr_bank, Deleter<fxr_bank, fxr_bank_free>>;
using Features = std::unique_ptr<fxr_features, Deleter<fxr_features, fxr_features_free>>;
using SplitPtr = std::unique_ptr<fxr_split, Deleter<fxr_split, fxr_split_free>>;
using Model = std::unique_ptr<fxr_model, Deleter<fxr_model, fxr_model_free>>;
using Trace = std::unique_ptr<fxr_trace, Deleter<fxr_trace, fxr_trace_free>>;
using EvalPtr = std::unique_ptr<fxr_evaluation, Deleter<fxr_evaluation, fxr_evaluation_free>>;

// Takes ownership of a C string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  fxr_string_free(s);
  return out;
}

std::string resolve(const std::string& path) {
  const char* root = std::getenv(kOutputRootEnv);
  if (root == nullptr || *root == '\0' || fs::path(path).is_absolute()) return path;
  return (fs::path(root) / path).string();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

std::string p(const fs::path& path) { return path.string(); }

std::string hex(std::uint64_t v) {
  std::ostringstream o;
  o << "0x" << std::hex << v;
  return o.str();
}

std::map<std::string, std::string> seed_streams(std::uint64_t seed, std::uint64_t kernel_seed) {
  return {{"split_seed", hex(fxr_derive_seed(seed, "split"))},
          {"folds_seed", hex(fxr_derive_seed(seed, "folds"))},
          {"sampling_seed", hex(fxr_derive_seed(seed, "sampling"))},
          {"kernel_seed", hex(kernel_seed)}};
}

struct Globals {
  unsigned threads = 1;
};

class Command {
 public:
  Command(CLI::App& app, Globals& globals) : app_(app), globals_(globals) {}
  virtual ~Command() = default;
  virtual void run() = 0;

 protected:
  // Echoes every resolved option of the subcommand plus derived values.
  void write_manifest(const fs::path& dir, const std::map<std::string, std::string>& derived = {}) const {
    std::ostringstream o;
    o << "#run-manifest v1\n"
      << "command=" << app_.get_name() << "\n"
      << "library_version=" << fxr_version() << "\n"
      << "threads=" << globals_.threads << "\n";
    o << app_.config_to_str(true, false);
    for (const auto& [k, v] : derived) o << "derived." << k << "=" << v << "\n";
    write_text(dir / (app_.get_name() + ".manifest"), o.str());
  }

  CLI::App& app_;
  Globals& globals_;
};

const std::map<std::string, fxr_passes> kPasses{{"single", FXR_PASSES_SINGLE},
                                                 {"forward_backward", FXR_PASSES_FORWARD_BACKWARD}};
const std::map<std::string, fxr_balance> kBalance{
    {"none", FXR_BALANCE_NONE}, {"weights", FXR_BALANCE_WEIGHTS}, {"resample", FXR_BALANCE_RESAMPLE}};
const std::map<std::string, fxr_split_kind> kSplits{
    {"train", FXR_SPLIT_TRAIN}, {"val", FXR_SPLIT_VAL}, {"test", FXR_SPLIT_TEST}};

template <class Map>
std::vector<std::string> keys(const Map& m) {
  std::vector<std::string> k;
  for (const auto& [key, value] : m) k.push_back(key);
  return k;
}

struct ModelFlags {
  std::size_t kernels = 10000;
  double alpha = 1e4;
  std::string balance = "weights";
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    app.add_option("--kernels", kernels, "Number of random kernels")->check(CLI::PositiveNumber);
    app.add_option("--alpha", alpha, "Ridge parameter")->check(CLI::PositiveNumber);
    app.add_option("--balance", balance, "Class balancing")->check(CLI::IsMember(keys(kBalance)));
    app.add_option("--seed", seed, "Global seed (split and kernel streams derive from it)");
  }

  fxr_model_config config(unsigned threads) const {
    fxr_model_config c;
    fxr_model_config_default(&c);
    c.num_kernels = kernels;
    c.alpha = alpha;
    c.balance = kBalance.at(balance);
    c.threads = threads;
    return c;
  }
};

Dataset load_dataset(const std::string& path) {
  fxr_dataset* d = nullptr;
  check(fxr_dataset_load(path.c_str(), &d));
  return Dataset(d);
}

SplitPtr load_or_make_split(const std::string& split_path, const fxr_dataset* dataset, std::uint64_t seed,
                            const fs::path& out_dir) {
  fxr_split* s = nullptr;
  if (!split_path.empty()) {
    check(fxr_split_load(split_path.c_str(), &s));
  } else {
    check(fxr_split_make(dataset, nullptr, seed, &s));
  }
  SplitPtr split(s);
  check(fxr_split_save(split.get(), p(out_dir / "split.txt").c_str()));
  return split;
}

// Loads a cached feature matrix or recomputes it from the kernel seed.
Features features_for(const std::string& features_path, const fxr_dataset* dataset, std::size_t kernels,
                      std::uint64_t kernel_seed, unsigned threads) {
  fxr_features* f = nullptr;
  if (!features_path.empty()) {
    check(fxr_features_load(features_path.c_str(), &f));
    Features out(f);
    if (fxr_features_rows(out.get()) != fxr_dataset_size(dataset)) {
      throw DataError("feature file rows do not match the dataset");
    }
    return out;
  }
  fxr_bank* b = nullptr;
  check(fxr_bank_generate(kernels, kernel_seed, &b));
  Bank bank(b);
  check(fxr_transform(dataset, bank.get(), threads, &f));
  return Features(f);
}

class GenerateCommand : public Command {
 public:
  GenerateCommand(CLI::App& app, Globals& g) : Command(app, g) {
    fxr_cohort_spec_default(&spec_);
    app.add_option("--out", out_, "Cohort directory")->capture_default_str();
    app.add_option("--subjects", spec_.subjects_per_class, "Subjects per class")->check(CLI::PositiveNumber);
    app.add_option("--sessions", spec_.sessions_per_subject, "Sessions per subject")->check(CLI::PositiveNumber);
    app.add_option("--trials", spec_.trials_per_session, "Trials per session")->check(CLI::PositiveNumber);
    app.add_option("--noise", spec_.noise_level, "White noise floor (deg)");
    app.add_option("--noise-knee-hz", spec_.noise_knee_hz, "1/f knee frequency");
    app.add_option("--microsaccade-rate", spec_.microsaccade_rate_hz, "Microsaccades per second");
    app.add_option("--microsaccade-amplitude", spec_.microsaccade_amplitude, "Microsaccade size (deg)");
    app.add_option("--tremor-amplitude", spec_.tremor_amplitude, "PD tremor amplitude (deg)");
    app.add_option("--tremor-min-hz", spec_.tremor_min_hz, "Lowest tremor frequency");
    app.add_option("--tremor-max-hz", spec_.tremor_max_hz, "Highest tremor frequency");
    app.add_option("--signature", spec_.signature_multiplier, "PD/HC power ratio in the signature band");
    app.add_option("--signature-lo-hz", spec_.signature_lo_hz, "Signature band lower edge");
    app.add_option("--signature-hi-hz", spec_.signature_hi_hz, "Signature band upper edge");
    app.add_option("--idiosyncrasy", spec_.idiosyncrasy, "Per-subject variability");
    app.add_option("--seed", spec_.seed, "Cohort seed");
  }

  void run() override {
    const fs::path dir = resolve(out_);
    ensure_dir(dir);
    fxr_cohort* c = nullptr;
    check(fxr_cohort_generate(&spec_, globals_.threads, &c));
    Cohort cohort(c);
    check(fxr_cohort_write(cohort.get(), &spec_, p(dir).c_str()));

    fxr_filter_spec filter;
    fxr_filter_spec_default(&filter);
    const double bands[] = {4.0, 7.0, 8.0, 14.0, spec_.signature_lo_hz, spec_.signature_hi_hz};
    char* raw = nullptr;
    char* filtered = nullptr;
    check(fxr_cohort_audit(cohort.get(), bands, 3, nullptr, &raw));
    const std::string raw_table = take(raw);
    check(fxr_cohort_audit(cohort.get(), bands, 3, &filter, &filtered));
    write_text(dir / "audit.txt", "# unfiltered\n" + raw_table + "\n# after default high-pass\n" + take(filtered));
    write_manifest(dir, {{"sessions", std::to_string(fxr_cohort_size(cohort.get()))}});
    std::cout << "wrote " << fxr_cohort_size(cohort.get()) << " sessions to " << dir.string() << "\n";
  }

 private:
  fxr_cohort_spec spec_{};
  std::string out_ = "cohort";
};

class PreprocessCommand : public Command {
 public:
  PreprocessCommand(CLI::App& app, Globals& g) : Command(app, g) {
    app.add_option("--cohort", cohort_, "Directory of raw session files")->required();
    app.add_option("--out", out_, "Run directory")->capture_default_str();
    app.add_option("--cutoff", cutoff_, "High-pass cutoff in Hz, 0 disables filtering")->check(CLI::NonNegativeNumber);
    app.add_option("--order", order_, "Butterworth order")->check(CLI::PositiveNumber);
    app.add_option("--passes", passes_, "Filter passes")->check(CLI::IsMember(keys(kPasses)));
  }

  void run() override {
    const fs::path dir = resolve(out_);
    ensure_dir(dir);
    fxr_cohort* c = nullptr;
    check(fxr_cohort_read(cohort_.c_str(), &c));
    Cohort cohort(c);
    fxr_filter_spec filter;
    fxr_filter_spec_default(&filter);
    filter.cutoff_hz = cutoff_;
    filter.order = order_;
    filter.passes = kPasses.at(passes_);
    fxr_dataset* d = nullptr;
    char* report = nullptr;
    check(fxr_preprocess(cohort.get(), cutoff_ > 0.0 ? &filter : nullptr, &d, &report));
    Dataset dataset(d);
    const std::string summary = take(report);
    check(fxr_dataset_save(dataset.get(), p(dir / "dataset.txt").c_str()));
    write_text(dir / "preprocess_report.txt", summary);
    write_manifest(dir);
    std::cout << summary;
  }

 private:
  std::string cohort_;
  std::string out_ = "run";
  double cutoff_ = 20.0;
  int order_ = 8;
  std::string passes_ = "forward_backward";
};

class TransformCommand : public Command {
 public:
  TransformCommand(CLI::App& app, Globals& g) : Command(app, g) {
    app.add_option("--dataset", dataset_, "Preprocessed dataset file")->required();
    app.add_option("--out", out_, "Run directory")->capture_default_str();
    app.add_option("--kernels", kernels_, "Number of random kernels")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed_, "Global seed");
  }

  void run() override {
    const fs::path dir = resolve(out_);
    ensure_dir(dir);
    auto dataset = load_dataset(dataset_);
    const auto kseed = fxr_kernel_seed(seed_);
    fxr_bank* b = nullptr;
    check(fxr_bank_generate(kernels_, kseed, &b));
    Bank bank(b);
    check(fxr_bank_save(bank.get(), p(dir / "kernels.txt").c_str()));
    fxr_features* f = nullptr;
    check(fxr_transform(dataset.get(), bank.get(), globals_.threads, &f));
    Features features(f);
    check(fxr_features_save(features.get(), p(dir / "features.bin").c_str()));
    write_manifest(dir, seed_streams(seed_, kseed));
    std::cout << "features " << fxr_features_rows(features.get()) << " x " << fxr_features_columns(features.get())
              << "\n";
  }

 private:
  std::string dataset_;
  std::string out_ = "run";
  std::size_t kernels_ = 10000;
  std::uint64_t seed_ = 0;
};

class TrainCommand : public Command {
 public:
  TrainCommand(CLI::App& app, Globals& g) : Command(app, g) {
    app.add_option("--dataset", dataset_, "Preprocessed dataset file")->required();
    app.add_option("--features", features_, "Feature file from `transform` (recomputed when absent)");
    app.add_option("--split", split_, "Split plan file (created from the seed when absent)");
    app.add_option("--out", out_, "Run directory")->capture_default_str();
    model_.add(app);
  }

  void run() override {
    const fs::path dir = resolve(out_);
    ensure_dir(dir);
    auto dataset = load_dataset(dataset_);
    auto split = load_or_make_split(split_, dataset.get(), model_.seed, dir);
    auto features =
        features_for(features_, dataset.get(), model_.kernels, fxr_kernel_seed(model_.seed), globals_.threads);
    const auto kseed = fxr_features_kernel_seed(features.get());
    const auto config = model_.config(globals_.threads);
    fxr_model* m = nullptr;
    check(fxr_train(features.get(), split.get(), &config, kseed, &m));
    Model model(m);
    check(fxr_model_save(model.get(), p(dir / "model.txt").c_str()));
    write_manifest(dir, seed_streams(model_.seed, kseed));
    std::cout << "model written to " << (dir / "model.txt").string() << "\n";
  }

 private:
  std::string dataset_, features_, split_;
  std::string out_ = "run";
  ModelFlags model_;
};

// Writes predictions, the flat metrics file and the summary table for one split.
void write_report(const fs::path& dir, const std::string& which, double threshold) {
  const auto predictions = dir / ("predictions_" + which + ".csv");
  char* table = nullptr;
  char* metrics = nullptr;
  check(fxr_report_predictions(p(predictions).c_str(), threshold, &table, &metrics));
  write_text(dir / ("report_" + which + ".txt"), take(table));
  write_text(dir / ("metrics_" + which + ".txt"), take(metrics));
}

class EvaluateCommand : public Command {
 public:
  EvaluateCommand(CLI::App& app, Globals& g) : Command(app, g) {
    app.add_option("--dataset", dataset_, "Preprocessed dataset file")->required();
    app.add_option("--model", model_, "Model file")->required();
    app.add_option("--split", split_, "Split plan file")->required();
    app.add_option("--features", features_, "Feature file from `transform` (recomputed when absent)");
    app.add_option("--which", which_, "Split to evaluate")->check(CLI::IsMember(keys(kSplits)));
    app.add_option("--threshold", threshold_, "Subject-level decision threshold")->check(CLI::Range(0.0, 1.0));
    app.add_option("--out", out_, "Run directory")->capture_default_str();
  }

  void run() override {
    const fs::path dir = resolve(out_);
    ensure_dir(dir);
    auto dataset = load_dataset(dataset_);
    fxr_model* m = nullptr;
    check(fxr_model_load(model_.c_str(), &m));
    Model model(m);
    fxr_model_info info;
    check(fxr_model_info_get(model.get(), &info));
    fxr_split* s = nullptr;
    check(fxr_split_load(split_.c_str(), &s));
    SplitPtr split(s);
    auto features = features_for(features_, dataset.get(), info.num_kernels, info.kernel_seed, globals_.threads);
    if (fxr_features_kernel_seed(features.get()) != info.kernel_seed) {
      throw DataError("feature file was produced by a different kernel bank than the model");
    }
    fxr_evaluation* e = nullptr;
    check(fxr_evaluate(model.get(), features.get(), split.get(), kSplits.at(which_), threshold_, &e));
    EvalPtr eval(e);
    check(fxr_evaluation_save_predictions(eval.get(), p(dir / ("predictions_" + which_ + ".csv")).c_str()));
    write_report(dir, which_, threshold_);
    write_manifest(dir, {{"kernel_seed", hex(info.kernel_seed)}});
    fxr_metrics trial, subject;
    check(fxr_evaluation_metrics(eval.get(), &trial, &subject));
    std::cout << which_ << ": trial accuracy " << trial.accuracy << " uF1 " << trial.uf1 << "; subject accuracy "
              << subject.accuracy << " uF1 " << subject.uf1 << "\n";
  }

 private:
  std::string dataset_, model_, split_, features_;
  std::string which_ = "test";
  double threshold_ = 0.5;
  std::string out_ = "run";
};

class DetachCommand : public Command {
 public:
  DetachCommand(CLI::App& app, Globals& g) : Command(app, g) {
    fxr_sfd_options_default(&options_);
    app.add_option("--dataset", dataset_, "Preprocessed dataset file")->required();
    app.add_option("--features", features_, "Feature file from `transform` (recomputed when absent)");
    app.add_option("--split", split_, "Split plan file (created from the seed when absent)");
    app.add_option("--out", out_, "Run directory")->capture_default_str();
    app.add_option("--drop", options_.drop_per_step, "Fraction of active features dropped per step")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--c", options_.tradeoff_c, "Size/accuracy trade-off")->check(CLI::Range(0.0, 1.0));
    app.add_option("--min-features", options_.min_features, "Smallest feature count explored");
    app.add_flag("--refit-train-val", refit_, "Refit the selected model on train + validation");
    model_.add(app);
  }

  void run() override {
    const fs::path dir = resolve(out_);
    ensure_dir(dir);
    options_.refit_on_train_val = refit_ ? 1 : 0;
    auto dataset = load_dataset(dataset_);
    auto split = load_or_make_split(split_, dataset.get(), model_.seed, dir);
    auto features =
        features_for(features_, dataset.get(), model_.kernels, fxr_kernel_seed(model_.seed), globals_.threads);
    const auto kseed = fxr_features_kernel_seed(features.get());
    const auto config = model_.config(globals_.threads);
    fxr_model* m = nullptr;
    fxr_trace* t = nullptr;
    check(fxr_detach(features.get(), split.get(), &config, &options_, kseed, &m, &t));
    Model model(m);
    Trace trace(t);
    check(fxr_model_save(model.get(), p(dir / "model_sfd.txt").c_str()));
    check(fxr_trace_save(trace.get(), p(dir / "trace.csv").c_str()));
    check(fxr_export_features(model.get(), features.get(), p(dir / "exported_features.csv").c_str()));
    fxr_trace_info info;
    check(fxr_trace_info_get(trace.get(), &info));
    fxr_model_info minfo;
    check(fxr_model_info_get(model.get(), &minfo));
    std::ostringstream kv;
    kv.precision(17);
    kv << "steps=" << info.steps << "\nselected_step=" << info.selected_step << "\ntotal_features="
       << info.total_features << "\nretained_count=" << info.retained_count << "\nretained_fraction="
       << info.retained_fraction << "\nsurviving_kernels=" << minfo.surviving_kernels << "\nfull_val_accuracy="
       << info.full_val_accuracy << "\nselected_val_accuracy=" << info.selected_val_accuracy
       << "\nselected_score=" << info.selected_score << "\n";
    write_text(dir / "metrics_detach.txt", kv.str());
    write_manifest(dir, seed_streams(model_.seed, kseed));
    std::cout << "selected step " << info.selected_step << ": " << info.retained_count << " of "
              << info.total_features << " features, val accuracy " << info.selected_val_accuracy << "\n";
  }

 private:
  std::string dataset_, features_, split_;
  std::string out_ = "run";
  fxr_sfd_options options_{};
  bool refit_ = false;
  ModelFlags model_;
};

class GridCommand : public Command {
 public:
  GridCommand(CLI::App& app, Globals& g) : Command(app, g) {
    app.add_option("--dataset", dataset_, "Preprocessed dataset file")->required();
    app.add_option("--out", out_, "Run directory")->capture_default_str();
    app.add_option("--kernels", kernels_, "Kernel counts")->delimiter(',')->check(CLI::PositiveNumber);
    app.add_option("--alphas", alphas_, "Ridge parameters")->delimiter(',')->check(CLI::PositiveNumber);
    app.add_option("--folds", folds_, "Cross-validation folds")->check(CLI::Range(2, 100));
    app.add_option("--balance", balance_, "Class balancing")->check(CLI::IsMember(keys(kBalance)));
    app.add_option("--seed", seed_, "Global seed");
  }

  void run() override {
    const fs::path dir = resolve(out_);
    ensure_dir(dir);
    auto dataset = load_dataset(dataset_);
    fxr_grid_config c{kernels_.data(), kernels_.size(), alphas_.data(), alphas_.size(), folds_, seed_,
                      kBalance.at(balance_), globals_.threads};
    char* table = nullptr;
    char* long_table = nullptr;
    std::size_t best_k = 0;
    double best_a = 0.0;
    check(fxr_grid_search(dataset.get(), &c, &table, &long_table, &best_k, &best_a));
    const std::string t = take(table);
    write_text(dir / "grid.csv", t);
    write_text(dir / "grid_long.csv", take(long_table));
    std::ostringstream kv;
    kv.precision(17);
    kv << "best_kernels=" << best_k << "\nbest_alpha=" << best_a << "\n";
    write_text(dir / "metrics_grid.txt", kv.str());
    write_manifest(dir, seed_streams(seed_, fxr_kernel_seed(seed_)));
    std::cout << t;
  }

 private:
  std::string dataset_;
  std::string out_ = "run";
  std::vector<std::size_t> kernels_{100, 1000, 10000};
  std::vector<double> alphas_{1e-2, 1e-3, 1e-4};
  std::size_t folds_ = 5;
  std::string balance_ = "weights";
  std::uint64_t seed_ = 0;
};

class SweepCommand : public Command {
 public:
  SweepCommand(CLI::App& app, Globals& g) : Command(app, g) {
    app.add_option("--cohort", cohort_, "Directory of raw session files")->required();
    app.add_option("--out", out_, "Run directory")->capture_default_str();
    app.add_option("--cutoffs", cutoffs_, "Cutoffs in Hz, 0 disables filtering")
        ->delimiter(',')
        ->check(CLI::NonNegativeNumber);
    app.add_option("--order", order_, "Butterworth order")->check(CLI::PositiveNumber);
    app.add_option("--passes", passes_, "Filter passes")->check(CLI::IsMember(keys(kPasses)));
    app.add_option("--seeds", seeds_, "Kernel seeds")->delimiter(',');
    app.add_option("--split-seed", split_seed_, "Split seed");
    model_.add(app);
  }

  void run() override {
    const fs::path dir = resolve(out_);
    ensure_dir(dir);
    fxr_cohort* c = nullptr;
    check(fxr_cohort_read(cohort_.c_str(), &c));
    Cohort cohort(c);
    std::vector<double> cutoffs = cutoffs_;
    if (cutoffs.empty()) {
      cutoffs.push_back(0.0);
      for (int i = 1; i <= 20; ++i) cutoffs.push_back(2.5 * i);
    }
    fxr_sweep_config sc{cutoffs.data(), cutoffs.size(), order_,        kPasses.at(passes_),
                        model_.config(globals_.threads), split_seed_, seeds_.data(), seeds_.size()};
    char* table = nullptr;
    char* long_table = nullptr;
    check(fxr_cutoff_sweep(cohort.get(), &sc, &table, &long_table));
    const std::string t = take(table);
    write_text(dir / "sweep.csv", t);
    write_text(dir / "sweep_long.csv", take(long_table));
    write_manifest(dir);
    std::cout << t;
  }

 private:
  std::string cohort_;
  std::string out_ = "run";
  std::vector<double> cutoffs_;
  int order_ = 8;
  std::string passes_ = "forward_backward";
  std::vector<std::uint64_t> seeds_{0, 1, 2, 3, 4};
  std::uint64_t split_seed_ = 0;
  ModelFlags model_;
};

class ReportCommand : public Command {
 public:
  ReportCommand(CLI::App& app, Globals& g) : Command(app, g) {
    app.add_option("--run", run_, "Run directory containing predictions_*.csv")->required();
    app.add_option("--threshold", threshold_, "Subject-level decision threshold")->check(CLI::Range(0.0, 1.0));
  }

  void run() override {
    const fs::path dir = resolve(run_);
    if (!fs::is_directory(dir)) throw DataError("not a run directory: " + dir.string());
    std::vector<std::string> found;
    for (const auto& which : keys(kSplits)) {
      if (fs::exists(dir / ("predictions_" + which + ".csv"))) {
        write_report(dir, which, threshold_);
        found.push_back(which);
      }
    }
    if (found.empty()) throw DataError("no predictions_*.csv in " + dir.string());
    std::ostringstream index;
    index << "# tables in " << dir.filename().string() << "\n";
    for (const auto& w : found) index << "report_" << w << ".txt\nmetrics_" << w << ".txt\n";
    for (const char* extra : {"grid.csv", "sweep.csv", "trace.csv", "metrics_detach.txt", "metrics_grid.txt"}) {
      if (fs::exists(dir / extra)) index << extra << "\n";
    }
    write_text(dir / "summary.txt", index.str());
    for (const auto& w : found) {
      std::ifstream in(dir / ("report_" + w + ".txt"));
      std::cout << "[" << w << "]\n" << in.rdbuf() << "\n";
    }
  }

 private:
  std::string run_;
  double threshold_ = 0.5;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixation-trial classification with random convolutional kernels"};
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.option_defaults()->always_capture_default();
  Globals globals;
  app.add_option("--threads", globals.threads, "Worker threads")->check(CLI::Range(1u, 256u));
  app.require_subcommand(1);

  std::vector<std::pair<CLI::App*, std::unique_ptr<Command>>> commands;
  auto add = [&]<class C>(const char* name, const char* help, std::type_identity<C>) {
    CLI::App* sub = app.add_subcommand(name, help);
    commands.emplace_back(sub, std::make_unique<C>(*sub, globals));
  };
  add("generate", "Write a synthetic cohort", std::type_identity<GenerateCommand>{});
  add("preprocess", "Raw sessions to a trial dataset", std::type_identity<PreprocessCommand>{});
  add("transform", "Kernel bank and feature matrix", std::type_identity<TransformCommand>{});
  add("train", "Fit the ridge classifier on the training split", std::type_identity<TrainCommand>{});
  add("evaluate", "Score a model on one split", std::type_identity<EvaluateCommand>{});
  add("detach", "Sequential feature detachment", std::type_identity<DetachCommand>{});
  add("grid-search", "Kernel count x ridge parameter cross-validation", std::type_identity<GridCommand>{});
  add("sweep-cutoff", "Classification quality across high-pass cutoffs", std::type_identity<SweepCommand>{});
  add("report", "Rebuild summary tables of a run directory", std::type_identity<ReportCommand>{});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (auto& [sub, cmd] : commands) {
      if (sub->parsed()) cmd->run();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

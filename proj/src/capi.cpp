#include <cstdlib>
#include <memory>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>

#include "fixrocket/error.hpp"
#include "fixrocket/fixrocket.h"
#include "fixrocket/harness.hpp"
#include "fixrocket/rng.hpp"
#include "fixrocket/synthgen.hpp"

using namespace fixrocket;

struct fxr_cohort {
  std::vector<RawSession> sessions;
};
struct fxr_dataset {
  TrialDataset data;
};
struct fxr_bank {
  KernelBank bank;
};
struct fxr_features {
  FeatureMatrix matrix;
};
struct fxr_split {
  SplitPlan plan;
};
struct fxr_model {
  RidgeModel model;
};
struct fxr_trace {
  DetachmentTrace trace;
};
struct fxr_evaluation {
  Evaluation eval;
  std::vector<Prediction> predictions;
};

namespace {

thread_local std::string g_last_error;

template <class F>
fxr_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return FXR_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<fxr_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FXR_ERR_OUT_OF_MEMORY;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return FXR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return FXR_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::kInvalidArgument, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_string(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

std::ofstream open_out(const char* path) {
  require(path, "path");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, std::string("cannot open ") + path + " for writing");
  return out;
}

std::ifstream open_in(const char* path) {
  require(path, "path");
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, std::string("cannot open ") + path);
  return in;
}

void check_written(std::ofstream& out, const char* path) {
  out.flush();
  if (!out) fail(ErrorCode::kIo, std::string("write failed for ") + path);
}

CohortSpec to_cpp(const fxr_cohort_spec& s) {
  CohortSpec c;
  c.subjects_per_class = s.subjects_per_class;
  c.sessions_per_subject = s.sessions_per_subject;
  c.trials_per_session = s.trials_per_session;
  c.noise_level = s.noise_level;
  c.noise_knee_hz = s.noise_knee_hz;
  c.microsaccade_rate_hz = s.microsaccade_rate_hz;
  c.microsaccade_amplitude = s.microsaccade_amplitude;
  c.tremor_amplitude = s.tremor_amplitude;
  c.tremor_min_hz = s.tremor_min_hz;
  c.tremor_max_hz = s.tremor_max_hz;
  c.signature_multiplier = s.signature_multiplier;
  c.signature_band = {s.signature_lo_hz, s.signature_hi_hz};
  c.idiosyncrasy = s.idiosyncrasy;
  c.reference_cutoff_hz = s.reference_cutoff_hz;
  c.sample_rate = s.sample_rate;
  c.seed = s.seed;
  return c;
}

FilterPasses to_cpp(fxr_passes p) {
  switch (p) {
    case FXR_PASSES_SINGLE: return FilterPasses::kSingle;
    case FXR_PASSES_FORWARD_BACKWARD: return FilterPasses::kForwardBackward;
  }
  fail(ErrorCode::kInvalidArgument, "unknown filter pass mode");
}

FilterSpec to_cpp(const fxr_filter_spec& s) {
  FilterSpec f;
  f.order = s.order;
  f.cutoff_hz = s.cutoff_hz;
  f.sample_rate = s.sample_rate;
  f.passes = to_cpp(s.passes);
  f.validate();
  return f;
}

ClassBalance to_cpp(fxr_balance b) {
  switch (b) {
    case FXR_BALANCE_NONE: return ClassBalance::kNone;
    case FXR_BALANCE_WEIGHTS: return ClassBalance::kWeights;
    case FXR_BALANCE_RESAMPLE: return ClassBalance::kResample;
  }
  fail(ErrorCode::kInvalidArgument, "unknown class balance mode");
}

Split to_cpp(fxr_split_kind k) {
  switch (k) {
    case FXR_SPLIT_TRAIN: return Split::kTrain;
    case FXR_SPLIT_VAL: return Split::kVal;
    case FXR_SPLIT_TEST: return Split::kTest;
  }
  fail(ErrorCode::kInvalidArgument, "unknown split");
}

ModelConfig to_cpp(const fxr_model_config& c) {
  ModelConfig m;
  m.num_kernels = c.num_kernels;
  m.alpha = c.alpha;
  m.balance = to_cpp(c.balance);
  m.threshold = c.threshold;
  m.threads = c.threads == 0 ? 1 : c.threads;
  if (m.num_kernels == 0) fail(ErrorCode::kInvalidArgument, "kernel count must be positive");
  if (!(m.alpha > 0.0)) fail(ErrorCode::kInvalidArgument, "ridge parameter must be positive");
  if (!(m.threshold > 0.0 && m.threshold < 1.0)) fail(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1)");
  return m;
}

void fill(fxr_metrics* out, const Metrics& m) {
  if (out == nullptr) return;
  out->count = m.count;
  out->true_pd = m.true_pd;
  out->false_pd = m.false_pd;
  out->true_hc = m.true_hc;
  out->false_hc = m.false_hc;
  out->accuracy = m.accuracy;
  out->uf1 = m.uf1;
  out->hc_f1 = m.hc.f1;
  out->pd_f1 = m.pd.f1;
}

}  // namespace

extern "C" {

const char* fxr_version(void) { return "1.0.0"; }

const char* fxr_last_error(void) { return g_last_error.c_str(); }

const char* fxr_status_name(fxr_status status) {
  switch (status) {
    case FXR_OK: return "ok";
    case FXR_ERR_OUT_OF_MEMORY: return "out-of-memory";
    case FXR_ERR_INTERNAL: return "internal";
    default: break;
  }
  const int v = static_cast<int>(status);
  if (v >= 1 && v <= 17) return error_code_name(static_cast<ErrorCode>(v)).data();
  return "unknown";
}

void fxr_string_free(char* s) { std::free(s); }

void fxr_cohort_spec_default(fxr_cohort_spec* spec) {
  if (spec == nullptr) return;
  const CohortSpec c;
  spec->subjects_per_class = c.subjects_per_class;
  spec->sessions_per_subject = c.sessions_per_subject;
  spec->trials_per_session = c.trials_per_session;
  spec->noise_level = c.noise_level;
  spec->noise_knee_hz = c.noise_knee_hz;
  spec->microsaccade_rate_hz = c.microsaccade_rate_hz;
  spec->microsaccade_amplitude = c.microsaccade_amplitude;
  spec->tremor_amplitude = c.tremor_amplitude;
  spec->tremor_min_hz = c.tremor_min_hz;
  spec->tremor_max_hz = c.tremor_max_hz;
  spec->signature_multiplier = c.signature_multiplier;
  spec->signature_lo_hz = c.signature_band.lo_hz;
  spec->signature_hi_hz = c.signature_band.hi_hz;
  spec->idiosyncrasy = c.idiosyncrasy;
  spec->reference_cutoff_hz = c.reference_cutoff_hz;
  spec->sample_rate = c.sample_rate;
  spec->seed = c.seed;
}

fxr_status fxr_cohort_spec_manifest(const fxr_cohort_spec* spec, char** text) {
  return guarded([&] {
    require(spec, "spec");
    require(text, "text");
    *text = dup_string(to_cpp(*spec).to_manifest());
  });
}

fxr_status fxr_cohort_generate(const fxr_cohort_spec* spec, unsigned threads, fxr_cohort** out) {
  return guarded([&] {
    require(spec, "spec");
    require(out, "out");
    auto c = std::make_unique<fxr_cohort>();
    c->sessions = generate_cohort(to_cpp(*spec), threads == 0 ? 1 : threads);
    *out = c.release();
  });
}

fxr_status fxr_cohort_write(const fxr_cohort* cohort, const fxr_cohort_spec* spec, const char* dir) {
  return guarded([&] {
    require(cohort, "cohort");
    require(spec, "spec");
    require(dir, "dir");
    write_cohort(dir, cohort->sessions, to_cpp(*spec));
  });
}

fxr_status fxr_cohort_read(const char* dir, fxr_cohort** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    auto c = std::make_unique<fxr_cohort>();
    c->sessions = read_cohort_dir(dir);
    *out = c.release();
  });
}

size_t fxr_cohort_size(const fxr_cohort* cohort) { return cohort ? cohort->sessions.size() : 0; }

void fxr_cohort_free(fxr_cohort* cohort) { delete cohort; }

void fxr_filter_spec_default(fxr_filter_spec* spec) {
  if (spec == nullptr) return;
  const FilterSpec f;
  spec->order = f.order;
  spec->cutoff_hz = f.cutoff_hz;
  spec->sample_rate = f.sample_rate;
  spec->passes = f.passes == FilterPasses::kSingle ? FXR_PASSES_SINGLE : FXR_PASSES_FORWARD_BACKWARD;
}

fxr_status fxr_cohort_audit(const fxr_cohort* cohort, const double* bands, size_t n_bands,
                            const fxr_filter_spec* filter, char** table) {
  return guarded([&] {
    require(cohort, "cohort");
    require(table, "table");
    if (n_bands > 0) require(bands, "bands");
    std::vector<FrequencyBand> b;
    for (size_t i = 0; i < n_bands; ++i) b.push_back({bands[2 * i], bands[2 * i + 1]});
    std::optional<FilterSpec> f;
    if (filter != nullptr) f = to_cpp(*filter);
    *table = dup_string(audit_table(spectral_audit(cohort->sessions, b, f)));
  });
}

fxr_status fxr_preprocess(const fxr_cohort* cohort, const fxr_filter_spec* filter, fxr_dataset** out, char** report) {
  return guarded([&] {
    require(cohort, "cohort");
    require(out, "out");
    PreprocessOptions options;
    if (filter != nullptr) options.filter = to_cpp(*filter);
    else options.filter.reset();
    auto result = preprocess_pipeline(cohort->sessions, options);
    auto d = std::make_unique<fxr_dataset>();
    d->data = std::move(result.dataset);
    if (report != nullptr) *report = dup_string(result.report.summary());
    *out = d.release();
  });
}

fxr_status fxr_dataset_save(const fxr_dataset* dataset, const char* path) {
  return guarded([&] {
    require(dataset, "dataset");
    auto out = open_out(path);
    save_dataset(out, dataset->data);
    check_written(out, path);
  });
}

fxr_status fxr_dataset_load(const char* path, fxr_dataset** out) {
  return guarded([&] {
    require(out, "out");
    auto in = open_in(path);
    auto d = std::make_unique<fxr_dataset>();
    d->data = load_dataset(in);
    *out = d.release();
  });
}

size_t fxr_dataset_size(const fxr_dataset* dataset) { return dataset ? dataset->data.size() : 0; }

size_t fxr_dataset_subject_count(const fxr_dataset* dataset) {
  return dataset ? dataset->data.subject_index().size() : 0;
}

void fxr_dataset_free(fxr_dataset* dataset) { delete dataset; }

fxr_status fxr_split_make(const fxr_dataset* dataset, const double* ratios, uint64_t seed, fxr_split** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    SplitRatios r;
    if (ratios != nullptr) r = {ratios[0], ratios[1], ratios[2]};
    auto s = std::make_unique<fxr_split>();
    s->plan = make_split(dataset->data, r, seed);
    *out = s.release();
  });
}

fxr_status fxr_folds_make(const fxr_dataset* dataset, size_t k, uint64_t seed, fxr_split** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    auto plans = make_folds(dataset->data, k, seed);
    std::vector<std::unique_ptr<fxr_split>> handles;
    for (auto& p : plans) {
      handles.push_back(std::make_unique<fxr_split>());
      handles.back()->plan = std::move(p);
    }
    for (size_t i = 0; i < handles.size(); ++i) out[i] = handles[i].release();
  });
}

fxr_status fxr_split_save(const fxr_split* split, const char* path) {
  return guarded([&] {
    require(split, "split");
    auto out = open_out(path);
    save_split(out, split->plan);
    check_written(out, path);
  });
}

fxr_status fxr_split_load(const char* path, fxr_split** out) {
  return guarded([&] {
    require(out, "out");
    auto in = open_in(path);
    auto s = std::make_unique<fxr_split>();
    s->plan = load_split(in);
    *out = s.release();
  });
}

fxr_status fxr_split_counts(const fxr_split* split, const fxr_dataset* dataset, size_t counts[3]) {
  return guarded([&] {
    require(split, "split");
    require(dataset, "dataset");
    require(counts, "counts");
    counts[0] = split->plan.rows(dataset->data, Split::kTrain).size();
    counts[1] = split->plan.rows(dataset->data, Split::kVal).size();
    counts[2] = split->plan.rows(dataset->data, Split::kTest).size();
  });
}

void fxr_split_free(fxr_split* split) { delete split; }

uint64_t fxr_derive_seed(uint64_t seed, const char* stream) { return derive_seed(seed, stream ? stream : ""); }

uint64_t fxr_kernel_seed(uint64_t seed) { return kernel_seed_for(seed); }

fxr_status fxr_bank_generate(size_t num_kernels, uint64_t kernel_seed, fxr_bank** out) {
  return guarded([&] {
    require(out, "out");
    auto b = std::make_unique<fxr_bank>();
    b->bank = generate_kernels(num_kernels, kTrialLength, kTrialChannels, kernel_seed);
    *out = b.release();
  });
}

fxr_status fxr_bank_save(const fxr_bank* bank, const char* path) {
  return guarded([&] {
    require(bank, "bank");
    auto out = open_out(path);
    save_kernel_bank(out, bank->bank);
    check_written(out, path);
  });
}

void fxr_bank_free(fxr_bank* bank) { delete bank; }

fxr_status fxr_transform(const fxr_dataset* dataset, const fxr_bank* bank, unsigned threads, fxr_features** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(bank, "bank");
    require(out, "out");
    auto f = std::make_unique<fxr_features>();
    f->matrix = transform(dataset->data, bank->bank, {threads == 0 ? 1 : threads});
    *out = f.release();
  });
}

fxr_status fxr_features_save(const fxr_features* features, const char* path) {
  return guarded([&] {
    require(features, "features");
    auto out = open_out(path);
    save_features(out, features->matrix);
    check_written(out, path);
  });
}

fxr_status fxr_features_load(const char* path, fxr_features** out) {
  return guarded([&] {
    require(out, "out");
    auto in = open_in(path);
    auto f = std::make_unique<fxr_features>();
    f->matrix = load_features(in);
    *out = f.release();
  });
}

size_t fxr_features_rows(const fxr_features* features) { return features ? features->matrix.num_rows() : 0; }

size_t fxr_features_columns(const fxr_features* features) { return features ? features->matrix.num_columns() : 0; }

uint64_t fxr_features_kernel_seed(const fxr_features* features) { return features ? features->matrix.kernel_seed : 0; }

void fxr_features_free(fxr_features* features) { delete features; }

void fxr_model_config_default(fxr_model_config* config) {
  if (config == nullptr) return;
  const ModelConfig m;
  config->num_kernels = m.num_kernels;
  config->alpha = m.alpha;
  config->balance = FXR_BALANCE_WEIGHTS;
  config->threshold = m.threshold;
  config->threads = m.threads;
}

fxr_status fxr_train(const fxr_features* features, const fxr_split* split, const fxr_model_config* config,
                     uint64_t kernel_seed, fxr_model** out) {
  return guarded([&] {
    require(features, "features");
    require(split, "split");
    require(config, "config");
    require(out, "out");
    auto m = std::make_unique<fxr_model>();
    m->model = train_on_plan(features->matrix, split->plan, to_cpp(*config), kernel_seed);
    *out = m.release();
  });
}

fxr_status fxr_model_save(const fxr_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    auto out = open_out(path);
    save_model(out, model->model);
    check_written(out, path);
  });
}

fxr_status fxr_model_load(const char* path, fxr_model** out) {
  return guarded([&] {
    require(out, "out");
    auto in = open_in(path);
    auto m = std::make_unique<fxr_model>();
    m->model = load_model(in);
    *out = m.release();
  });
}

fxr_status fxr_model_info_get(const fxr_model* model, fxr_model_info* info) {
  return guarded([&] {
    require(model, "model");
    require(info, "info");
    const auto& m = model->model;
    info->alpha = m.alpha;
    info->kernel_seed = m.kernel_seed;
    info->num_kernels = m.num_kernels;
    info->num_features = m.num_features();
    info->active_features = m.num_active();
    info->surviving_kernels = surviving_kernels(m.mask);
  });
}

void fxr_model_free(fxr_model* model) { delete model; }

void fxr_sfd_options_default(fxr_sfd_options* options) {
  if (options == nullptr) return;
  const SfdOptions o;
  options->drop_per_step = o.drop_per_step;
  options->tradeoff_c = o.tradeoff_c;
  options->min_features = o.min_features;
  options->refit_on_train_val = o.refit_on_train_val ? 1 : 0;
}

fxr_status fxr_detach(const fxr_features* features, const fxr_split* split, const fxr_model_config* config,
                      const fxr_sfd_options* options, uint64_t kernel_seed, fxr_model** model, fxr_trace** trace) {
  return guarded([&] {
    require(features, "features");
    require(split, "split");
    require(config, "config");
    require(model, "model");
    SfdOptions o;
    if (options != nullptr) {
      o.drop_per_step = options->drop_per_step;
      o.tradeoff_c = options->tradeoff_c;
      o.min_features = options->min_features;
      o.refit_on_train_val = options->refit_on_train_val != 0;
    }
    auto result = detach_on_plan(features->matrix, split->plan, to_cpp(*config), o, kernel_seed);
    auto m = std::make_unique<fxr_model>();
    m->model = std::move(result.model);
    std::unique_ptr<fxr_trace> t;
    if (trace != nullptr) {
      t = std::make_unique<fxr_trace>();
      t->trace = std::move(result.trace);
    }
    *model = m.release();
    if (trace != nullptr) *trace = t.release();
  });
}

fxr_status fxr_trace_save(const fxr_trace* trace, const char* path) {
  return guarded([&] {
    require(trace, "trace");
    auto out = open_out(path);
    save_trace(out, trace->trace);
    check_written(out, path);
  });
}

fxr_status fxr_trace_info_get(const fxr_trace* trace, fxr_trace_info* info) {
  return guarded([&] {
    require(trace, "trace");
    require(info, "info");
    const auto& t = trace->trace;
    if (t.steps.empty()) fail(ErrorCode::kDegenerate, "empty detachment trace");
    const auto& sel = t.steps[t.selected];
    info->steps = t.steps.size();
    info->selected_step = t.selected;
    info->total_features = t.total_features;
    info->retained_count = sel.retained_count;
    info->retained_fraction = sel.retained_fraction;
    info->full_val_accuracy = t.steps.front().val_accuracy;
    info->selected_val_accuracy = sel.val_accuracy;
    info->selected_score = sel.score;
  });
}

void fxr_trace_free(fxr_trace* trace) { delete trace; }

fxr_status fxr_export_features(const fxr_model* model, const fxr_features* features, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(features, "features");
    const auto exported = export_active_features(model->model, features->matrix);
    auto out = open_out(path);
    save_exported_features(out, exported);
    check_written(out, path);
  });
}

fxr_status fxr_evaluate(const fxr_model* model, const fxr_features* features, const fxr_split* split,
                        fxr_split_kind which, double threshold, fxr_evaluation** out) {
  return guarded([&] {
    require(model, "model");
    require(features, "features");
    require(split, "split");
    require(out, "out");
    if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorCode::kInvalidArgument, "threshold must lie in (0, 1)");
    const Split s = to_cpp(which);
    const auto rows = split->plan.rows(features->matrix.rows, s);
    auto e = std::make_unique<fxr_evaluation>();
    e->eval = evaluate_model(model->model, features->matrix, rows, threshold);
    e->predictions = predictions_of(e->eval, features->matrix.rows, s);
    *out = e.release();
  });
}

fxr_status fxr_evaluation_metrics(const fxr_evaluation* evaluation, fxr_metrics* trial, fxr_metrics* subject) {
  return guarded([&] {
    require(evaluation, "evaluation");
    fill(trial, evaluation->eval.trial);
    fill(subject, evaluation->eval.subject);
  });
}

fxr_status fxr_evaluation_save_predictions(const fxr_evaluation* evaluation, const char* path) {
  return guarded([&] {
    require(evaluation, "evaluation");
    auto out = open_out(path);
    save_predictions(out, evaluation->predictions);
    check_written(out, path);
  });
}

void fxr_evaluation_free(fxr_evaluation* evaluation) { delete evaluation; }

fxr_status fxr_report_predictions(const char* predictions_path, double threshold, char** table, char** metrics) {
  return guarded([&] {
    auto in = open_in(predictions_path);
    const auto predictions = load_predictions(in);
    const auto summary = summarize_predictions(predictions, threshold);
    set_string(table, summary_table(summary));
    set_string(metrics, metrics_kv(summary));
  });
}

fxr_status fxr_experiment(const fxr_dataset* dataset, const fxr_split* split, const fxr_model_config* config,
                          const uint64_t* seeds, size_t n_seeds, char** table, char** long_table,
                          char** attribute_table_out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(split, "split");
    require(config, "config");
    if (n_seeds > 0) require(seeds, "seeds");
    const std::vector<std::uint64_t> s(seeds, seeds + n_seeds);
    const auto report = run_experiment(dataset->data, split->plan, to_cpp(*config), s);
    set_string(table, report.table());
    set_string(long_table, long_format(report));
    if (attribute_table_out != nullptr) {
      std::vector<RowMeta> rows;
      for (const auto& t : dataset->data.trials()) rows.push_back(row_meta(t));
      const auto groups = attribute_report(report, rows);
      *attribute_table_out = dup_string(attribute_table(groups));
    }
  });
}

fxr_status fxr_grid_search(const fxr_dataset* dataset, const fxr_grid_config* config, char** table,
                           char** long_table, size_t* best_kernels, double* best_alpha) {
  return guarded([&] {
    require(dataset, "dataset");
    require(config, "config");
    if (config->n_kernel_counts == 0 || config->n_alphas == 0) {
      fail(ErrorCode::kInvalidArgument, "grid needs at least one kernel count and one ridge parameter");
    }
    require(config->kernel_counts, "kernel_counts");
    require(config->alphas, "alphas");
    GridConfig g;
    g.kernel_counts.assign(config->kernel_counts, config->kernel_counts + config->n_kernel_counts);
    g.alphas.assign(config->alphas, config->alphas + config->n_alphas);
    g.seed = config->seed;
    g.balance = to_cpp(config->balance);
    g.threads = config->threads == 0 ? 1 : config->threads;
    const auto folds = make_folds(dataset->data, config->folds, config->seed);
    const auto result = grid_search(dataset->data, folds, g);
    set_string(table, result.table());
    set_string(long_table, long_format(result));
    if (best_kernels != nullptr) *best_kernels = result.kernel_counts[result.best_kernels];
    if (best_alpha != nullptr) *best_alpha = result.alphas[result.best_alpha];
  });
}

fxr_status fxr_cutoff_sweep(const fxr_cohort* cohort, const fxr_sweep_config* config, char** table,
                            char** long_table) {
  return guarded([&] {
    require(cohort, "cohort");
    require(config, "config");
    if (config->n_cutoffs > 0) require(config->cutoffs, "cutoffs");
    if (config->n_seeds > 0) require(config->seeds, "seeds");
    SweepConfig s;
    s.cutoffs.assign(config->cutoffs, config->cutoffs + config->n_cutoffs);
    if (s.cutoffs.empty()) s.cutoffs = SweepConfig::default_cutoffs();
    s.order = config->order;
    s.passes = to_cpp(config->passes);
    s.model = to_cpp(config->model);
    s.split_seed = config->split_seed;
    s.seeds.assign(config->seeds, config->seeds + config->n_seeds);
    const auto result = cutoff_sweep(cohort->sessions, s);
    set_string(table, result.table());
    set_string(long_table, long_format(result));
  });
}

}  // extern "C"

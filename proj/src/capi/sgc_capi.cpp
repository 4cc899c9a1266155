#include "sgc/sgc.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "report.hpp"

struct sgc_raster {
  sgc::MultibandRaster value;
};

struct sgc_dataset {
  sgc::Dataset value;
};

struct sgc_model {
  sgc::UNetModel<float> value;
};

struct sgc_cv {
  sgc::CvReport value;
};

namespace {

thread_local std::string g_last_error;

sgc_status to_status(sgc::ErrorKind kind) {
  using sgc::ErrorKind;
  switch (kind) {
    case ErrorKind::shape: return SGC_ERR_SHAPE;
    case ErrorKind::format: return SGC_ERR_FORMAT;
    case ErrorKind::io: return SGC_ERR_IO;
    case ErrorKind::data: return SGC_ERR_DATA;
    case ErrorKind::index: return SGC_ERR_INDEX;
    case ErrorKind::state: return SGC_ERR_STATE;
    case ErrorKind::domain: return SGC_ERR_DOMAIN;
    case ErrorKind::config: return SGC_ERR_CONFIG;
    case ErrorKind::capacity: return SGC_ERR_CAPACITY;
    case ErrorKind::training: return SGC_ERR_TRAINING;
  }
  return SGC_ERR_INTERNAL;
}

sgc_status fail(sgc_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

struct ArgumentError {
  std::string message;
};

template <class T>
T& deref(T* p, const char* name) {
  if (!p) throw ArgumentError{std::string(name) + " is NULL"};
  return *p;
}

// Runs fn, translating exceptions into status codes.
template <class Fn>
sgc_status guarded(Fn&& fn) {
  try {
    fn();
    return SGC_OK;
  } catch (const ArgumentError& e) {
    return fail(SGC_ERR_ARGUMENT, e.message);
  } catch (const sgc::Error& e) {
    return fail(to_status(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SGC_ERR_CAPACITY, "out of memory");
  } catch (const std::exception& e) {
    return fail(SGC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SGC_ERR_INTERNAL, "unknown failure");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<sgc::LossKind> parse_losses(const char* list) {
  if (!list) return {sgc::kAllLosses.begin(), sgc::kAllLosses.end()};
  std::vector<sgc::LossKind> out;
  std::string s(list);
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(sgc::parse_loss(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw sgc::ConfigError("loss list is empty");
  return out;
}

std::size_t metric_index(const char* name) {
  deref(name, "metric");
  for (std::size_t m = 0; m < 7; ++m) {
    if (std::strcmp(name, sgc::kMetricNames[m]) == 0) return m;
  }
  throw sgc::ConfigError(std::string("unknown metric '") + name + "'");
}

sgc::PairRefs all_pairs(const sgc::Dataset& ds) {
  sgc::PairRefs refs;
  for (const auto& p : ds.pairs) refs.push_back(&p);
  return refs;
}

}  // namespace

extern "C" {

const char* sgc_version(void) { return "1.0.0"; }

const char* sgc_status_name(sgc_status status) {
  switch (status) {
    case SGC_OK: return "ok";
    case SGC_ERR_SHAPE: return "shape error";
    case SGC_ERR_FORMAT: return "format error";
    case SGC_ERR_IO: return "io error";
    case SGC_ERR_DATA: return "data error";
    case SGC_ERR_INDEX: return "index error";
    case SGC_ERR_STATE: return "state error";
    case SGC_ERR_DOMAIN: return "domain error";
    case SGC_ERR_CONFIG: return "config error";
    case SGC_ERR_CAPACITY: return "capacity error";
    case SGC_ERR_TRAINING: return "training error";
    case SGC_ERR_ARGUMENT: return "invalid argument";
    case SGC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sgc_last_error(void) { return g_last_error.c_str(); }

void sgc_string_free(char* s) { std::free(s); }

// Rasters --------------------------------------------------------------------

sgc_status sgc_raster_create(uint32_t width, uint32_t height, uint32_t bands, const float* data, sgc_raster** out) {
  return guarded([&] {
    deref(out, "out");
    *out = nullptr;
    if (data) {
      const std::size_t n = std::size_t{width} * height * bands;
      sgc::MultibandRaster r(width, height, bands, std::vector<float>(data, data + n));
      r.check_finite();
      *out = new sgc_raster{std::move(r)};
    } else {
      *out = new sgc_raster{sgc::MultibandRaster(width, height, bands)};
    }
  });
}

sgc_status sgc_raster_load(const char* path, sgc_raster** out) {
  return guarded([&] {
    deref(out, "out");
    *out = nullptr;
    *out = new sgc_raster{sgc::load_raster(&deref(path, "path"))};
  });
}

sgc_status sgc_raster_save(const sgc_raster* raster, const char* path) {
  return guarded([&] { sgc::save_raster(deref(raster, "raster").value, &deref(path, "path")); });
}

sgc_status sgc_raster_shape(const sgc_raster* raster, uint32_t* width, uint32_t* height, uint32_t* bands) {
  return guarded([&] {
    const auto& r = deref(raster, "raster").value;
    if (width) *width = static_cast<uint32_t>(r.width());
    if (height) *height = static_cast<uint32_t>(r.height());
    if (bands) *bands = static_cast<uint32_t>(r.bands());
  });
}

sgc_status sgc_raster_read(const sgc_raster* raster, float* dst, size_t capacity) {
  return guarded([&] {
    const auto& r = deref(raster, "raster").value;
    deref(dst, "dst");
    if (capacity < r.size()) {
      throw sgc::CapacityError("destination holds " + std::to_string(capacity) + " floats, raster has " +
                               std::to_string(r.size()));
    }
    std::copy(r.data().begin(), r.data().end(), dst);
  });
}

sgc_status sgc_raster_export_pgm(const sgc_raster* raster, uint32_t band, const char* path) {
  return guarded([&] { sgc::band_to_grayscale(deref(raster, "raster").value, band, &deref(path, "path")); });
}

void sgc_raster_free(sgc_raster* raster) { delete raster; }

sgc_status sgc_scene_synthesize(const char* spec_json, sgc_raster** out) {
  return guarded([&] {
    deref(out, "out");
    *out = nullptr;
    const sgc::SceneSpec spec = spec_json ? sgc::scene_spec_from_json(spec_json) : sgc::SceneSpec{};
    *out = new sgc_raster{sgc::synth_scene(spec)};
  });
}

sgc_status sgc_degrade(const sgc_raster* clean, const char* spec_json, sgc_raster** degraded,
                       sgc_raster** shadow_mask, sgc_raster** glint_mask) {
  return guarded([&] {
    deref(degraded, "degraded");
    *degraded = nullptr;
    if (shadow_mask) *shadow_mask = nullptr;
    if (glint_mask) *glint_mask = nullptr;
    const sgc::DegradeSpec spec = spec_json ? sgc::degrade_spec_from_json(spec_json) : sgc::DegradeSpec{};
    sgc::Degraded d = sgc::synth_degrade(deref(clean, "clean").value, spec);
    auto* out = new sgc_raster{std::move(d.degraded)};
    if (shadow_mask) *shadow_mask = new sgc_raster{std::move(d.shadow_mask)};
    if (glint_mask) *glint_mask = new sgc_raster{std::move(d.glint_mask)};
    *degraded = out;
  });
}

// Datasets -------------------------------------------------------------------

sgc_status sgc_dataset_build(const sgc_raster* scene, const char* spec_json, sgc_dataset** out) {
  return guarded([&] {
    deref(out, "out");
    *out = nullptr;
    const sgc::DatasetSpec spec = spec_json ? sgc::dataset_spec_from_json(spec_json) : sgc::DatasetSpec{};
    *out = new sgc_dataset{sgc::build_dataset(deref(scene, "scene").value, spec)};
  });
}

sgc_status sgc_dataset_load(const char* manifest_path, sgc_dataset** out) {
  return guarded([&] {
    deref(out, "out");
    *out = nullptr;
    *out = new sgc_dataset{sgc::read_dataset(&deref(manifest_path, "manifest_path")).dataset};
  });
}

sgc_status sgc_dataset_write(const sgc_dataset* dataset, uint32_t k, uint64_t seed, const char* dir) {
  return guarded([&] {
    const auto& ds = deref(dataset, "dataset").value;
    sgc::write_dataset(ds, sgc::kfold_split(ds.pairs, k, seed), &deref(dir, "dir"));
  });
}

sgc_status sgc_dataset_size(const sgc_dataset* dataset, size_t* pairs) {
  return guarded([&] { deref(pairs, "pairs") = deref(dataset, "dataset").value.pairs.size(); });
}

sgc_status sgc_dataset_stats(const sgc_dataset* dataset, char** stats_json) {
  return guarded([&] {
    deref(stats_json, "stats_json") = dup_string(sgc::stats_to_json(deref(dataset, "dataset").value.scene_stats));
  });
}

void sgc_dataset_free(sgc_dataset* dataset) { delete dataset; }

// Models ---------------------------------------------------------------------

sgc_status sgc_model_create(const char* config_json, sgc_model** out) {
  return guarded([&] {
    deref(out, "out");
    *out = nullptr;
    const sgc::UNetConfig cfg = config_json ? sgc::unet_config_from_json(config_json) : sgc::UNetConfig::tiny();
    *out = new sgc_model{sgc::UNetModel<float>(cfg)};
  });
}

sgc_status sgc_model_load(const char* path, sgc_model** out) {
  return guarded([&] {
    deref(out, "out");
    *out = nullptr;
    *out = new sgc_model{sgc::load_weights(&deref(path, "path"))};
  });
}

sgc_status sgc_model_save(const sgc_model* model, const char* path) {
  return guarded([&] { sgc::save_weights(deref(model, "model").value, &deref(path, "path")); });
}

sgc_status sgc_model_config(const sgc_model* model, char** config_json) {
  return guarded([&] {
    deref(config_json, "config_json") = dup_string(sgc::to_json(deref(model, "model").value.config()));
  });
}

sgc_status sgc_model_parameter_count(const sgc_model* model, size_t* count) {
  return guarded([&] { deref(count, "count") = deref(model, "model").value.parameter_count(); });
}

sgc_status sgc_model_forward(const sgc_model* model, const float* input, size_t n, float* output) {
  return guarded([&] {
    const auto& m = deref(model, "model").value;
    deref(input, "input");
    deref(output, "output");
    const auto& c = m.config();
    const sgc::ad::Shape shape{n, c.input_channels, c.input_size, c.input_size};
    const std::size_t count = sgc::ad::shape_numel(shape);
    sgc::ad::NoGradGuard guard;
    const auto y = m.forward(sgc::ad::Var<float>::constant(
        sgc::ad::Tensor<float>(shape, std::vector<float>(input, input + count))));
    std::copy(y.value().data().begin(), y.value().data().end(), output);
  });
}

void sgc_model_free(sgc_model* model) { delete model; }

// Training -------------------------------------------------------------------

sgc_status sgc_train(const sgc_dataset* dataset, const char* config_json, sgc_model** model, char** stats_json,
                     char** trace_csv) {
  return guarded([&] {
    deref(model, "model");
    *model = nullptr;
    if (stats_json) *stats_json = nullptr;
    if (trace_csv) *trace_csv = nullptr;
    const auto& ds = deref(dataset, "dataset").value;
    const sgc::TrainConfig cfg = config_json ? sgc::train_config_from_json(config_json) : sgc::TrainConfig{};
    sgc::TrainResult result = sgc::train(all_pairs(ds), cfg);
    std::string trace = "epoch,train_loss\n";
    for (std::size_t e = 0; e < result.trace.train_loss.size(); ++e) {
      trace += std::to_string(e + 1) + "," + sgc::format_full(result.trace.train_loss[e]) + "\n";
    }
    const std::string stats = sgc::stats_to_json(sgc::compose_stats(ds.scene_stats, result.stats));
    char* s = stats_json ? dup_string(stats) : nullptr;
    char* t = trace_csv ? dup_string(trace) : nullptr;
    *model = new sgc_model{std::move(result.model)};
    if (stats_json) *stats_json = s;
    if (trace_csv) *trace_csv = t;
  });
}

sgc_status sgc_cross_validate(const sgc_dataset* dataset, const char* config_json, uint32_t k, const char* losses,
                              uint32_t workers, sgc_progress_fn progress, void* user, sgc_cv** out) {
  return guarded([&] {
    deref(out, "out");
    *out = nullptr;
    const auto& ds = deref(dataset, "dataset").value;
    const sgc::TrainConfig cfg = config_json ? sgc::train_config_from_json(config_json) : sgc::TrainConfig{};
    sgc::CvOptions options;
    options.k = k;
    options.losses = parse_losses(losses);
    options.workers = workers;
    if (progress) {
      options.on_fold_done = [&](const sgc::FoldResult& f) {
        progress(sgc::loss_name(f.loss), static_cast<uint32_t>(f.fold), f.metrics.ssim, f.baseline.ssim, user);
      };
    }
    *out = new sgc_cv{sgc::cross_validate(ds.pairs, cfg, options)};
  });
}

sgc_status sgc_cv_write(const sgc_cv* cv, const char* dir) {
  return guarded([&] { sgc::write_cv_results(deref(cv, "cv").value, &deref(dir, "dir")); });
}

sgc_status sgc_cv_load(const char* dir, sgc_cv** out) {
  return guarded([&] {
    deref(out, "out");
    *out = nullptr;
    *out = new sgc_cv{sgc::read_cv_results(&deref(dir, "dir"))};
  });
}

sgc_status sgc_cv_summary(const sgc_cv* cv, const char* loss, const char* metric, double* mean, double* stddev) {
  return guarded([&] {
    const std::size_t m = metric_index(metric);
    const auto s = deref(cv, "cv").value.summary(sgc::parse_loss(&deref(loss, "loss")));
    if (mean) *mean = sgc::metric_value(s.mean, m);
    if (stddev) *stddev = sgc::metric_value(s.stddev, m);
  });
}

sgc_status sgc_cv_fold_metric(const sgc_cv* cv, const char* loss, uint32_t fold, const char* metric, double* value,
                              double* baseline) {
  return guarded([&] {
    const std::size_t m = metric_index(metric);
    const sgc::LossKind kind = sgc::parse_loss(&deref(loss, "loss"));
    for (const sgc::FoldResult* f : deref(cv, "cv").value.for_loss(kind)) {
      if (f->fold != fold) continue;
      if (value) *value = sgc::metric_value(f->metrics, m);
      if (baseline) *baseline = sgc::metric_value(f->baseline, m);
      return;
    }
    throw sgc::IndexError("no fold " + std::to_string(fold) + " recorded for " + loss);
  });
}

sgc_status sgc_report_emit(const sgc_cv* cv, const char* dir) {
  return guarded([&] { sgc::emit_report(deref(cv, "cv").value, &deref(dir, "dir")); });
}

void sgc_cv_free(sgc_cv* cv) { delete cv; }

sgc_status sgc_correct(const sgc_model* model, const sgc_raster* raster, const char* stats_json, uint32_t stride,
                       sgc_raster** out) {
  return guarded([&] {
    deref(out, "out");
    *out = nullptr;
    const sgc::NormalizationStats stats = sgc::stats_from_json(&deref(stats_json, "stats_json"));
    *out = new sgc_raster{
        sgc::correct_raster(deref(model, "model").value, deref(raster, "raster").value, stats, stride)};
  });
}

}  // extern "C"

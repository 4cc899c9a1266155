// Command-line front end over the C API.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 data error,
// 4 training error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "sgc/sgc.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTraining = 4;

struct Failure {
  int code;
};

int exit_code(sgc_status s) {
  switch (s) {
    case SGC_OK: return 0;
    case SGC_ERR_CONFIG:
    case SGC_ERR_ARGUMENT: return kExitConfig;
    case SGC_ERR_TRAINING:
    case SGC_ERR_STATE: return kExitTraining;
    default: return kExitData;
  }
}

void check(sgc_status s, const std::string& what) {
  if (s == SGC_OK) return;
  std::cerr << "sgc: " << what << ": " << sgc_status_name(s) << ": " << sgc_last_error() << "\n";
  throw Failure{exit_code(s)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "sgc: cannot read " << path << "\n";
    throw Failure{kExitConfig};
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "sgc: cannot write " << path << "\n";
    throw Failure{kExitData};
  }
}

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  try {
    auto j = nlohmann::json::parse(slurp(path));
    if (!j.is_object()) throw nlohmann::json::type_error::create(302, "config root must be an object", nullptr);
    return j;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "sgc: " << path << ": " << e.what() << "\n";
    throw Failure{kExitConfig};
  }
}

// RAII wrappers over the C handles.
template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
};
using Raster = Handle<sgc_raster, sgc_raster_free>;
using Dataset = Handle<sgc_dataset, sgc_dataset_free>;
using Model = Handle<sgc_model, sgc_model_free>;
using Cv = Handle<sgc_cv, sgc_cv_free>;

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { sgc_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

// Training flags shared by `train` and `cv`; unset flags leave the config file alone.
struct TrainFlags {
  std::string config;
  std::string loss;
  int epochs = -1;
  int batch = -1;
  double lr = -1.0;
  long long seed = -1;

  void attach(CLI::App* app, bool with_loss) {
    app->add_option("--config", config, "JSON file with TrainConfig fields (unet nested)");
    if (with_loss) app->add_option("--loss", loss, "bce, cce, mse, mae or mape");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--batch", batch, "mini-batch size");
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--seed", seed, "seed for initialisation, shuffling and folds");
  }

  std::string json() const {
    nlohmann::json j = load_config(config);
    if (!loss.empty()) j["loss"] = loss;
    if (epochs >= 0) j["epochs"] = epochs;
    if (batch >= 0) j["batch_size"] = batch;
    if (lr >= 0.0) j["learning_rate"] = lr;
    if (seed >= 0) j["seed"] = seed;
    return j.dump();
  }
};

void progress(const char* loss, uint32_t fold, double ssim, double baseline, void*) {
  std::fprintf(stderr, "  %-4s fold %2u  ssim %.4f  (uncorrected %.4f)\n", loss, fold, ssim, baseline);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cloud-shadow and sun-glint correction for 5-band imagery"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sgc_version()));

  // scene
  std::string scene_out, scene_config, scene_pgm;
  auto* scene = app.add_subcommand("scene", "synthesize a clean 5-band pond raster");
  scene->add_option("--output,-o", scene_out, "MBRF output path")->required();
  scene->add_option("--config", scene_config, "JSON with width, height, seed");
  scene->add_option("--pgm", scene_pgm, "also write each band as <prefix>_bandN.pgm");

  // synth
  std::string synth_in, synth_config, synth_out, synth_shadow, synth_glint;
  auto* synth = app.add_subcommand("synth", "degrade a clean raster with shadows and glint");
  synth->add_option("--input,-i", synth_in, "clean MBRF raster, values in [0,1]")->required();
  synth->add_option("--config", synth_config, "DegradeSpec JSON");
  synth->add_option("--output,-o", synth_out, "degraded MBRF output")->required();
  synth->add_option("--shadow-mask", synth_shadow, "shadow mask MBRF output");
  synth->add_option("--glint-mask", synth_glint, "glint mask MBRF output");

  // dataset
  std::string ds_scene, ds_config, ds_out;
  unsigned ds_k = 10;
  unsigned long long ds_seed = 1;
  auto* dataset = app.add_subcommand("dataset", "build paired patches and a manifest");
  dataset->add_option("--scene", ds_scene, "clean MBRF scene (synthesized when omitted)");
  dataset->add_option("--config", ds_config, "DatasetSpec JSON");
  dataset->add_option("--out-dir,-o", ds_out, "output directory")->required();
  dataset->add_option("--k", ds_k, "folds recorded in the manifest");
  dataset->add_option("--seed", ds_seed, "fold assignment seed");

  // train
  std::string train_manifest, train_weights, train_stats, train_trace;
  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "train one model on every pair of a dataset");
  train->add_option("--manifest,-m", train_manifest, "dataset manifest.csv")->required();
  train_flags.attach(train, true);
  train->add_option("--weights,-o", train_weights, "weights output path")->required();
  train->add_option("--stats", train_stats, "normalization stats output (default <weights>.stats.json)");
  train->add_option("--trace", train_trace, "per-epoch loss CSV output");

  // cv
  std::string cv_manifest, cv_out, cv_losses = "bce,cce,mse,mae,mape";
  unsigned cv_k = 10, cv_workers = 1;
  TrainFlags cv_flags;
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation over several losses");
  cv->add_option("--manifest,-m", cv_manifest, "dataset manifest.csv")->required();
  cv->add_option("--k", cv_k, "number of folds");
  cv->add_option("--losses", cv_losses, "comma-separated loss list");
  cv->add_option("--workers", cv_workers, "parallel training jobs");
  cv->add_option("--out-dir,-o", cv_out, "results directory")->required();
  cv_flags.attach(cv, false);

  // correct
  std::string cor_weights, cor_in, cor_out, cor_stats;
  unsigned cor_stride = 100;
  auto* correct = app.add_subcommand("correct", "correct a full raster with a trained model");
  correct->add_option("--weights,-w", cor_weights, "weights file")->required();
  correct->add_option("--input,-i", cor_in, "MBRF raster to correct")->required();
  correct->add_option("--output,-o", cor_out, "corrected MBRF output")->required();
  correct->add_option("--stride", cor_stride, "window stride in pixels");
  correct->add_option("--stats", cor_stats, "normalization stats (default <weights>.stats.json)");

  // report
  std::string rep_in, rep_out;
  auto* report = app.add_subcommand("report", "tables and plots from cross-validation results");
  report->add_option("--input,-i", rep_in, "directory written by cv")->required();
  report->add_option("--out-dir,-o", rep_out, "report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*scene) {
      std::string spec;
      if (!scene_config.empty()) spec = slurp(scene_config);
      Raster r;
      check(sgc_scene_synthesize(scene_config.empty() ? nullptr : spec.c_str(), r.out()), "scene");
      check(sgc_raster_save(r.p, scene_out.c_str()), "save " + scene_out);
      if (!scene_pgm.empty()) {
        uint32_t bands = 0;
        check(sgc_raster_shape(r.p, nullptr, nullptr, &bands), "shape");
        for (uint32_t b = 0; b < bands; ++b) {
          const std::string path = scene_pgm + "_band" + std::to_string(b) + ".pgm";
          check(sgc_raster_export_pgm(r.p, b, path.c_str()), "export " + path);
        }
      }
    } else if (*synth) {
      std::string spec;
      if (!synth_config.empty()) spec = slurp(synth_config);
      Raster clean, degraded, shadow, glint;
      check(sgc_raster_load(synth_in.c_str(), clean.out()), "load " + synth_in);
      check(sgc_degrade(clean.p, synth_config.empty() ? nullptr : spec.c_str(), degraded.out(), shadow.out(),
                        glint.out()),
            "synth");
      check(sgc_raster_save(degraded.p, synth_out.c_str()), "save " + synth_out);
      if (!synth_shadow.empty()) check(sgc_raster_save(shadow.p, synth_shadow.c_str()), "save " + synth_shadow);
      if (!synth_glint.empty()) check(sgc_raster_save(glint.p, synth_glint.c_str()), "save " + synth_glint);
    } else if (*dataset) {
      Raster s;
      if (ds_scene.empty()) {
        check(sgc_scene_synthesize(nullptr, s.out()), "scene");
      } else {
        check(sgc_raster_load(ds_scene.c_str(), s.out()), "load " + ds_scene);
      }
      std::string spec;
      if (!ds_config.empty()) spec = slurp(ds_config);
      Dataset d;
      check(sgc_dataset_build(s.p, ds_config.empty() ? nullptr : spec.c_str(), d.out()), "dataset");
      check(sgc_dataset_write(d.p, ds_k, ds_seed, ds_out.c_str()), "write " + ds_out);
      size_t n = 0;
      check(sgc_dataset_size(d.p, &n), "size");
      std::cerr << "wrote " << n << " pairs to " << ds_out << "\n";
    } else if (*train) {
      Dataset d;
      check(sgc_dataset_load(train_manifest.c_str(), d.out()), "load " + train_manifest);
      Model m;
      OwnedString stats, trace;
      check(sgc_train(d.p, train_flags.json().c_str(), m.out(), &stats.p, &trace.p), "train");
      check(sgc_model_save(m.p, train_weights.c_str()), "save " + train_weights);
      spit(train_stats.empty() ? train_weights + ".stats.json" : train_stats, stats.str());
      if (!train_trace.empty()) spit(train_trace, trace.str());
      std::cout << trace.str();
    } else if (*cv) {
      Dataset d;
      check(sgc_dataset_load(cv_manifest.c_str(), d.out()), "load " + cv_manifest);
      Cv result;
      check(sgc_cross_validate(d.p, cv_flags.json().c_str(), cv_k, cv_losses.c_str(), cv_workers, progress, nullptr,
                               result.out()),
            "cv");
      check(sgc_cv_write(result.p, cv_out.c_str()), "write " + cv_out);
    } else if (*correct) {
      Model m;
      check(sgc_model_load(cor_weights.c_str(), m.out()), "load " + cor_weights);
      const std::string stats = slurp(cor_stats.empty() ? cor_weights + ".stats.json" : cor_stats);
      Raster in, out;
      check(sgc_raster_load(cor_in.c_str(), in.out()), "load " + cor_in);
      check(sgc_correct(m.p, in.p, stats.c_str(), cor_stride, out.out()), "correct");
      check(sgc_raster_save(out.p, cor_out.c_str()), "save " + cor_out);
    } else if (*report) {
      Cv result;
      check(sgc_cv_load(rep_in.c_str(), result.out()), "load " + rep_in);
      check(sgc_report_emit(result.p, rep_out.c_str()), "report");
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}

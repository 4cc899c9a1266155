// Exercises the shared library through the public C header only.
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgc/sgc.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sgc_test_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  sgc_string_free(s);
  return out;
}

const char* kDatasetSpec = R"({"counts":[3,3,2],"patch_size":32,"seed":4})";
const char* kTrain = R"({"epochs":2,"batch_size":4,"unet":{"input_size":32}})";

sgc_dataset* small_dataset() {
  sgc_raster* scene = nullptr;
  REQUIRE(sgc_scene_synthesize(R"({"width":500,"height":500,"seed":3})", &scene) == SGC_OK);
  sgc_dataset* d = nullptr;
  REQUIRE(sgc_dataset_build(scene, kDatasetSpec, &d) == SGC_OK);
  sgc_raster_free(scene);
  return d;
}

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::strlen(sgc_version()) > 0);
  CHECK(std::string(sgc_status_name(SGC_OK)) == "ok");
  CHECK(std::string(sgc_status_name(SGC_ERR_SHAPE)) != std::string(sgc_status_name(SGC_ERR_FORMAT)));
  sgc_raster* r = nullptr;
  CHECK(sgc_raster_load("/nonexistent/file.mbrf", &r) == SGC_ERR_IO);
  CHECK(r == nullptr);
  CHECK(std::string(sgc_last_error()).find("nonexistent") != std::string::npos);
  CHECK(sgc_raster_create(2, 2, 1, nullptr, nullptr) == SGC_ERR_ARGUMENT);
  CHECK(sgc_raster_create(0, 2, 1, nullptr, &r) == SGC_ERR_SHAPE);
  sgc_raster_free(nullptr);
  sgc_model_free(nullptr);
  sgc_dataset_free(nullptr);
  sgc_cv_free(nullptr);
}

TEST_CASE("raster round trip") {
  const fs::path dir = scratch("raster");
  const float data[6] = {0.0f, 0.25f, 0.5f, 0.75f, 1.0f, -2.0f};
  sgc_raster* r = nullptr;
  REQUIRE(sgc_raster_create(3, 1, 2, data, &r) == SGC_OK);
  uint32_t w = 0, h = 0, b = 0;
  CHECK(sgc_raster_shape(r, &w, &h, &b) == SGC_OK);
  CHECK((w == 3 && h == 1 && b == 2));
  const std::string path = (dir / "r.mbrf").string();
  CHECK(sgc_raster_save(r, path.c_str()) == SGC_OK);
  sgc_raster* back = nullptr;
  REQUIRE(sgc_raster_load(path.c_str(), &back) == SGC_OK);
  float out[6] = {};
  CHECK(sgc_raster_read(back, out, 6) == SGC_OK);
  CHECK(std::memcmp(out, data, sizeof data) == 0);
  CHECK(sgc_raster_read(back, out, 5) == SGC_ERR_CAPACITY);
  CHECK(sgc_raster_export_pgm(back, 1, (dir / "b.pgm").string().c_str()) == SGC_OK);
  CHECK(sgc_raster_export_pgm(back, 2, (dir / "c.pgm").string().c_str()) == SGC_ERR_INDEX);
  const float bad[1] = {NAN};
  sgc_raster* nan_raster = nullptr;
  CHECK(sgc_raster_create(1, 1, 1, bad, &nan_raster) == SGC_ERR_DATA);
  sgc_raster_free(r);
  sgc_raster_free(back);
  fs::remove_all(dir);
}

TEST_CASE("degradation through the api") {
  sgc_raster* scene = nullptr;
  REQUIRE(sgc_scene_synthesize(R"({"width":200,"height":200})", &scene) == SGC_OK);
  sgc_raster *deg = nullptr, *shadow = nullptr;
  REQUIRE(sgc_degrade(scene, R"({"seed":2})", &deg, &shadow, nullptr) == SGC_OK);
  uint32_t w, h, b;
  sgc_raster_shape(shadow, &w, &h, &b);
  CHECK(b == 1);
  CHECK(sgc_degrade(scene, R"({"bogus":1})", &deg, nullptr, nullptr) == SGC_ERR_CONFIG);
  sgc_raster_free(deg);
  sgc_raster_free(shadow);
  sgc_raster_free(scene);
}

TEST_CASE("models") {
  sgc_model* m = nullptr;
  REQUIRE(sgc_model_create(R"({"input_size":16,"depth":1,"base_channels":2})", &m) == SGC_OK);
  size_t n = 0;
  CHECK(sgc_model_parameter_count(m, &n) == SGC_OK);
  CHECK(n > 0);
  std::vector<float> in(2 * 5 * 16 * 16, 0.3f), out(in.size());
  CHECK(sgc_model_forward(m, in.data(), 2, out.data()) == SGC_OK);
  for (float v : out) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
  const fs::path dir = scratch("model");
  const std::string path = (dir / "m.unw").string();
  CHECK(sgc_model_save(m, path.c_str()) == SGC_OK);
  sgc_model* back = nullptr;
  REQUIRE(sgc_model_load(path.c_str(), &back) == SGC_OK);
  std::vector<float> again(in.size());
  CHECK(sgc_model_forward(back, in.data(), 2, again.data()) == SGC_OK);
  CHECK(again == out);
  char* cfg = nullptr;
  CHECK(sgc_model_config(back, &cfg) == SGC_OK);
  CHECK(nlohmann::json::parse(take(cfg)).at("depth") == 1);
  CHECK(sgc_model_create(R"({"depth":0})", &m) == SGC_ERR_CONFIG);
  sgc_model_free(m);
  sgc_model_free(back);
  fs::remove_all(dir);
}

TEST_CASE("dataset, training, cross-validation and correction") {
  sgc_dataset* d = small_dataset();
  size_t pairs = 0;
  CHECK(sgc_dataset_size(d, &pairs) == SGC_OK);
  CHECK(pairs == 8);

  const fs::path dir = scratch("flow");
  CHECK(sgc_dataset_write(d, 2, 0, (dir / "data").string().c_str()) == SGC_OK);
  sgc_dataset* loaded = nullptr;
  REQUIRE(sgc_dataset_load((dir / "data" / "manifest.csv").string().c_str(), &loaded) == SGC_OK);
  CHECK(sgc_dataset_size(loaded, &pairs) == SGC_OK);
  CHECK(pairs == 8);

  sgc_model* m = nullptr;
  char *stats = nullptr, *trace = nullptr;
  REQUIRE(sgc_train(loaded, kTrain, &m, &stats, &trace) == SGC_OK);
  const std::string trace_text = take(trace);
  CHECK(trace_text.rfind("epoch,train_loss\n", 0) == 0);
  const std::string stats_text = take(stats);
  CHECK(stats_text.find("\"min\"") != std::string::npos);

  sgc_raster* scene = nullptr;
  REQUIRE(sgc_scene_synthesize(R"({"width":260,"height":230})", &scene) == SGC_OK);
  sgc_raster* fixed = nullptr;
  REQUIRE(sgc_correct(m, scene, stats_text.c_str(), 100, &fixed) == SGC_OK);
  uint32_t w, h, b;
  sgc_raster_shape(fixed, &w, &h, &b);
  CHECK((w == 260 && h == 230 && b == 5));
  CHECK(sgc_correct(m, scene, "{}", 100, &fixed) == SGC_ERR_FORMAT);

  struct Seen {
    int calls = 0;
  } seen;
  auto progress = [](const char*, uint32_t, double ssim, double, void* user) {
    CHECK(ssim >= 0.0);
    static_cast<Seen*>(user)->calls++;
  };
  sgc_cv* cv = nullptr;
  REQUIRE(sgc_cross_validate(loaded, kTrain, 2, "mse,mae", 1, progress, &seen, &cv) == SGC_OK);
  CHECK(seen.calls == 4);
  double mean = 0, sd = 0, value = 0, base = 0;
  CHECK(sgc_cv_summary(cv, "mse", "ssim", &mean, &sd) == SGC_OK);
  CHECK(sgc_cv_fold_metric(cv, "mae", 1, "rmse", &value, &base) == SGC_OK);
  CHECK(value > 0.0);
  CHECK(sgc_cv_summary(cv, "bce", "ssim", &mean, &sd) == SGC_ERR_CAPACITY);
  CHECK(sgc_cv_summary(cv, "mse", "psnr", &mean, &sd) == SGC_ERR_CONFIG);
  sgc_cv* rejected = nullptr;
  CHECK(sgc_cross_validate(loaded, kTrain, 2, "mse,huber", 1, nullptr, nullptr, &rejected) == SGC_ERR_CONFIG);
  CHECK(rejected == nullptr);

  CHECK(sgc_cv_write(cv, (dir / "cv").string().c_str()) == SGC_OK);
  sgc_cv* back = nullptr;
  REQUIRE(sgc_cv_load((dir / "cv").string().c_str(), &back) == SGC_OK);
  double again = 0;
  CHECK(sgc_cv_fold_metric(back, "mae", 1, "rmse", &again, &base) == SGC_OK);
  CHECK(again == value);
  CHECK(sgc_report_emit(back, (dir / "report").string().c_str()) == SGC_OK);
  CHECK(fs::exists(dir / "report" / "table.csv"));

  sgc_cv_free(cv);
  sgc_cv_free(back);
  sgc_raster_free(scene);
  sgc_raster_free(fixed);
  sgc_model_free(m);
  sgc_dataset_free(loaded);
  sgc_dataset_free(d);
  fs::remove_all(dir);
}

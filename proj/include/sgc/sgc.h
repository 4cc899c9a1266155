/* C interface to the shadow/glint correction library.
 *
 * Every object is an opaque handle created by a *_create / *_load / builder
 * call and released with the matching *_free (NULL is accepted). Calls return
 * an sgc_status; on failure sgc_last_error() describes the problem. The error
 * text is per thread and stays valid until the next failing call on that
 * thread.
 *
 * Strings returned through char** out-parameters are owned by the caller and
 * released with sgc_string_free.
 */
#ifndef SGC_SGC_H
#define SGC_SGC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SGC_BUILDING)
#    define SGC_API __declspec(dllexport)
#  else
#    define SGC_API __declspec(dllimport)
#  endif
#else
#  define SGC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgc_status {
  SGC_OK = 0,
  SGC_ERR_SHAPE = 1,
  SGC_ERR_FORMAT = 2,
  SGC_ERR_IO = 3,
  SGC_ERR_DATA = 4,
  SGC_ERR_INDEX = 5,
  SGC_ERR_STATE = 6,
  SGC_ERR_DOMAIN = 7,
  SGC_ERR_CONFIG = 8,
  SGC_ERR_CAPACITY = 9,
  SGC_ERR_TRAINING = 10,
  SGC_ERR_ARGUMENT = 11, /* NULL handle or out-pointer, bad enum value */
  SGC_ERR_INTERNAL = 12
} sgc_status;

SGC_API const char* sgc_version(void);
SGC_API const char* sgc_status_name(sgc_status status);
SGC_API const char* sgc_last_error(void);
SGC_API void sgc_string_free(char* s);

/* Rasters: width x height x bands, f32, band-major. */
typedef struct sgc_raster sgc_raster;

/* data may be NULL (zero fill); otherwise width*height*bands finite floats. */
SGC_API sgc_status sgc_raster_create(uint32_t width, uint32_t height, uint32_t bands, const float* data,
                                     sgc_raster** out);
SGC_API sgc_status sgc_raster_load(const char* path, sgc_raster** out);
SGC_API sgc_status sgc_raster_save(const sgc_raster* raster, const char* path);
SGC_API sgc_status sgc_raster_shape(const sgc_raster* raster, uint32_t* width, uint32_t* height, uint32_t* bands);
/* Copies all samples; capacity is the length of dst in floats. */
SGC_API sgc_status sgc_raster_read(const sgc_raster* raster, float* dst, size_t capacity);
SGC_API sgc_status sgc_raster_export_pgm(const sgc_raster* raster, uint32_t band, const char* path);
SGC_API void sgc_raster_free(sgc_raster* raster);

/* spec_json may be NULL for defaults: {"width", "height", "seed"}. */
SGC_API sgc_status sgc_scene_synthesize(const char* spec_json, sgc_raster** out);
/* Clean raster with values in [0,1] plus a degradation spec (JSON, NULL for
 * defaults). Mask outputs may be NULL when not wanted. */
SGC_API sgc_status sgc_degrade(const sgc_raster* clean, const char* spec_json, sgc_raster** degraded,
                               sgc_raster** shadow_mask, sgc_raster** glint_mask);

/* Paired datasets. */
typedef struct sgc_dataset sgc_dataset;

SGC_API sgc_status sgc_dataset_build(const sgc_raster* scene, const char* spec_json, sgc_dataset** out);
SGC_API sgc_status sgc_dataset_load(const char* manifest_path, sgc_dataset** out);
/* Writes manifest.csv, scene_stats.json and the pair rasters; the fold column
 * comes from a stratified k-fold split with the given seed. */
SGC_API sgc_status sgc_dataset_write(const sgc_dataset* dataset, uint32_t k, uint64_t seed, const char* dir);
SGC_API sgc_status sgc_dataset_size(const sgc_dataset* dataset, size_t* pairs);
/* Per-band min/max mapping physical values into dataset space, as JSON. */
SGC_API sgc_status sgc_dataset_stats(const sgc_dataset* dataset, char** stats_json);
SGC_API void sgc_dataset_free(sgc_dataset* dataset);

/* Models. */
typedef struct sgc_model sgc_model;

/* config_json: UNetConfig fields; NULL gives the small preset. */
SGC_API sgc_status sgc_model_create(const char* config_json, sgc_model** out);
SGC_API sgc_status sgc_model_load(const char* path, sgc_model** out);
SGC_API sgc_status sgc_model_save(const sgc_model* model, const char* path);
SGC_API sgc_status sgc_model_config(const sgc_model* model, char** config_json);
SGC_API sgc_status sgc_model_parameter_count(const sgc_model* model, size_t* count);
/* input and output hold n * channels * size * size floats. */
SGC_API sgc_status sgc_model_forward(const sgc_model* model, const float* input, size_t n, float* output);
SGC_API void sgc_model_free(sgc_model* model);

/* Training. config_json holds TrainConfig fields (NULL for defaults).
 * stats_json receives the statistics mapping physical values into model
 * space; trace_csv receives "epoch,train_loss". Either may be NULL. */
SGC_API sgc_status sgc_train(const sgc_dataset* dataset, const char* config_json, sgc_model** model,
                             char** stats_json, char** trace_csv);

/* Cross-validation. */
typedef struct sgc_cv sgc_cv;

/* Called after each (loss, fold) job finishes; calls never overlap. */
typedef void (*sgc_progress_fn)(const char* loss, uint32_t fold, double ssim, double baseline_ssim, void* user);

/* losses: comma-separated list of bce,cce,mse,mae,mape (NULL for all five). */
SGC_API sgc_status sgc_cross_validate(const sgc_dataset* dataset, const char* config_json, uint32_t k,
                                      const char* losses, uint32_t workers, sgc_progress_fn progress, void* user,
                                      sgc_cv** out);
/* folds.csv, baseline.csv and traces.csv. */
SGC_API sgc_status sgc_cv_write(const sgc_cv* cv, const char* dir);
SGC_API sgc_status sgc_cv_load(const char* dir, sgc_cv** out);
/* Mean and sample standard deviation of one metric for one loss. */
SGC_API sgc_status sgc_cv_summary(const sgc_cv* cv, const char* loss, const char* metric, double* mean,
                                  double* stddev);
SGC_API sgc_status sgc_cv_fold_metric(const sgc_cv* cv, const char* loss, uint32_t fold, const char* metric,
                                      double* value, double* baseline);
/* Table, per-fold CSV, boxplots and training curves. */
SGC_API sgc_status sgc_report_emit(const sgc_cv* cv, const char* dir);
SGC_API void sgc_cv_free(sgc_cv* cv);

/* Full-raster correction; stats_json maps the raster's values into model space. */
SGC_API sgc_status sgc_correct(const sgc_model* model, const sgc_raster* raster, const char* stats_json,
                               uint32_t stride, sgc_raster** out);

#ifdef __cplusplus
}
#endif

#endif

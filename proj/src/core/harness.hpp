#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "data.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "optim.hpp"
#include "unet.hpp"

namespace sgc {

struct TrainConfig {
  LossKind loss = LossKind::binary_cross_entropy;
  std::uint32_t epochs = 30;
  std::uint32_t batch_size = 8;
  double learning_rate = 1e-3;
  ad::OptimizerKind optimizer = ad::OptimizerKind::adam;
  std::uint64_t seed = 0;  // drives the per-epoch shuffles
  UNetConfig unet = UNetConfig::tiny();

  void validate() const;
};

struct TrainingTrace {
  std::vector<double> train_loss;  // epoch mean, weighted by batch size
  std::vector<double> val_loss;    // empty when no validation pairs were given
  std::vector<double> val_ssim;
};

struct TrainResult {
  UNetModel<float> model;
  TrainingTrace trace;
  // Refit on the training pairs only; maps dataset values into model space.
  NormalizationStats stats;
};

using PairRefs = std::vector<const PatchPair*>;

// Band-wise min/max over the degraded and clean members of `pairs`.
NormalizationStats fit_pair_stats(const PairRefs& pairs);

// Stats that map physical values straight into model space when `outer`
// takes physical values to dataset space and `inner` dataset to model space.
NormalizationStats compose_stats(const NormalizationStats& outer, const NormalizationStats& inner);

TrainResult train(const PairRefs& pairs, const TrainConfig& config, const PairRefs& validation = {});

// Metrics computed per pair (prediction vs clean in model space), then averaged.
MetricReport evaluate(const UNetModel<float>& model, const PairRefs& pairs, const NormalizationStats& stats);
// Same, with the degraded input standing in for the prediction.
MetricReport evaluate_baseline(const PairRefs& pairs, const NormalizationStats& stats);

struct FoldResult {
  LossKind loss = LossKind::binary_cross_entropy;
  std::size_t fold = 0;
  MetricReport metrics;
  MetricReport baseline;
  TrainingTrace trace;
};

struct MetricSummary {
  MetricReport mean;
  MetricReport stddev;  // sample standard deviation, n - 1 denominator
};

struct CvReport {
  std::size_t k = 0;
  std::vector<LossKind> losses;
  std::vector<FoldResult> folds;  // loss-major, folds ascending

  std::vector<const FoldResult*> for_loss(LossKind loss) const;
  MetricSummary summary(LossKind loss) const;
};

double sample_mean(std::span<const double> xs);
double sample_stddev(std::span<const double> xs);

struct CvOptions {
  std::size_t k = 10;
  std::vector<LossKind> losses = {kAllLosses.begin(), kAllLosses.end()};
  std::size_t workers = 1;
  // Invoked once per finished (loss, fold) job, serialised by the harness.
  std::function<void(const FoldResult&)> on_fold_done;
};

// One fresh model per (loss, fold), seeded from (base.seed, loss name, fold).
// Results do not depend on the worker count.
CvReport cross_validate(const std::vector<PatchPair>& pairs, const TrainConfig& base, const CvOptions& options);

// Physical raster in, physical raster out; `stats` maps physical values into
// model space. Windows of 200 px at `stride`, edges always covered.
MultibandRaster correct_raster(const UNetModel<float>& model, const MultibandRaster& raster,
                               const NormalizationStats& stats, std::size_t stride);

}  // namespace sgc

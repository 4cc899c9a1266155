#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "errors.hpp"

namespace sgc {

using ad::Tensor;
using ad::Var;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  unet.validate();
}

NormalizationStats fit_pair_stats(const PairRefs& pairs) {
  if (pairs.empty()) throw CapacityError("cannot fit statistics on zero pairs");
  std::vector<const MultibandRaster*> rasters;
  for (const PatchPair* p : pairs) {
    rasters.push_back(&p->degraded);
    rasters.push_back(&p->clean);
  }
  return NormalizationStats::fit(rasters);
}

NormalizationStats compose_stats(const NormalizationStats& outer, const NormalizationStats& inner) {
  if (outer.bands() != inner.bands()) throw ShapeError("cannot compose stats with different band counts");
  std::vector<double> lo(outer.bands()), hi(outer.bands());
  for (std::size_t b = 0; b < outer.bands(); ++b) {
    const double span = outer.max(b) - outer.min(b);
    lo[b] = outer.min(b) + inner.min(b) * span;
    hi[b] = outer.min(b) + inner.max(b) * span;
  }
  return NormalizationStats(lo, hi);
}

namespace {

// [n, C, S, S] batch of normalised pairs, picked by index.
struct PairTensors {
  std::vector<float> degraded;
  std::vector<float> clean;
  std::size_t channels = 0, height = 0, width = 0;

  std::size_t plane() const { return channels * height * width; }
  std::size_t count() const { return plane() == 0 ? 0 : degraded.size() / plane(); }

  Tensor<float> gather(const std::vector<float>& src, std::span<const std::size_t> idx) const {
    Tensor<float> t({idx.size(), channels, height, width});
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(idx[i] * plane()), plane(), t.ptr() + i * plane());
    }
    return t;
  }
};

PairTensors prepare(const PairRefs& pairs, const NormalizationStats& stats) {
  PairTensors out;
  if (pairs.empty()) return out;
  out.channels = pairs[0]->degraded.bands();
  out.height = pairs[0]->degraded.height();
  out.width = pairs[0]->degraded.width();
  for (const PatchPair* p : pairs) {
    if (p->degraded.bands() != out.channels || p->degraded.height() != out.height ||
        p->degraded.width() != out.width) {
      throw ShapeError("pairs differ in shape; pair " + std::to_string(p->id) + " is the first mismatch");
    }
    const MultibandRaster d = normalize(p->degraded, stats);
    const MultibandRaster c = normalize(p->clean, stats);
    out.degraded.insert(out.degraded.end(), d.data().begin(), d.data().end());
    out.clean.insert(out.clean.end(), c.data().begin(), c.data().end());
  }
  return out;
}

void check_model_fits(const UNetConfig& unet, const PairTensors& t) {
  if (t.channels != unet.input_channels || t.height != unet.input_size || t.width != unet.input_size) {
    std::ostringstream os;
    os << "pairs are " << t.channels << "x" << t.height << "x" << t.width << " but the model expects "
       << unet.input_channels << "x" << unet.input_size << "x" << unet.input_size;
    throw ConfigError(os.str());
  }
}

constexpr std::size_t kInferenceBatch = 8;

// Forward pass without history over all pairs, batch by batch.
Tensor<float> predict(const UNetModel<float>& model, const PairTensors& t) {
  ad::NoGradGuard guard;
  Tensor<float> out({t.count(), t.channels, t.height, t.width});
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < t.count(); start += kInferenceBatch) {
    idx.clear();
    for (std::size_t i = start; i < std::min(t.count(), start + kInferenceBatch); ++i) idx.push_back(i);
    const Var<float> y = model.forward(Var<float>::constant(t.gather(t.degraded, idx)));
    std::copy(y.value().data().begin(), y.value().data().end(), out.ptr() + start * t.plane());
  }
  return out;
}

MetricReport per_pair_mean(std::span<const float> pred, const PairTensors& t) {
  if (t.count() == 0) throw CapacityError("evaluation needs at least one pair");
  std::vector<MetricReport> reports;
  reports.reserve(t.count());
  for (std::size_t i = 0; i < t.count(); ++i) {
    const ImageStack p{pred.subspan(i * t.plane(), t.plane()), t.channels, t.height, t.width};
    const ImageStack y{std::span<const float>(t.clean).subspan(i * t.plane(), t.plane()), t.channels, t.height,
                       t.width};
    reports.push_back(full_report(p, y));
  }
  return mean_report(reports);
}

}  // namespace

TrainResult train(const PairRefs& pairs, const TrainConfig& config, const PairRefs& validation) {
  config.validate();
  if (pairs.empty()) throw CapacityError("training needs at least one pair");
  NormalizationStats stats = fit_pair_stats(pairs);
  const PairTensors data = prepare(pairs, stats);
  check_model_fits(config.unet, data);
  const PairTensors val = prepare(validation, stats);

  TrainResult result{UNetModel<float>(config.unet), {}, stats};
  UNetModel<float>& model = result.model;
  ad::Optimizer<float> opt(model.parameter_vars(), config.optimizer, config.learning_rate);
  std::mt19937_64 rng(derive_seed(config.seed, "shuffle"));

  const std::size_t n = data.count();
  std::vector<std::size_t> order(n);
  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_no) {
      const std::span<const std::size_t> idx(order.data() + start, std::min<std::size_t>(config.batch_size, n - start));
      const Var<float> x = Var<float>::constant(data.gather(data.degraded, idx));
      const Var<float> y = Var<float>::constant(data.gather(data.clean, idx));
      const Var<float> loss = loss_value(config.loss, model.forward(x), y);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        std::ostringstream os;
        os << loss_name(config.loss) << " loss diverged (" << value << ") at epoch " << epoch + 1 << ", batch "
           << batch_no + 1;
        throw TrainingError(os.str());
      }
      ad::backward(loss);
      opt.step();
      total += value * static_cast<double>(idx.size());
    }
    result.trace.train_loss.push_back(total / static_cast<double>(n));

    if (val.count() > 0) {
      const Tensor<float> pred = predict(model, val);
      {
        ad::NoGradGuard guard;
        const Var<float> l = loss_value(config.loss, Var<float>::constant(pred),
                                        Var<float>::constant(Tensor<float>(pred.shape(), val.clean)));
        result.trace.val_loss.push_back(l.value().item());
      }
      result.trace.val_ssim.push_back(per_pair_mean(pred.data(), val).ssim);
    }
  }
  return result;
}

MetricReport evaluate(const UNetModel<float>& model, const PairRefs& pairs, const NormalizationStats& stats) {
  if (pairs.empty()) throw CapacityError("evaluation needs at least one pair");
  const PairTensors t = prepare(pairs, stats);
  check_model_fits(model.config(), t);
  const Tensor<float> pred = predict(model, t);
  return per_pair_mean(pred.data(), t);
}

MetricReport evaluate_baseline(const PairRefs& pairs, const NormalizationStats& stats) {
  if (pairs.empty()) throw CapacityError("evaluation needs at least one pair");
  const PairTensors t = prepare(pairs, stats);
  return per_pair_mean(t.degraded, t);
}

// Cross-validation -------------------------------------------------------------

double sample_mean(std::span<const double> xs) {
  if (xs.empty()) throw CapacityError("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::vector<const FoldResult*> CvReport::for_loss(LossKind loss) const {
  std::vector<const FoldResult*> out;
  for (const auto& f : folds) {
    if (f.loss == loss) out.push_back(&f);
  }
  return out;
}

MetricSummary CvReport::summary(LossKind loss) const {
  const auto rows = for_loss(loss);
  if (rows.empty()) throw CapacityError(std::string("no folds recorded for ") + loss_name(loss));
  MetricSummary s;
  double* mean_fields[7] = {&s.mean.accuracy, &s.mean.dice, &s.mean.mpe, &s.mean.mse,
                            &s.mean.rmse,     &s.mean.ssim, &s.mean.ms_ssim};
  double* sd_fields[7] = {&s.stddev.accuracy, &s.stddev.dice, &s.stddev.mpe,    &s.stddev.mse,
                          &s.stddev.rmse,     &s.stddev.ssim, &s.stddev.ms_ssim};
  for (std::size_t m = 0; m < 7; ++m) {
    std::vector<double> xs;
    for (const FoldResult* r : rows) xs.push_back(metric_value(r->metrics, m));
    *mean_fields[m] = sample_mean(xs);
    *sd_fields[m] = sample_stddev(xs);
  }
  return s;
}

CvReport cross_validate(const std::vector<PatchPair>& pairs, const TrainConfig& base, const CvOptions& options) {
  base.validate();
  if (options.losses.empty()) throw ConfigError("cross-validation needs at least one loss");
  if (pairs.size() < options.k) {
    throw CapacityError("cannot run " + std::to_string(options.k) + "-fold cross-validation on " +
                        std::to_string(pairs.size()) + " pairs");
  }
  const FoldAssignment folds = kfold_split(pairs, options.k, base.seed);

  CvReport report;
  report.k = options.k;
  report.losses = options.losses;
  const std::size_t jobs = options.losses.size() * options.k;
  report.folds.resize(jobs);
  std::vector<std::exception_ptr> errors(jobs);

  auto run_job = [&](std::size_t j) {
    const LossKind loss = options.losses[j / options.k];
    const std::size_t fold = j % options.k;
    TrainConfig cfg = base;
    cfg.loss = loss;
    const std::uint64_t job_seed = derive_seed(derive_seed(base.seed, loss_name(loss)), fold);
    cfg.seed = job_seed;
    cfg.unet.seed = static_cast<std::uint32_t>(derive_seed(job_seed, "init"));

    PairRefs train_set, test_set;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      (folds.fold_of[i] == fold ? test_set : train_set).push_back(&pairs[i]);
    }
    TrainResult trained = train(train_set, cfg, test_set);
    FoldResult& out = report.folds[j];
    out.loss = loss;
    out.fold = fold;
    out.metrics = evaluate(trained.model, test_set, trained.stats);
    out.baseline = evaluate_baseline(test_set, trained.stats);
    out.trace = std::move(trained.trace);
  };

  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      try {
        run_job(j);
        if (options.on_fold_done) {
          std::lock_guard lock(callback_mutex);
          options.on_fold_done(report.folds[j]);
        }
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, jobs);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return report;
}

// Full-raster correction -----------------------------------------------------------

MultibandRaster correct_raster(const UNetModel<float>& model, const MultibandRaster& raster,
                               const NormalizationStats& stats, std::size_t stride) {
  const UNetConfig& cfg = model.config();
  if (raster.bands() != cfg.input_channels) {
    throw ShapeError("raster has " + std::to_string(raster.bands()) + " bands, model expects " +
                     std::to_string(cfg.input_channels));
  }
  const MultibandRaster base = normalize(raster, stats);
  std::vector<Patch> patches = extract_patches(base, kPatchWindow, stride, true);

  const std::size_t S = cfg.input_size, C = cfg.input_channels, plane = C * S * S;
  ad::NoGradGuard guard;
  for (std::size_t start = 0; start < patches.size(); start += kInferenceBatch) {
    const std::size_t count = std::min(kInferenceBatch, patches.size() - start);
    Tensor<float> x({count, C, S, S});
    for (std::size_t i = 0; i < count; ++i) {
      const MultibandRaster small = resize_bilinear(patches[start + i].raster, S, S);
      std::copy(small.data().begin(), small.data().end(), x.ptr() + i * plane);
    }
    const Var<float> y = model.forward(Var<float>::constant(std::move(x)));
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<float> values(y.value().data().begin() + static_cast<std::ptrdiff_t>(i * plane),
                                y.value().data().begin() + static_cast<std::ptrdiff_t>((i + 1) * plane));
      const MultibandRaster out(S, S, C, std::move(values));
      patches[start + i].raster = resize_bilinear(out, kPatchWindow, kPatchWindow);
    }
  }
  MultibandRaster corrected = denormalize(stitch(patches, base), stats);
  corrected.set_band_names(raster.band_names());
  return corrected;
}

}  // namespace sgc

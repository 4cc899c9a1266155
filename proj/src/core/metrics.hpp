#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace sgc {

// A stack of equally sized 2-D planes (batch x bands flattened), row-major.
struct ImageStack {
  std::span<const float> data;
  std::size_t planes = 1;
  std::size_t height = 0;
  std::size_t width = 0;

  // Rank 2 is one plane; rank 3 is [C,H,W]; rank 4 is [N,C,H,W].
  static ImageStack of(const ad::Tensor<float>& t);
  std::span<const float> plane(std::size_t p) const { return data.subspan(p * height * width, height * width); }
};

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
  std::vector<double> ms_weights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  // Evaluate the structural similarity on whole-plane statistics instead of local windows.
  bool global = false;

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }
  void validate() const;
};

struct MetricReport {
  double accuracy = 0.0;
  double dice = 0.0;
  double mpe = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double ssim = 0.0;
  double ms_ssim = 0.0;
};

inline constexpr const char* kMetricNames[7] = {"accuracy", "dice", "mpe", "mse", "rmse", "ssim", "ms_ssim"};
double metric_value(const MetricReport& r, std::size_t index);

enum class DiceMode { soft, thresholded };

inline constexpr double kAccuracyTolerance = 0.05;
inline constexpr double kDiceThreshold = 0.5;
inline constexpr double kDiceEps = 1e-7;
inline constexpr double kMpeEps = 1e-7;

double mse(std::span<const float> pred, std::span<const float> target);
double rmse(std::span<const float> pred, std::span<const float> target);
// mean((y - p) / y); positive when predictions run low.
double mpe(std::span<const float> pred, std::span<const float> target);
// Fraction of elements with |p - y| <= tol.
double accuracy(std::span<const float> pred, std::span<const float> target, double tol = kAccuracyTolerance);
double dice(std::span<const float> pred, std::span<const float> target, DiceMode mode = DiceMode::thresholded);

// Gaussian-window SSIM averaged over valid window positions, clamped to [0,1]
// per plane, then averaged over planes.
double ssim(const ImageStack& pred, const ImageStack& target, const SsimParams& params = {});
// Multiscale SSIM with 2x2 average-pool downsampling. Uses as many scales as
// fit the window (weights renormalised).
double ms_ssim(const ImageStack& pred, const ImageStack& target, const SsimParams& params = {});
std::size_t ms_ssim_scales(std::size_t height, std::size_t width, const SsimParams& params);

MetricReport full_report(const ImageStack& pred, const ImageStack& target, const SsimParams& params = {});
MetricReport full_report(const ad::Tensor<float>& pred, const ad::Tensor<float>& target,
                         const SsimParams& params = {});

// Element-wise mean of several reports.
MetricReport mean_report(std::span<const MetricReport> reports);

// "loss_kind,fold,accuracy,dice,mpe,mse,rmse,ssim,ms_ssim" with 17 significant digits.
std::string csv_header();
std::string csv_row(const std::string& loss_kind, std::size_t fold, const MetricReport& r);
std::string format_full(double v);

}  // namespace sgc

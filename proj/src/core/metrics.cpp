#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "errors.hpp"

namespace sgc {

namespace {

void check_pair(std::span<const float> pred, std::span<const float> target) {
  if (pred.size() != target.size()) {
    throw ShapeError("metric inputs differ in size: " + std::to_string(pred.size()) + " vs " +
                     std::to_string(target.size()));
  }
  if (pred.empty()) throw ShapeError("metric over empty inputs");
}

void check_pair(const ImageStack& a, const ImageStack& b) {
  if (a.planes != b.planes || a.height != b.height || a.width != b.width) {
    throw ShapeError("image stacks differ in shape");
  }
  if (a.data.size() != a.planes * a.height * a.width || b.data.size() != a.data.size()) {
    throw ShapeError("image stack data does not match its dimensions");
  }
  if (a.data.empty()) throw ShapeError("metric over empty images");
}

std::vector<double> gaussian_kernel(std::size_t size, double sigma) {
  std::vector<double> k(size);
  const double centre = (static_cast<double>(size) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - centre;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += k[i];
  }
  for (double& v : k) v /= total;
  return k;
}

struct Plane {
  std::vector<double> v;
  std::size_t h = 0, w = 0;
};

// Separable "valid" filtering: output is (h - n + 1) x (w - n + 1).
Plane filter_valid(const Plane& in, const std::vector<double>& k) {
  const std::size_t n = k.size();
  Plane rows{std::vector<double>(in.h * (in.w - n + 1)), in.h, in.w - n + 1};
  for (std::size_t y = 0; y < in.h; ++y) {
    for (std::size_t x = 0; x < rows.w; ++x) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += k[j] * in.v[y * in.w + x + j];
      rows.v[y * rows.w + x] = s;
    }
  }
  Plane out{std::vector<double>((in.h - n + 1) * rows.w), in.h - n + 1, rows.w};
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += k[i] * rows.v[(y + i) * rows.w + x];
      out.v[y * out.w + x] = s;
    }
  }
  return out;
}

Plane to_plane(std::span<const float> data, std::size_t h, std::size_t w) {
  return Plane{std::vector<double>(data.begin(), data.end()), h, w};
}

Plane downsample(const Plane& in) {
  Plane out{std::vector<double>((in.h / 2) * (in.w / 2)), in.h / 2, in.w / 2};
  for (std::size_t y = 0; y < out.h; ++y) {
    for (std::size_t x = 0; x < out.w; ++x) {
      out.v[y * out.w + x] = 0.25 * (in.v[2 * y * in.w + 2 * x] + in.v[2 * y * in.w + 2 * x + 1] +
                                     in.v[(2 * y + 1) * in.w + 2 * x] + in.v[(2 * y + 1) * in.w + 2 * x + 1]);
    }
  }
  return out;
}

struct SsimTerms {
  double ssim;  // mean of the full index
  double cs;    // mean of the contrast-structure factor
};

SsimTerms ssim_terms(const Plane& a, const Plane& b, const SsimParams& p) {
  const double c1 = p.c1(), c2 = p.c2();
  if (p.global) {
    const double n = static_cast<double>(a.v.size());
    const double ma = std::accumulate(a.v.begin(), a.v.end(), 0.0) / n;
    const double mb = std::accumulate(b.v.begin(), b.v.end(), 0.0) / n;
    double va = 0.0, vb = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
      va += (a.v[i] - ma) * (a.v[i] - ma);
      vb += (b.v[i] - mb) * (b.v[i] - mb);
      cov += (a.v[i] - ma) * (b.v[i] - mb);
    }
    va /= n;
    vb /= n;
    cov /= n;
    const double cs = (2.0 * cov + c2) / (va + vb + c2);
    const double l = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    return {l * cs, cs};
  }
  if (a.h < p.window || a.w < p.window) {
    throw ShapeError("image " + std::to_string(a.h) + "x" + std::to_string(a.w) + " is smaller than the " +
                     std::to_string(p.window) + "x" + std::to_string(p.window) + " SSIM window");
  }
  const auto k = gaussian_kernel(p.window, p.sigma);
  Plane aa = a, bb = b, ab = a;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    aa.v[i] = a.v[i] * a.v[i];
    bb.v[i] = b.v[i] * b.v[i];
    ab.v[i] = a.v[i] * b.v[i];
  }
  const Plane mu_a = filter_valid(a, k), mu_b = filter_valid(b, k);
  const Plane e_aa = filter_valid(aa, k), e_bb = filter_valid(bb, k), e_ab = filter_valid(ab, k);
  double ssim_sum = 0.0, cs_sum = 0.0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i], mb = mu_b.v[i];
    const double va = e_aa.v[i] - ma * ma;
    const double vb = e_bb.v[i] - mb * mb;
    const double cov = e_ab.v[i] - ma * mb;
    const double cs = (2.0 * cov + c2) / (va + vb + c2);
    ssim_sum += (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1) * cs;
    cs_sum += cs;
  }
  const double n = static_cast<double>(mu_a.v.size());
  return {ssim_sum / n, cs_sum / n};
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

ImageStack ImageStack::of(const ad::Tensor<float>& t) {
  ImageStack s;
  s.data = t.data();
  switch (t.rank()) {
    case 2:
      s.planes = 1, s.height = t.dim(0), s.width = t.dim(1);
      break;
    case 3:
      s.planes = t.dim(0), s.height = t.dim(1), s.width = t.dim(2);
      break;
    case 4:
      s.planes = t.dim(0) * t.dim(1), s.height = t.dim(2), s.width = t.dim(3);
      break;
    default:
      throw ShapeError("image metrics need a rank 2-4 tensor, got " + ad::shape_str(t.shape()));
  }
  return s;
}

void SsimParams::validate() const {
  if (window < 1) throw DomainError("SSIM window must be >= 1");
  if (!(sigma > 0.0)) throw DomainError("SSIM sigma must be positive");
  if (!(c1() > 0.0) || !(c2() > 0.0)) throw DomainError("SSIM stabilising constants must be positive");
  if (ms_weights.empty()) throw DomainError("multiscale SSIM needs at least one weight");
  const double total = std::accumulate(ms_weights.begin(), ms_weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-4) throw DomainError("multiscale SSIM weights must sum to 1");
}

double metric_value(const MetricReport& r, std::size_t index) {
  switch (index) {
    case 0: return r.accuracy;
    case 1: return r.dice;
    case 2: return r.mpe;
    case 3: return r.mse;
    case 4: return r.rmse;
    case 5: return r.ssim;
    case 6: return r.ms_ssim;
    default: throw IndexError("metric index " + std::to_string(index) + " out of range");
  }
}

double mse(std::span<const float> pred, std::span<const float> target) {
  check_pair(pred, target);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(target[i]) - pred[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

double rmse(std::span<const float> pred, std::span<const float> target) { return std::sqrt(mse(pred, target)); }

double mpe(std::span<const float> pred, std::span<const float> target) {
  check_pair(pred, target);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double y = target[i];
    const double denom = std::abs(y) < kMpeEps ? (y < 0.0 ? -kMpeEps : kMpeEps) : y;
    s += (y - pred[i]) / denom;
  }
  return s / static_cast<double>(pred.size());
}

double accuracy(std::span<const float> pred, std::span<const float> target, double tol) {
  check_pair(pred, target);
  if (!(tol >= 0.0)) throw DomainError("accuracy tolerance must be >= 0");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (std::abs(static_cast<double>(pred[i]) - target[i]) <= tol) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double dice(std::span<const float> pred, std::span<const float> target, DiceMode mode) {
  check_pair(pred, target);
  if (mode == DiceMode::soft) {
    double inter = 0.0, total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      inter += static_cast<double>(pred[i]) * target[i];
      total += static_cast<double>(pred[i]) + target[i];
    }
    return clamp01(2.0 * inter / (total + kDiceEps));
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] >= kDiceThreshold;
    const bool y = target[i] >= kDiceThreshold;
    tp += p && y;
    fp += p && !y;
    fn += !p && y;
  }
  if (tp + fp + fn == 0) return 1.0;  // both masks empty
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double ssim(const ImageStack& pred, const ImageStack& target, const SsimParams& params) {
  check_pair(pred, target);
  params.validate();
  double total = 0.0;
  for (std::size_t p = 0; p < pred.planes; ++p) {
    const Plane a = to_plane(pred.plane(p), pred.height, pred.width);
    const Plane b = to_plane(target.plane(p), target.height, target.width);
    total += clamp01(ssim_terms(a, b, params).ssim);
  }
  return total / static_cast<double>(pred.planes);
}

std::size_t ms_ssim_scales(std::size_t height, std::size_t width, const SsimParams& params) {
  std::size_t scales = 0;
  std::size_t h = height, w = width;
  while (scales < params.ms_weights.size() && (params.global ? h >= 1 && w >= 1 : h >= params.window && w >= params.window)) {
    ++scales;
    h /= 2;
    w /= 2;
  }
  return scales;
}

double ms_ssim(const ImageStack& pred, const ImageStack& target, const SsimParams& params) {
  check_pair(pred, target);
  params.validate();
  const std::size_t scales = ms_ssim_scales(pred.height, pred.width, params);
  if (scales == 0) {
    throw ShapeError("image " + std::to_string(pred.height) + "x" + std::to_string(pred.width) +
                     " is smaller than the SSIM window");
  }
  std::vector<double> weights(params.ms_weights.begin(), params.ms_weights.begin() + scales);
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= wsum;

  double total = 0.0;
  for (std::size_t p = 0; p < pred.planes; ++p) {
    Plane a = to_plane(pred.plane(p), pred.height, pred.width);
    Plane b = to_plane(target.plane(p), target.height, target.width);
    double value = 1.0;
    for (std::size_t s = 0; s < scales; ++s) {
      const SsimTerms t = ssim_terms(a, b, params);
      const bool last = s + 1 == scales;
      value *= std::pow(std::max(last ? t.ssim : t.cs, 0.0), weights[s]);
      if (!last) {
        a = downsample(a);
        b = downsample(b);
      }
    }
    total += clamp01(value);
  }
  return total / static_cast<double>(pred.planes);
}

MetricReport full_report(const ImageStack& pred, const ImageStack& target, const SsimParams& params) {
  check_pair(pred, target);
  MetricReport r;
  r.accuracy = accuracy(pred.data, target.data);
  r.dice = dice(pred.data, target.data);
  r.mpe = mpe(pred.data, target.data);
  r.mse = mse(pred.data, target.data);
  r.rmse = std::sqrt(r.mse);
  r.ssim = ssim(pred, target, params);
  r.ms_ssim = ms_ssim(pred, target, params);
  return r;
}

MetricReport full_report(const ad::Tensor<float>& pred, const ad::Tensor<float>& target,
                         const SsimParams& params) {
  if (pred.shape() != target.shape()) {
    throw ShapeError("metric shape mismatch " + ad::shape_str(pred.shape()) + " vs " +
                     ad::shape_str(target.shape()));
  }
  return full_report(ImageStack::of(pred), ImageStack::of(target), params);
}

MetricReport mean_report(std::span<const MetricReport> reports) {
  if (reports.empty()) throw CapacityError("cannot average zero metric reports");
  MetricReport m;
  for (const auto& r : reports) {
    m.accuracy += r.accuracy;
    m.dice += r.dice;
    m.mpe += r.mpe;
    m.mse += r.mse;
    m.ssim += r.ssim;
    m.ms_ssim += r.ms_ssim;
    m.rmse += r.rmse;
  }
  const double n = static_cast<double>(reports.size());
  m.accuracy /= n;
  m.dice /= n;
  m.mpe /= n;
  m.mse /= n;
  m.rmse /= n;
  m.ssim /= n;
  m.ms_ssim /= n;
  return m;
}

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_header() { return "loss_kind,fold,accuracy,dice,mpe,mse,rmse,ssim,ms_ssim"; }

std::string csv_row(const std::string& loss_kind, std::size_t fold, const MetricReport& r) {
  std::string row = loss_kind + "," + std::to_string(fold);
  for (std::size_t i = 0; i < 7; ++i) row += "," + format_full(metric_value(r, i));
  return row;
}

}  // namespace sgc

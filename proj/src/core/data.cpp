#include "data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "errors.hpp"

namespace sgc {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  // splitmix64 finaliser over the combined words
  std::uint64_t z = seed ^ (tag + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return derive_seed(seed, h);
}

// Patches ---------------------------------------------------------------------

std::vector<WindowOrigin> sweep_windows(std::size_t height, std::size_t width, std::size_t window,
                                        std::size_t stride, bool cover_edges) {
  if (window == 0) throw ShapeError("window must be >= 1");
  if (stride == 0) throw ShapeError("stride must be >= 1");
  if (height < window || width < window) {
    std::ostringstream os;
    os << "raster " << height << "x" << width << " is smaller than the " << window << "px window";
    throw ShapeError(os.str());
  }
  auto axis = [&](std::size_t extent) {
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + window <= extent; s += stride) starts.push_back(s);
    if (cover_edges && starts.back() + window < extent) starts.push_back(extent - window);
    return starts;
  };
  const auto rows = axis(height);
  const auto cols = axis(width);
  std::vector<WindowOrigin> out;
  out.reserve(rows.size() * cols.size());
  for (std::size_t r : rows) {
    for (std::size_t c : cols) out.push_back({r, c});
  }
  return out;
}

std::vector<Patch> extract_patches(const MultibandRaster& raster, std::size_t window, std::size_t stride,
                                   bool cover_edges) {
  std::vector<Patch> patches;
  for (const auto& o : sweep_windows(raster.height(), raster.width(), window, stride, cover_edges)) {
    patches.push_back({o.row, o.col, raster.crop(o.row, o.col, window, window)});
  }
  return patches;
}

MultibandRaster resize_bilinear(const MultibandRaster& raster, std::size_t out_height, std::size_t out_width) {
  if (out_height == 0 || out_width == 0) throw ShapeError("resize target must be non-empty");
  const std::size_t H = raster.height(), W = raster.width();
  MultibandRaster out(out_width, out_height, raster.bands());
  auto coord = [](std::size_t i, std::size_t n_out, std::size_t n_in) {
    if (n_out == 1 || n_in == 1) return 0.0;
    return static_cast<double>(i) * static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1);
  };
  for (std::size_t b = 0; b < raster.bands(); ++b) {
    for (std::size_t y = 0; y < out_height; ++y) {
      const double sy = coord(y, out_height, H);
      const std::size_t y0 = std::min(static_cast<std::size_t>(sy), H - 1);
      const std::size_t y1 = std::min(y0 + 1, H - 1);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t x = 0; x < out_width; ++x) {
        const double sx = coord(x, out_width, W);
        const std::size_t x0 = std::min(static_cast<std::size_t>(sx), W - 1);
        const std::size_t x1 = std::min(x0 + 1, W - 1);
        const double fx = sx - static_cast<double>(x0);
        const double top = (1.0 - fx) * raster.at(b, y0, x0) + fx * raster.at(b, y0, x1);
        const double bottom = (1.0 - fx) * raster.at(b, y1, x0) + fx * raster.at(b, y1, x1);
        out.at(b, y, x) = static_cast<float>((1.0 - fy) * top + fy * bottom);
      }
    }
  }
  out.set_band_names(raster.band_names());
  return out;
}

MultibandRaster resize_patch(const MultibandRaster& patch) {
  if (patch.height() != kPatchWindow || patch.width() != kPatchWindow) {
    std::ostringstream os;
    os << "resize_patch expects " << kPatchWindow << "x" << kPatchWindow << ", got " << patch.height() << "x"
       << patch.width();
    throw ShapeError(os.str());
  }
  return resize_bilinear(patch, kModelPatch, kModelPatch);
}

MultibandRaster stitch(const std::vector<Patch>& patches, const MultibandRaster& base) {
  const std::size_t H = base.height(), W = base.width(), B = base.bands();
  std::vector<double> sum(base.size(), 0.0);
  std::vector<std::uint32_t> count(H * W, 0);
  for (const Patch& p : patches) {
    const MultibandRaster& r = p.raster;
    if (r.bands() != B) throw ShapeError("patch band count differs from the canvas");
    if (p.row + r.height() > H || p.col + r.width() > W) {
      std::ostringstream os;
      os << "patch " << r.height() << "x" << r.width() << " at (" << p.row << ", " << p.col
         << ") falls outside the " << H << "x" << W << " canvas";
      throw ShapeError(os.str());
    }
    for (std::size_t y = 0; y < r.height(); ++y) {
      for (std::size_t x = 0; x < r.width(); ++x) ++count[(p.row + y) * W + p.col + x];
    }
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t y = 0; y < r.height(); ++y) {
        for (std::size_t x = 0; x < r.width(); ++x) {
          sum[(b * H + p.row + y) * W + p.col + x] += r.at(b, y, x);
        }
      }
    }
  }
  MultibandRaster out = base;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < H * W; ++i) {
      if (count[i] > 0) out.data()[b * H * W + i] = static_cast<float>(sum[b * H * W + i] / count[i]);
    }
  }
  return out;
}

// Degradation -------------------------------------------------------------------

void DegradeSpec::validate() const {
  if (shadow.count > 0) {
    if (!(shadow.attenuation > 0.0 && shadow.attenuation <= 1.0)) {
      throw ConfigError("shadow attenuation must be in (0, 1]");
    }
    if (!(shadow.width >= 0.0) || !(shadow.ramp >= 0.0) || !(shadow.spacing >= 0.0)) {
      throw ConfigError("shadow width, ramp and spacing must be non-negative");
    }
  }
  if (glint.count > 0) {
    if (!(glint.brightness >= 0.0 && glint.brightness <= 1.0)) throw ConfigError("glint brightness must be in [0, 1]");
    if (!(glint.radius_min > 0.0) || glint.radius_max < glint.radius_min) {
      throw ConfigError("glint radius range must be positive and ordered");
    }
    if (!(glint.falloff_sigma >= 0.0)) throw ConfigError("glint falloff sigma must be non-negative");
  }
}

Degraded synth_degrade(const MultibandRaster& clean, const DegradeSpec& spec) {
  spec.validate();
  const std::size_t H = clean.height(), W = clean.width();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> factor(H * W, 1.0);
  const ShadowSpec& s = spec.shadow;
  if (s.count > 0 && s.attenuation < 1.0) {
    const double theta = s.angle_deg * std::numbers::pi / 180.0;
    const double nx = -std::sin(theta), ny = std::cos(theta);
    const double cx = unit(rng) * static_cast<double>(W);
    const double cy = unit(rng) * static_cast<double>(H);
    const double half = s.width / 2.0;
    for (std::size_t k = 0; k < s.count; ++k) {
      const double offset = (static_cast<double>(k) - (static_cast<double>(s.count) - 1.0) / 2.0) * s.spacing;
      for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
          const double d = std::abs((static_cast<double>(x) - cx) * nx + (static_cast<double>(y) - cy) * ny - offset);
          double f = 1.0;
          if (d <= half) {
            f = s.attenuation;
          } else if (s.ramp > 0.0 && d < half + s.ramp) {
            f = s.attenuation + (1.0 - s.attenuation) * (d - half) / s.ramp;
          }
          factor[y * W + x] = std::min(factor[y * W + x], f);
        }
      }
    }
  }

  std::vector<double> glow(H * W, 0.0);
  const GlintSpec& g = spec.glint;
  if (g.count > 0 && g.brightness > 0.0) {
    for (std::size_t k = 0; k < g.count; ++k) {
      const double cx = unit(rng) * static_cast<double>(W);
      const double cy = unit(rng) * static_cast<double>(H);
      const double a = g.radius_min + unit(rng) * (g.radius_max - g.radius_min);
      const double b = g.radius_min + unit(rng) * (g.radius_max - g.radius_min);
      const double phi = unit(rng) * std::numbers::pi;
      const double cphi = std::cos(phi), sphi = std::sin(phi);
      const double reach = std::max(a, b) + 3.0 * g.falloff_sigma + 1.0;
      const std::size_t y0 = static_cast<std::size_t>(std::max(0.0, cy - reach));
      const std::size_t y1 = static_cast<std::size_t>(std::clamp(cy + reach, 0.0, static_cast<double>(H)));
      const std::size_t x0 = static_cast<std::size_t>(std::max(0.0, cx - reach));
      const std::size_t x1 = static_cast<std::size_t>(std::clamp(cx + reach, 0.0, static_cast<double>(W)));
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
          const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
          const double u = dx * cphi + dy * sphi;
          const double v = -dx * sphi + dy * cphi;
          const double rho = std::sqrt((u / a) * (u / a) + (v / b) * (v / b));
          double add = 0.0;
          if (rho <= 1.0) {
            add = g.brightness;
          } else if (g.falloff_sigma > 0.0) {
            const double dist = (rho - 1.0) * std::min(a, b);
            if (dist <= 3.0 * g.falloff_sigma) {
              add = g.brightness * std::exp(-dist * dist / (2.0 * g.falloff_sigma * g.falloff_sigma));
            }
          }
          glow[y * W + x] += add;
        }
      }
    }
  }

  Degraded out{clean, MultibandRaster(W, H, 1), MultibandRaster(W, H, 1)};
  for (std::size_t i = 0; i < H * W; ++i) {
    const bool shaded = factor[i] < 1.0;
    const bool glinted = glow[i] > 0.0;
    out.shadow_mask.data()[i] = shaded ? 1.0f : 0.0f;
    out.glint_mask.data()[i] = glinted ? 1.0f : 0.0f;
    if (!shaded && !glinted) continue;
    for (std::size_t b = 0; b < clean.bands(); ++b) {
      float& v = out.degraded.data()[b * H * W + i];
      double d = v;
      if (shaded) d *= factor[i];
      if (glinted) d = std::min(1.0, d + glow[i]);
      v = static_cast<float>(d);
    }
  }
  return out;
}

// Scene ---------------------------------------------------------------------------

namespace {

// Smooth value noise in [0, 1]: bilinearly interpolated random lattice with
// smoothstep weights, summed over octaves.
class ValueNoise {
 public:
  ValueNoise(std::uint64_t seed, double cell, int octaves) : cell_(cell), octaves_(octaves) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    lattice_.resize(kSize * kSize);
    for (double& v : lattice_) v = unit(rng);
  }

  double operator()(double x, double y) const {
    double total = 0.0, amp = 1.0, norm = 0.0, scale = 1.0 / cell_;
    for (int o = 0; o < octaves_; ++o) {
      total += amp * sample(x * scale + 17.0 * o, y * scale + 31.0 * o);
      norm += amp;
      amp *= 0.5;
      scale *= 2.0;
    }
    return total / norm;
  }

 private:
  static constexpr std::size_t kSize = 256;

  double at(long ix, long iy) const {
    const auto wrap = [](long v) { return static_cast<std::size_t>(((v % 256) + 256) % 256); };
    return lattice_[wrap(iy) * kSize + wrap(ix)];
  }
  double sample(double x, double y) const {
    const double fx0 = std::floor(x), fy0 = std::floor(y);
    const long ix = static_cast<long>(fx0), iy = static_cast<long>(fy0);
    double tx = x - fx0, ty = y - fy0;
    tx = tx * tx * (3.0 - 2.0 * tx);
    ty = ty * ty * (3.0 - 2.0 * ty);
    const double top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
    const double bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
    return top * (1.0 - ty) + bottom * ty;
  }

  double cell_;
  int octaves_;
  std::vector<double> lattice_;
};

constexpr std::array<double, 5> kWater = {0.055, 0.075, 0.045, 0.030, 0.018};
constexpr std::array<double, 5> kTurbid = {0.020, 0.030, 0.030, 0.020, 0.010};
constexpr std::array<double, 5> kAlgae = {0.000, 0.020, 0.000, 0.030, 0.040};
constexpr std::array<double, 5> kVegetation = {0.035, 0.080, 0.045, 0.250, 0.420};
constexpr std::array<double, 5> kSoil = {0.110, 0.140, 0.170, 0.200, 0.240};
constexpr std::array<double, 5> kBright = {0.600, 0.620, 0.630, 0.640, 0.650};

}  // namespace

MultibandRaster synth_scene(const SceneSpec& spec) {
  if (spec.width < 1 || spec.height < 1) throw ConfigError("scene dimensions must be positive");
  const std::size_t W = spec.width, H = spec.height;
  const double size = static_cast<double>(std::min(W, H));
  const ValueNoise shore(derive_seed(spec.seed, "shore"), size / 6.0, 3);
  const ValueNoise turbidity(derive_seed(spec.seed, "turbidity"), size / 5.0, 4);
  const ValueNoise algae(derive_seed(spec.seed, "algae"), size / 12.0, 3);
  const ValueNoise ripple(derive_seed(spec.seed, "ripple"), 6.0, 2);
  const ValueNoise land(derive_seed(spec.seed, "land"), size / 8.0, 4);
  const ValueNoise grain(derive_seed(spec.seed, "grain"), 3.0, 2);

  // A few bright rooftops / dock slabs on land, placed near the corners.
  std::mt19937_64 rng(derive_seed(spec.seed, "structures"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Rect {
    double x0, y0, x1, y1;
  };
  std::vector<Rect> structures;
  for (int k = 0; k < 4; ++k) {
    const double cx = (k % 2 == 0 ? 0.03 : 0.97) + (unit(rng) - 0.5) * 0.02;
    const double cy = (k / 2 == 0 ? 0.03 : 0.97) + (unit(rng) - 0.5) * 0.02;
    const double hw = 0.01 + unit(rng) * 0.01, hh = 0.01 + unit(rng) * 0.01;
    structures.push_back({cx - hw, cy - hh, cx + hw, cy + hh});
  }

  MultibandRaster out(W, H, 5);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(W);
      const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(H);
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      // The crop is the pond itself: a wobbly rounded-rectangle shoreline
      // leaves only the corners to the banks. Positive inside.
      const double ru = (u - 0.5) / 0.55, rv = (v - 0.5) / 0.53;
      const double radius = std::sqrt(std::sqrt(ru * ru * ru * ru + rv * rv * rv * rv));
      const double inside = (1.0 + 0.12 * (shore(fx, fy) - 0.5)) - radius;
      const double water_w = std::clamp(inside * 40.0 + 0.5, 0.0, 1.0);

      const double t = turbidity(fx, fy);
      const double a = std::max(0.0, algae(fx, fy) - 0.55) * 2.0;
      const double r = ripple(fx, fy) - 0.5;
      const double l = land(fx, fy);
      const double gr = grain(fx, fy) - 0.5;
      const double veg_w = std::clamp((l - 0.45) * 6.0 + 0.5, 0.0, 1.0);
      bool bright = false;
      for (const Rect& s : structures) bright = bright || (u >= s.x0 && u <= s.x1 && v >= s.y0 && v <= s.y1);

      for (std::size_t b = 0; b < 5; ++b) {
        const double water = kWater[b] + kTurbid[b] * t + kAlgae[b] * a + 0.004 * r;
        double ground = veg_w * kVegetation[b] + (1.0 - veg_w) * kSoil[b];
        ground *= 1.0 + 0.25 * gr;
        if (bright) ground = kBright[b] * (1.0 + 0.05 * gr);
        const double value = water_w * water + (1.0 - water_w) * ground;
        out.at(b, y, x) = static_cast<float>(std::max(value, 0.001));
      }
    }
  }
  out.set_band_names(kBandNames);
  return out;
}

// Dataset ------------------------------------------------------------------------

const char* category_name(PairCategory c) noexcept {
  switch (c) {
    case PairCategory::shadow: return "shadow";
    case PairCategory::glint: return "glint";
    case PairCategory::both: return "both";
  }
  return "?";
}

PairCategory parse_category(std::string_view name) {
  for (PairCategory c : {PairCategory::shadow, PairCategory::glint, PairCategory::both}) {
    if (name == category_name(c)) return c;
  }
  throw FormatError("unknown pair category '" + std::string(name) + "'");
}

void PatchPair::validate() const {
  if (degraded.width() != clean.width() || degraded.height() != clean.height() ||
      degraded.bands() != clean.bands()) {
    throw ShapeError("pair " + std::to_string(id) + ": degraded and clean patches differ in shape");
  }
  for (const MultibandRaster* r : {&degraded, &clean}) {
    for (float v : r->data()) {
      if (!(v >= 0.0f && v <= 1.0f)) throw DataError("pair " + std::to_string(id) + " has a value outside [0,1]");
    }
  }
}

Dataset build_dataset(const MultibandRaster& clean_scene, const DatasetSpec& spec) {
  const std::size_t total = spec.counts[0] + spec.counts[1] + spec.counts[2];
  if (total == 0) throw ConfigError("dataset needs at least one pair");
  NormalizationStats stats = NormalizationStats::fit(clean_scene);
  const MultibandRaster scene = normalize(clean_scene, stats);

  auto windows = sweep_windows(scene.height(), scene.width(), spec.window, spec.stride);
  if (windows.size() < total) {
    std::ostringstream os;
    os << "raster supports only " << windows.size() << " distinct " << spec.window << "px windows at stride "
       << spec.stride << ", " << total << " pairs requested";
    throw CapacityError(os.str());
  }
  std::mt19937_64 pick(derive_seed(spec.seed, "windows"));
  std::shuffle(windows.begin(), windows.end(), pick);

  Dataset ds{{}, stats};
  ds.pairs.reserve(total);
  std::size_t id = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto category = static_cast<PairCategory>(c);
    for (std::size_t j = 0; j < spec.counts[c]; ++j, ++id) {
      std::mt19937_64 rng(derive_seed(spec.seed, id));
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      DegradeSpec d;
      d.seed = rng();
      d.shadow = spec.shadow;
      d.glint = spec.glint;
      d.shadow.angle_deg = unit(rng) * 180.0;
      d.shadow.width = spec.shadow.width * (0.7 + 0.6 * unit(rng));
      d.shadow.attenuation = std::min(1.0, spec.shadow.attenuation * (0.8 + 0.4 * unit(rng)));
      d.glint.brightness = std::min(1.0, spec.glint.brightness * (0.8 + 0.4 * unit(rng)));
      if (spec.glint.count > 0) {
        d.glint.count = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(spec.glint.count));
        d.glint.count = std::min(d.glint.count, spec.glint.count);
      }
      if (category == PairCategory::shadow) d.glint.count = 0;
      if (category == PairCategory::glint) d.shadow.count = 0;

      const WindowOrigin o = windows[id];
      const MultibandRaster window = scene.crop(o.row, o.col, spec.window, spec.window);
      const Degraded deg = synth_degrade(window, d);
      PatchPair pair;
      pair.id = id;
      pair.category = category;
      pair.row = o.row;
      pair.col = o.col;
      pair.degraded = resize_bilinear(deg.degraded, spec.patch_size, spec.patch_size);
      pair.clean = resize_bilinear(window, spec.patch_size, spec.patch_size);
      pair.validate();
      ds.pairs.push_back(std::move(pair));
    }
  }
  return ds;
}

std::vector<std::size_t> FoldAssignment::members(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment kfold_split(const std::vector<PairCategory>& categories, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold split needs k >= 2");
  if (categories.size() < k) {
    throw CapacityError("cannot split " + std::to_string(categories.size()) + " pairs into " + std::to_string(k) +
                        " folds");
  }
  FoldAssignment folds{k, seed, std::vector<std::size_t>(categories.size(), 0)};
  // Deal each category's shuffled members round-robin, continuing the fold
  // counter across categories so fold sizes stay balanced overall.
  std::size_t position = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < categories.size(); ++i) {
      if (static_cast<std::size_t>(categories[i]) == c) members.push_back(i);
    }
    std::mt19937_64 rng(derive_seed(seed, c));
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) folds.fold_of[i] = position++ % k;
  }
  return folds;
}

FoldAssignment kfold_split(const std::vector<PatchPair>& pairs, std::size_t k, std::uint64_t seed) {
  std::vector<PairCategory> categories;
  categories.reserve(pairs.size());
  for (const auto& p : pairs) categories.push_back(p.category);
  return kfold_split(categories, k, seed);
}

// Manifest -------------------------------------------------------------------------

std::string stats_to_json(const NormalizationStats& stats) {
  nlohmann::json j;
  j["min"] = stats.minimum();
  j["max"] = stats.maximum();
  return j.dump(2) + "\n";
}

NormalizationStats stats_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    return NormalizationStats(j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad normalization stats JSON: ") + e.what());
  }
}

namespace {

std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span<const unsigned char>(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_dataset(const Dataset& dataset, const FoldAssignment& folds, const fs::path& dir) {
  if (folds.fold_of.size() != dataset.pairs.size()) throw ShapeError("fold assignment does not cover the dataset");
  std::error_code ec;
  fs::create_directories(dir / "pairs", ec);
  if (ec) throw IoError("cannot create " + (dir / "pairs").string() + ": " + ec.message());
  std::ostringstream csv;
  csv << "pair_id,category,row,col,fold,degraded_path,clean_path\n";
  for (std::size_t i = 0; i < dataset.pairs.size(); ++i) {
    const PatchPair& p = dataset.pairs[i];
    char stem[32];
    std::snprintf(stem, sizeof stem, "pair_%04zu", p.id);
    const std::string degraded = std::string("pairs/") + stem + "_degraded.mbrf";
    const std::string clean = std::string("pairs/") + stem + "_clean.mbrf";
    save_raster(p.degraded, dir / degraded);
    save_raster(p.clean, dir / clean);
    csv << p.id << ',' << category_name(p.category) << ',' << p.row << ',' << p.col << ',' << folds.fold_of[i]
        << ',' << degraded << ',' << clean << '\n';
  }
  write_text(dir / "manifest.csv", csv.str());
  write_text(dir / "scene_stats.json", stats_to_json(dataset.scene_stats));
}

LoadedDataset read_dataset(const fs::path& manifest) {
  const fs::path dir = manifest.parent_path();
  std::istringstream in(read_text(manifest));
  std::string line;
  if (!std::getline(in, line) || line != "pair_id,category,row,col,fold,degraded_path,clean_path") {
    throw FormatError("manifest header mismatch in " + manifest.string());
  }
  std::vector<PatchPair> pairs;
  std::vector<std::size_t> fold_of;
  std::size_t max_fold = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 7) throw FormatError("manifest row has " + std::to_string(cells.size()) + " columns");
    PatchPair p;
    try {
      p.id = std::stoul(cells[0]);
      p.row = std::stoul(cells[2]);
      p.col = std::stoul(cells[3]);
      fold_of.push_back(std::stoul(cells[4]));
    } catch (const std::logic_error&) {
      throw FormatError("manifest row has a non-numeric field: " + line);
    }
    p.category = parse_category(cells[1]);
    p.degraded = load_raster(dir / cells[5]);
    p.clean = load_raster(dir / cells[6]);
    p.validate();
    max_fold = std::max(max_fold, fold_of.back());
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw DataError("manifest lists no pairs");
  LoadedDataset out{Dataset{std::move(pairs), stats_from_json(read_text(dir / "scene_stats.json"))},
                    FoldAssignment{max_fold + 1, 0, std::move(fold_of)}};
  return out;
}

}  // namespace sgc

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "raster.hpp"

namespace sgc {

// Seed for an independent stream derived from a parent seed and a tag.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);

// Patches -------------------------------------------------------------------

struct Patch {
  std::size_t row = 0;
  std::size_t col = 0;
  MultibandRaster raster;
};

struct WindowOrigin {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const WindowOrigin&, const WindowOrigin&) = default;
};

inline constexpr std::size_t kPatchWindow = 200;
inline constexpr std::size_t kModelPatch = 128;

// Row-major sweep of full windows. With cover_edges, a final window flush with
// the right/bottom border is added on each axis when the stride leaves a gap.
std::vector<WindowOrigin> sweep_windows(std::size_t height, std::size_t width, std::size_t window,
                                        std::size_t stride, bool cover_edges = false);
std::vector<Patch> extract_patches(const MultibandRaster& raster, std::size_t window = kPatchWindow,
                                   std::size_t stride = kPatchWindow, bool cover_edges = false);

// Corner-aligned bilinear resampling of every band.
MultibandRaster resize_bilinear(const MultibandRaster& raster, std::size_t out_height, std::size_t out_width);
// 200x200xC -> 128x128xC.
MultibandRaster resize_patch(const MultibandRaster& patch);

// Overlaps are averaged with uniform weight; pixels no patch covers keep the
// value from `base`, which also fixes the canvas size.
MultibandRaster stitch(const std::vector<Patch>& patches, const MultibandRaster& base);

// Degradation ---------------------------------------------------------------

struct ShadowSpec {
  std::size_t count = 1;       // parallel seams; 0 disables shadows
  double angle_deg = 30.0;     // seam direction
  double width = 60.0;         // fully attenuated core, px
  double spacing = 90.0;       // centre-to-centre distance between seams, px
  double attenuation = 0.5;    // multiplicative factor in the core, (0, 1]
  double ramp = 8.0;           // linear soft edge, px
};

struct GlintSpec {
  std::size_t count = 3;       // elliptical blobs; 0 disables glint
  double radius_min = 6.0;     // semi-axis range, px
  double radius_max = 20.0;
  double brightness = 0.6;     // additive, [0, 1]
  double falloff_sigma = 4.0;  // Gaussian fall-off outside the ellipse, px
};

struct DegradeSpec {
  ShadowSpec shadow;
  GlintSpec glint;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Degraded {
  MultibandRaster degraded;
  MultibandRaster shadow_mask;  // 1 band, 1 where the shadow factor is below 1
  MultibandRaster glint_mask;   // 1 band, 1 where glint adds brightness
};

// Shadows multiply every band; glint adds and clamps at 1. Input is expected
// in [0, 1]. Deterministic in spec.seed.
Degraded synth_degrade(const MultibandRaster& clean, const DegradeSpec& spec);

// Synthetic 5-band pond scene ------------------------------------------------

struct SceneSpec {
  std::size_t width = 1400;
  std::size_t height = 1400;
  std::uint64_t seed = 7;
};

inline const std::vector<std::string> kBandNames = {"blue", "green", "red", "red_edge", "nir"};

// Reflectance-like values: a textured pond surrounded by vegetation, bare soil
// and a few bright man-made surfaces.
MultibandRaster synth_scene(const SceneSpec& spec);

// Paired dataset -------------------------------------------------------------

enum class PairCategory { shadow = 0, glint = 1, both = 2 };
const char* category_name(PairCategory c) noexcept;
PairCategory parse_category(std::string_view name);

struct PatchPair {
  std::size_t id = 0;
  PairCategory category = PairCategory::shadow;
  std::size_t row = 0;  // origin of the source window in the parent raster
  std::size_t col = 0;
  MultibandRaster degraded;  // model patch, values in [0, 1]
  MultibandRaster clean;

  void validate() const;
};

struct DatasetSpec {
  std::array<std::size_t, 3> counts = {52, 49, 15};  // shadow, glint, both
  std::size_t window = kPatchWindow;
  std::size_t stride = 100;
  std::size_t patch_size = kModelPatch;
  ShadowSpec shadow;
  GlintSpec glint;
  std::uint64_t seed = 1;
};

struct Dataset {
  std::vector<PatchPair> pairs;
  NormalizationStats scene_stats;  // physical units -> [0, 1] for the source scene
};

// Normalises the clean scene, picks distinct windows, degrades each according
// to its category and resizes both members to the model patch size.
Dataset build_dataset(const MultibandRaster& clean_scene, const DatasetSpec& spec);

struct FoldAssignment {
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fold_of;  // per pair

  std::vector<std::size_t> members(std::size_t fold) const;
  std::vector<std::size_t> complement(std::size_t fold) const;
};

// Stratified by category: fold sizes differ by at most one and every fold's
// category counts are within one of the proportional share.
FoldAssignment kfold_split(const std::vector<PatchPair>& pairs, std::size_t k, std::uint64_t seed);
FoldAssignment kfold_split(const std::vector<PairCategory>& categories, std::size_t k, std::uint64_t seed);

// Manifest: CSV "pair_id,category,row,col,fold,degraded_path,clean_path" with
// paths relative to the manifest, plus scene_stats.json beside it.
void write_dataset(const Dataset& dataset, const FoldAssignment& folds, const std::filesystem::path& dir);

struct LoadedDataset {
  Dataset dataset;
  FoldAssignment folds;
};
LoadedDataset read_dataset(const std::filesystem::path& manifest);

std::string stats_to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const std::string& text);

}  // namespace sgc

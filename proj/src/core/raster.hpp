#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sgc {

// H x W x C image stored band-major, row-major within each band.
class MultibandRaster {
 public:
  MultibandRaster() = default;
  MultibandRaster(std::size_t width, std::size_t height, std::size_t bands, float fill = 0.0f);
  MultibandRaster(std::size_t width, std::size_t height, std::size_t bands, std::vector<float> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t band_size() const noexcept { return width_ * height_; }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(std::size_t band, std::size_t row, std::size_t col) {
    return data_[(band * height_ + row) * width_ + col];
  }
  float at(std::size_t band, std::size_t row, std::size_t col) const {
    return data_[(band * height_ + row) * width_ + col];
  }

  std::span<float> band(std::size_t b);
  std::span<const float> band(std::size_t b) const;
  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  const std::vector<std::string>& band_names() const noexcept { return band_names_; }
  void set_band_names(std::vector<std::string> names);

  // Throws DataError naming the first non-finite sample.
  void check_finite() const;

  // Copy of the window [row, row+h) x [col, col+w), all bands.
  MultibandRaster crop(std::size_t row, std::size_t col, std::size_t h, std::size_t w) const;

  // Dimensions and samples; band names are labels only and not compared.
  friend bool operator==(const MultibandRaster& a, const MultibandRaster& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.bands_ == b.bands_ && a.data_ == b.data_;
  }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t bands_ = 0;
  std::vector<float> data_;
  std::vector<std::string> band_names_;
};

// Per-band min/max used to map physical values into [0, 1].
class NormalizationStats {
 public:
  NormalizationStats(std::vector<double> minimum, std::vector<double> maximum);

  // Stats over every sample of every raster, band by band.
  static NormalizationStats fit(std::span<const MultibandRaster* const> rasters);
  static NormalizationStats fit(const MultibandRaster& raster);

  std::size_t bands() const noexcept { return min_.size(); }
  double min(std::size_t b) const { return min_.at(b); }
  double max(std::size_t b) const { return max_.at(b); }
  const std::vector<double>& minimum() const noexcept { return min_; }
  const std::vector<double>& maximum() const noexcept { return max_; }

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;

 private:
  std::vector<double> min_;
  std::vector<double> max_;
};

// MBRF container, little-endian:
//   "MBR1" | version u32 = 1 | width u32 | height u32 | bands u32 | dtype u32 (0 = f32) | f32 payload
inline constexpr std::size_t kMbrfHeaderBytes = 24;

std::vector<unsigned char> encode_raster(const MultibandRaster& raster);
MultibandRaster decode_raster(std::span<const unsigned char> bytes);

MultibandRaster load_raster(const std::filesystem::path& path);
void save_raster(const MultibandRaster& raster, const std::filesystem::path& path);

MultibandRaster normalize(const MultibandRaster& raster, const NormalizationStats& stats);
MultibandRaster denormalize(const MultibandRaster& raster, const NormalizationStats& stats);

// 8-bit binary PGM (P5, maxval 255). Band range maps linearly onto [0, 255],
// rounded half-up; a constant band maps to 0.
std::vector<unsigned char> band_to_gray(const MultibandRaster& raster, std::size_t band);
void band_to_grayscale(const MultibandRaster& raster, std::size_t band, const std::filesystem::path& path);

// Low-level helpers shared with the weights format.
void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes);
std::vector<unsigned char> read_file(const std::filesystem::path& path);

}  // namespace sgc

#include "raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "errors.hpp"

namespace sgc {

namespace {

constexpr char kMagic[4] = {'M', 'B', 'R', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF32 = 0;

void check_dims(std::size_t width, std::size_t height, std::size_t bands) {
  if (width < 1 || height < 1 || bands < 1) {
    std::ostringstream os;
    os << "raster dimensions must be positive, got " << width << "x" << height << "x" << bands;
    throw ShapeError(os.str());
  }
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::span<const unsigned char> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

std::uint32_t narrow_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw FormatError(std::string(what) + " exceeds u32 range");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

MultibandRaster::MultibandRaster(std::size_t width, std::size_t height, std::size_t bands, float fill)
    : width_(width), height_(height), bands_(bands) {
  check_dims(width, height, bands);
  data_.assign(width * height * bands, fill);
}

MultibandRaster::MultibandRaster(std::size_t width, std::size_t height, std::size_t bands,
                                 std::vector<float> data)
    : width_(width), height_(height), bands_(bands), data_(std::move(data)) {
  check_dims(width, height, bands);
  if (data_.size() != width * height * bands) {
    std::ostringstream os;
    os << "raster data length " << data_.size() << " does not match " << width << "x" << height << "x"
       << bands;
    throw ShapeError(os.str());
  }
}

std::span<float> MultibandRaster::band(std::size_t b) {
  if (b >= bands_) throw IndexError("band " + std::to_string(b) + " out of range");
  return std::span<float>(data_).subspan(b * band_size(), band_size());
}

std::span<const float> MultibandRaster::band(std::size_t b) const {
  if (b >= bands_) throw IndexError("band " + std::to_string(b) + " out of range");
  return std::span<const float>(data_).subspan(b * band_size(), band_size());
}

void MultibandRaster::set_band_names(std::vector<std::string> names) {
  if (!names.empty() && names.size() != bands_) {
    throw ShapeError("expected " + std::to_string(bands_) + " band names, got " + std::to_string(names.size()));
  }
  band_names_ = std::move(names);
}

void MultibandRaster::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      std::ostringstream os;
      os << "non-finite sample in band " << i / band_size() << " at pixel " << i % band_size();
      throw DataError(os.str());
    }
  }
}

MultibandRaster MultibandRaster::crop(std::size_t row, std::size_t col, std::size_t h, std::size_t w) const {
  if (row + h > height_ || col + w > width_) {
    std::ostringstream os;
    os << "window " << h << "x" << w << " at (" << row << ", " << col << ") exceeds " << height_ << "x"
       << width_;
    throw ShapeError(os.str());
  }
  MultibandRaster out(w, h, bands_);
  for (std::size_t b = 0; b < bands_; ++b) {
    for (std::size_t r = 0; r < h; ++r) {
      const float* src = &data_[(b * height_ + row + r) * width_ + col];
      std::copy(src, src + w, &out.at(b, r, 0));
    }
  }
  out.band_names_ = band_names_;
  return out;
}

NormalizationStats::NormalizationStats(std::vector<double> minimum, std::vector<double> maximum)
    : min_(std::move(minimum)), max_(std::move(maximum)) {
  if (min_.size() != max_.size() || min_.empty()) {
    throw ShapeError("normalization stats need one min and one max per band");
  }
  for (std::size_t b = 0; b < min_.size(); ++b) {
    if (!(min_[b] < max_[b])) {
      std::ostringstream os;
      os << "band " << b << " is constant or inverted (min " << min_[b] << ", max " << max_[b] << ")";
      throw DataError(os.str());
    }
  }
}

NormalizationStats NormalizationStats::fit(std::span<const MultibandRaster* const> rasters) {
  if (rasters.empty()) throw ShapeError("cannot fit normalization stats on zero rasters");
  const std::size_t bands = rasters.front()->bands();
  std::vector<double> lo(bands, std::numeric_limits<double>::infinity());
  std::vector<double> hi(bands, -std::numeric_limits<double>::infinity());
  for (const MultibandRaster* r : rasters) {
    if (r->bands() != bands) throw ShapeError("band count differs between rasters");
    for (std::size_t b = 0; b < bands; ++b) {
      const auto [mn, mx] = std::ranges::minmax(r->band(b));
      lo[b] = std::min(lo[b], static_cast<double>(mn));
      hi[b] = std::max(hi[b], static_cast<double>(mx));
    }
  }
  return NormalizationStats(std::move(lo), std::move(hi));
}

NormalizationStats NormalizationStats::fit(const MultibandRaster& raster) {
  const MultibandRaster* one[] = {&raster};
  return fit(one);
}

std::vector<unsigned char> encode_raster(const MultibandRaster& raster) {
  raster.check_finite();
  std::vector<unsigned char> out;
  out.reserve(kMbrfHeaderBytes + raster.size() * 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, narrow_u32(raster.width(), "width"));
  put_u32(out, narrow_u32(raster.height(), "height"));
  put_u32(out, narrow_u32(raster.bands(), "bands"));
  put_u32(out, kDtypeF32);
  for (float v : raster.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

MultibandRaster decode_raster(std::span<const unsigned char> bytes) {
  if (bytes.size() < kMbrfHeaderBytes) throw FormatError("MBRF header truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad MBRF magic (expected \"MBR1\")");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kVersion) throw FormatError("unsupported MBRF version " + std::to_string(version));
  const std::size_t width = get_u32(bytes, 8);
  const std::size_t height = get_u32(bytes, 12);
  const std::size_t bands = get_u32(bytes, 16);
  const std::uint32_t dtype = get_u32(bytes, 20);
  if (dtype != kDtypeF32) throw FormatError("unsupported MBRF dtype " + std::to_string(dtype));
  if (width < 1 || height < 1 || bands < 1) throw FormatError("MBRF header has a zero dimension");
  const std::size_t count = width * height * bands;
  const std::size_t expected = kMbrfHeaderBytes + count * 4;
  if (bytes.size() < expected) {
    std::ostringstream os;
    os << "MBRF payload truncated: " << bytes.size() << " of " << expected << " bytes";
    throw IoError(os.str());
  }
  if (bytes.size() > expected) throw FormatError("trailing bytes after MBRF payload");
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kMbrfHeaderBytes + 4 * i));
  }
  MultibandRaster raster(width, height, bands, std::move(data));
  raster.check_finite();
  return raster;
}

void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(is), {});
}

MultibandRaster load_raster(const std::filesystem::path& path) { return decode_raster(read_file(path)); }

void save_raster(const MultibandRaster& raster, const std::filesystem::path& path) {
  // Encode first so an invalid raster never leaves a file behind.
  const auto bytes = encode_raster(raster);
  write_file(path, bytes);
}

MultibandRaster normalize(const MultibandRaster& raster, const NormalizationStats& stats) {
  if (stats.bands() != raster.bands()) {
    throw ShapeError("stats cover " + std::to_string(stats.bands()) + " bands, raster has " +
                     std::to_string(raster.bands()));
  }
  MultibandRaster out = raster;
  for (std::size_t b = 0; b < raster.bands(); ++b) {
    const double lo = stats.min(b);
    const double span = stats.max(b) - lo;
    for (float& v : out.band(b)) v = static_cast<float>(std::clamp((v - lo) / span, 0.0, 1.0));
  }
  return out;
}

MultibandRaster denormalize(const MultibandRaster& raster, const NormalizationStats& stats) {
  if (stats.bands() != raster.bands()) {
    throw ShapeError("stats cover " + std::to_string(stats.bands()) + " bands, raster has " +
                     std::to_string(raster.bands()));
  }
  MultibandRaster out = raster;
  for (std::size_t b = 0; b < raster.bands(); ++b) {
    const double lo = stats.min(b);
    const double span = stats.max(b) - lo;
    for (float& v : out.band(b)) v = static_cast<float>(lo + v * span);
  }
  return out;
}

std::vector<unsigned char> band_to_gray(const MultibandRaster& raster, std::size_t band) {
  if (band >= raster.bands()) {
    throw IndexError("band " + std::to_string(band) + " out of range for " + std::to_string(raster.bands()) +
                     "-band raster");
  }
  const auto samples = raster.band(band);
  const auto [mn, mx] = std::ranges::minmax(samples);
  std::vector<unsigned char> gray(samples.size(), 0);
  if (mx > mn) {
    const double lo = mn;
    const double span = static_cast<double>(mx) - lo;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double scaled = (samples[i] - lo) / span * 255.0;
      gray[i] = static_cast<unsigned char>(std::clamp(std::floor(scaled + 0.5), 0.0, 255.0));
    }
  }
  return gray;
}

void band_to_grayscale(const MultibandRaster& raster, std::size_t band, const std::filesystem::path& path) {
  const auto gray = band_to_gray(raster, band);
  const std::string header =
      "P5\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), gray.begin(), gray.end());
  write_file(path, bytes);
}

}  // namespace sgc

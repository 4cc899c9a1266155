#include "unet.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "errors.hpp"
#include "raster.hpp"

namespace sgc {

using ad::Shape;
using ad::Tensor;
using ad::Var;

void UNetConfig::validate() const {
  if (input_channels < 1) throw ConfigError("input_channels must be >= 1");
  if (depth < 1) throw ConfigError("depth must be >= 1");
  if (base_channels < 1) throw ConfigError("base_channels must be >= 1");
  if (final_convs < 1) throw ConfigError("final_convs must be >= 1");
  if (depth > 16) throw ConfigError("depth " + std::to_string(depth) + " is unreasonably large");
  if (input_size == 0 || input_size % (1u << depth) != 0) {
    std::ostringstream os;
    os << "input_size " << input_size << " is not divisible by 2^depth = " << (1u << depth);
    throw ConfigError(os.str());
  }
  if (output_activation != OutputActivation::sigmoid) throw ConfigError("unknown output activation");
}

UNetConfig UNetConfig::tiny() {
  UNetConfig c;
  c.depth = 2;
  c.base_channels = 8;
  return c;
}

template <class T>
Var<T> UNetModel<T>::make_param(const std::string& name, Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor<T> value(std::move(shape));
  if (stddev > 0.0) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (auto& v : value.data()) v = static_cast<T>(dist(rng));
  }
  Var<T> var = Var<T>::leaf(std::move(value), true);
  params_.emplace_back(name, var);
  return var;
}

template <class T>
nn::ConvSpec<T> UNetModel<T>::make_conv(const std::string& name, std::size_t in, std::size_t out,
                                        std::mt19937_64& rng) {
  nn::ConvSpec<T> spec;
  spec.in_channels = in;
  spec.out_channels = out;
  const double fan_in = static_cast<double>(in * spec.kernel_height * spec.kernel_width);
  spec.weight = make_param(name + ".weight", {out, in, spec.kernel_height, spec.kernel_width},
                           std::sqrt(2.0 / fan_in), rng);
  spec.bias = make_param(name + ".bias", {out}, 0.0, rng);
  return spec;
}

template <class T>
nn::TransposeConvSpec<T> UNetModel<T>::make_up(const std::string& name, std::size_t in, std::mt19937_64& rng) {
  nn::TransposeConvSpec<T> spec;
  spec.in_channels = in;
  spec.out_channels = in / 2;
  // Each output pixel sees exactly one tap per input channel.
  spec.weight = make_param(name + ".weight", {in, in / 2, 2, 2}, std::sqrt(2.0 / static_cast<double>(in)), rng);
  spec.bias = make_param(name + ".bias", {in / 2}, 0.0, rng);
  return spec;
}

template <class T>
typename UNetModel<T>::Block UNetModel<T>::make_block(const std::string& name, std::size_t in, std::size_t out,
                                                      std::mt19937_64& rng) {
  Block b;
  b.first = make_conv(name + ".conv1", in, out, rng);
  b.second = make_conv(name + ".conv2", out, out, rng);
  return b;
}

template <class T>
UNetModel<T>::UNetModel(const UNetConfig& config) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  std::size_t in = config_.input_channels;
  for (std::uint32_t level = 0; level < config_.depth; ++level) {
    encoder_.push_back(make_block("enc" + std::to_string(level), in, config_.channels_at(level), rng));
    in = config_.channels_at(level);
  }
  bottleneck_ = make_block("bottleneck", in, config_.channels_at(config_.depth), rng);
  for (std::uint32_t level = config_.depth; level-- > 0;) {
    const std::string name = "dec" + std::to_string(level);
    UpBlock up;
    up.up = make_up(name + ".up", config_.channels_at(level + 1), rng);
    up.convs = make_block(name, 2 * config_.channels_at(level), config_.channels_at(level), rng);
    decoder_.push_back(std::move(up));
  }
  const std::size_t c0 = config_.channels_at(0);
  for (std::uint32_t k = 0; k < config_.final_convs; ++k) {
    const bool last = k + 1 == config_.final_convs;
    head_.push_back(make_conv("head.conv" + std::to_string(k + 1), c0, last ? config_.input_channels : c0, rng));
  }
}

template <class T>
std::vector<Var<T>> UNetModel<T>::parameter_vars() const {
  std::vector<Var<T>> out;
  out.reserve(params_.size());
  for (const auto& [name, var] : params_) out.push_back(var);
  return out;
}

template <class T>
std::size_t UNetModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, var] : params_) n += var.numel();
  return n;
}

template <class T>
Var<T> UNetModel<T>::parameter(const std::string& name) const {
  for (const auto& [n, var] : params_) {
    if (n == name) return var;
  }
  throw IndexError("no parameter named '" + name + "'");
}

template <class T>
UNetModel<T> UNetModel<T>::clone() const {
  UNetModel copy(config_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    copy.params_[i].second.mutable_value() = params_[i].second.value();
  }
  return copy;
}

template <class T>
Var<T> UNetModel<T>::forward(const Var<T>& batch, ForwardProbe* probe) const {
  const Shape& s = batch.shape();
  const Shape expected_tail{config_.input_channels, config_.input_size, config_.input_size};
  if (s.size() != 4 || Shape(s.begin() + 1, s.end()) != expected_tail || s[0] == 0) {
    throw ShapeError("U-Net expects [N," + std::to_string(config_.input_channels) + "," +
                     std::to_string(config_.input_size) + "," + std::to_string(config_.input_size) + "], got " +
                     ad::shape_str(s));
  }
  auto block = [](const Block& b, const Var<T>& x) {
    return nn::relu(nn::conv2d(nn::relu(nn::conv2d(x, b.first)), b.second));
  };

  std::vector<Var<T>> skips;
  Var<T> x = batch;
  for (const Block& b : encoder_) {
    x = block(b, x);
    skips.push_back(x);
    if (probe) probe->encoder.push_back(x.shape());
    x = nn::max_pool2d(x);
  }
  x = block(bottleneck_, x);
  if (probe) probe->bottleneck = x.shape();
  for (std::size_t i = 0; i < decoder_.size(); ++i) {
    const UpBlock& up = decoder_[i];
    Var<T> skip = skips[skips.size() - 1 - i];
    x = nn::transpose_conv2d(x, up.up);
    x = block(up.convs, nn::concat_channels(x, skip));
    if (probe) probe->decoder.push_back(x.shape());
  }
  for (std::size_t k = 0; k < head_.size(); ++k) {
    x = nn::conv2d(x, head_[k]);
    if (k + 1 < head_.size()) x = nn::relu(x);
  }
  return nn::sigmoid(x);
}

template class UNetModel<float>;
template class UNetModel<double>;

// Weights file ---------------------------------------------------------------

namespace {

constexpr char kWeightsMagic[4] = {'U', 'N', 'W', '1'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const unsigned char> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("weights file truncated while reading ") + what);
  }
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

UNetConfig read_config(Reader& r) {
  UNetConfig c;
  c.input_channels = r.u32("config");
  c.input_size = r.u32("config");
  c.depth = r.u32("config");
  c.base_channels = r.u32("config");
  c.final_convs = r.u32("config");
  c.output_activation = static_cast<OutputActivation>(r.u32("config"));
  c.seed = r.u32("config");
  return c;
}

void check_config_match(const UNetConfig& stored, const UNetConfig& expected) {
  auto cmp = [](const char* field, std::uint32_t got, std::uint32_t want) {
    if (got != want) {
      std::ostringstream os;
      os << "weights file has " << field << "=" << got << " but " << field << "=" << want << " was expected";
      throw ConfigError(os.str());
    }
  };
  cmp("input_channels", stored.input_channels, expected.input_channels);
  cmp("input_size", stored.input_size, expected.input_size);
  cmp("depth", stored.depth, expected.depth);
  cmp("base_channels", stored.base_channels, expected.base_channels);
  cmp("final_convs", stored.final_convs, expected.final_convs);
  cmp("output_activation", static_cast<std::uint32_t>(stored.output_activation),
      static_cast<std::uint32_t>(expected.output_activation));
}

}  // namespace

std::vector<unsigned char> encode_weights(const UNetModel<float>& model) {
  std::vector<unsigned char> out(kWeightsMagic, kWeightsMagic + 4);
  const UNetConfig& c = model.config();
  for (std::uint32_t v : {c.input_channels, c.input_size, c.depth, c.base_channels, c.final_convs,
                          static_cast<std::uint32_t>(c.output_activation), c.seed}) {
    put_u32(out, v);
  }
  for (const auto& [name, var] : model.parameters()) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(var.shape().size()));
    for (std::size_t d : var.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : var.value().data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

UNetModel<float> decode_weights(std::span<const unsigned char> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kWeightsMagic, 4) != 0) throw FormatError("bad weights magic (expected \"UNW1\")");
  const UNetConfig config = read_config(r);
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("weights file holds an invalid config: ") + e.what());
  }
  UNetModel<float> model(config);
  for (const auto& [name, var] : model.parameters()) {
    const std::uint32_t len = r.u32("record name length");
    auto raw = r.take(len, "record name");
    const std::string stored(raw.begin(), raw.end());
    if (stored != name) throw FormatError("expected parameter '" + name + "', found '" + stored + "'");
    const std::uint32_t rank = r.u32("record rank");
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.u32("record extents"));
    if (shape != var.shape()) {
      throw FormatError("parameter '" + name + "' has shape " + ad::shape_str(shape) + ", model expects " +
                        ad::shape_str(var.shape()));
    }
    Var<float> target = var;
    Tensor<float>& value = target.mutable_value();
    auto payload = r.take(value.numel() * 4, "record payload");
    for (std::size_t i = 0; i < value.numel(); ++i) {
      std::uint32_t u = 0;
      for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(payload[4 * i + k]) << (8 * k);
      value[i] = std::bit_cast<float>(u);
    }
  }
  if (!r.done()) throw FormatError("trailing bytes after the last weights record");
  return model;
}

void save_weights(const UNetModel<float>& model, const std::filesystem::path& path) {
  write_file(path, encode_weights(model));
}

UNetModel<float> load_weights(const std::filesystem::path& path) { return decode_weights(read_file(path)); }

UNetModel<float> load_weights(const std::filesystem::path& path, const UNetConfig& expected) {
  const auto bytes = read_file(path);
  Reader r(bytes);
  auto magic = r.take(4, "magic");
  if (std::memcmp(magic.data(), kWeightsMagic, 4) != 0) throw FormatError("bad weights magic (expected \"UNW1\")");
  check_config_match(read_config(r), expected);
  return decode_weights(bytes);
}

}  // namespace sgc

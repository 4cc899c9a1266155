#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nn.hpp"

namespace sgc {

enum class OutputActivation : std::uint32_t { sigmoid = 0 };

struct UNetConfig {
  std::uint32_t input_channels = 5;
  std::uint32_t input_size = 128;
  std::uint32_t depth = 4;          // pooling levels
  std::uint32_t base_channels = 16; // level 0; doubles per level
  std::uint32_t final_convs = 3;
  OutputActivation output_activation = OutputActivation::sigmoid;
  std::uint32_t seed = 0;

  // Throws ConfigError when the invariants do not hold.
  void validate() const;
  std::uint32_t channels_at(std::uint32_t level) const { return base_channels << level; }

  // Small preset used for desk-scale experiments.
  static UNetConfig tiny();

  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

// Spatial shapes seen at each level during a forward pass.
struct ForwardProbe {
  std::vector<ad::Shape> encoder;     // skip tensors, level 0 first
  ad::Shape bottleneck;
  std::vector<ad::Shape> decoder;     // decoder outputs, deepest first
};

template <class T>
class UNetModel {
 public:
  using Param = std::pair<std::string, ad::Var<T>>;

  explicit UNetModel(const UNetConfig& config);

  const UNetConfig& config() const noexcept { return config_; }
  const std::vector<Param>& parameters() const noexcept { return params_; }
  std::vector<ad::Var<T>> parameter_vars() const;
  std::size_t parameter_count() const;
  // Deep copy; the default copy shares parameter storage.
  UNetModel clone() const;
  ad::Var<T> parameter(const std::string& name) const;

  // [N, C, S, S] -> [N, C, S, S] with values in (0, 1).
  ad::Var<T> forward(const ad::Var<T>& batch, ForwardProbe* probe = nullptr) const;

 private:
  struct Block {
    nn::ConvSpec<T> first;
    nn::ConvSpec<T> second;
  };
  struct UpBlock {
    nn::TransposeConvSpec<T> up;
    Block convs;
  };

  ad::Var<T> make_param(const std::string& name, ad::Shape shape, double stddev, std::mt19937_64& rng);
  nn::ConvSpec<T> make_conv(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng);
  nn::TransposeConvSpec<T> make_up(const std::string& name, std::size_t in, std::mt19937_64& rng);
  Block make_block(const std::string& name, std::size_t in, std::size_t out, std::mt19937_64& rng);

  UNetConfig config_;
  std::vector<Block> encoder_;
  Block bottleneck_;
  std::vector<UpBlock> decoder_;  // deepest first
  std::vector<nn::ConvSpec<T>> head_;
  std::vector<Param> params_;
};

// Deterministic He-normal initialisation from config.seed.
template <class T>
UNetModel<T> build_unet(const UNetConfig& config) {
  return UNetModel<T>(config);
}

template <class T>
ad::Var<T> forward(const UNetModel<T>& model, const ad::Var<T>& batch) {
  return model.forward(batch);
}

// Weights file: "UNW1" | seven u32 config fields | records of
// (name length u32, UTF-8 name, rank u32, extents u32[rank], f32 payload).
std::vector<unsigned char> encode_weights(const UNetModel<float>& model);
UNetModel<float> decode_weights(std::span<const unsigned char> bytes);

void save_weights(const UNetModel<float>& model, const std::filesystem::path& path);
UNetModel<float> load_weights(const std::filesystem::path& path);
// Also checks the stored config against `expected`, naming the first differing field.
UNetModel<float> load_weights(const std::filesystem::path& path, const UNetConfig& expected);

}  // namespace sgc

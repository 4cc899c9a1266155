#pragma once

#include <string>

#include "data.hpp"
#include "harness.hpp"

namespace sgc {

// JSON text <-> config structs. Keys mirror the struct field names; any key
// may be omitted to keep its default. Unknown keys, wrong types and violated
// invariants raise ConfigError.
//
//   TrainConfig  {loss, epochs, batch_size, learning_rate, optimizer, seed, unet}
//   UNetConfig   {input_channels, input_size, depth, base_channels, final_convs,
//                 output_activation, seed}
//   DegradeSpec  {seed, shadow{count, angle_deg, width, spacing, attenuation, ramp},
//                 glint{count, radius_min, radius_max, brightness, falloff_sigma}}
//   DatasetSpec  {counts[3], window, stride, patch_size, shadow, glint, seed}
//   SceneSpec    {width, height, seed}
TrainConfig train_config_from_json(const std::string& text, const TrainConfig& defaults = {});
UNetConfig unet_config_from_json(const std::string& text, const UNetConfig& defaults = UNetConfig::tiny());
DegradeSpec degrade_spec_from_json(const std::string& text, const DegradeSpec& defaults = {});
DatasetSpec dataset_spec_from_json(const std::string& text, const DatasetSpec& defaults = {});
SceneSpec scene_spec_from_json(const std::string& text, const SceneSpec& defaults = {});

std::string to_json(const TrainConfig& c);
std::string to_json(const UNetConfig& c);
std::string to_json(const DegradeSpec& c);
std::string to_json(const DatasetSpec& c);
std::string to_json(const SceneSpec& c);

}  // namespace sgc

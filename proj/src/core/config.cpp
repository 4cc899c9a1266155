#include "config.hpp"

#include <json.hpp>
#include <limits>
#include <set>
#include <type_traits>

#include "errors.hpp"

namespace sgc {

using nlohmann::json;

namespace {

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

// Reads known keys out of one JSON object and rejects the rest.
class Fields {
 public:
  Fields(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw ConfigError(what_ + " must be a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    const std::string where = what_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(where + " must be a boolean");
      out = it->get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_unsigned()) throw ConfigError(where + " must be a non-negative integer");
      const auto v = it->get<std::uint64_t>();
      if (v > std::numeric_limits<T>::max()) throw ConfigError(where + " is out of range");
      out = static_cast<T>(v);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) throw ConfigError(where + " must be a number");
      out = it->get<double>();
    } else {
      if (!it->is_string()) throw ConfigError(where + " must be a string");
      out = it->get<std::string>();
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + what_);
    }
  }

 private:
  const json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

UNetConfig read_unet(const json& j, UNetConfig c) {
  Fields f(j, "unet");
  f.get("input_channels", c.input_channels);
  f.get("input_size", c.input_size);
  f.get("depth", c.depth);
  f.get("base_channels", c.base_channels);
  f.get("final_convs", c.final_convs);
  std::string act = "sigmoid";
  f.get("output_activation", act);
  if (act != "sigmoid") throw ConfigError("unet.output_activation must be \"sigmoid\"");
  f.get("seed", c.seed);
  f.finish();
  c.validate();
  return c;
}

ShadowSpec read_shadow(const json& j, ShadowSpec s) {
  Fields f(j, "shadow");
  f.get("count", s.count);
  f.get("angle_deg", s.angle_deg);
  f.get("width", s.width);
  f.get("spacing", s.spacing);
  f.get("attenuation", s.attenuation);
  f.get("ramp", s.ramp);
  f.finish();
  return s;
}

GlintSpec read_glint(const json& j, GlintSpec g) {
  Fields f(j, "glint");
  f.get("count", g.count);
  f.get("radius_min", g.radius_min);
  f.get("radius_max", g.radius_max);
  f.get("brightness", g.brightness);
  f.get("falloff_sigma", g.falloff_sigma);
  f.finish();
  return g;
}

json unet_json(const UNetConfig& c) {
  return {{"input_channels", c.input_channels}, {"input_size", c.input_size},   {"depth", c.depth},
          {"base_channels", c.base_channels},   {"final_convs", c.final_convs}, {"output_activation", "sigmoid"},
          {"seed", c.seed}};
}

json shadow_json(const ShadowSpec& s) {
  return {{"count", s.count},   {"angle_deg", s.angle_deg},     {"width", s.width},
          {"spacing", s.spacing}, {"attenuation", s.attenuation}, {"ramp", s.ramp}};
}

json glint_json(const GlintSpec& g) {
  return {{"count", g.count},
          {"radius_min", g.radius_min},
          {"radius_max", g.radius_max},
          {"brightness", g.brightness},
          {"falloff_sigma", g.falloff_sigma}};
}

}  // namespace

TrainConfig train_config_from_json(const std::string& text, const TrainConfig& defaults) {
  const json j = parse(text, "train config");
  TrainConfig c = defaults;
  Fields f(j, "train config");
  std::string loss = loss_name(c.loss);
  std::string optimizer = ad::optimizer_name(c.optimizer);
  f.get("loss", loss);
  f.get("epochs", c.epochs);
  f.get("batch_size", c.batch_size);
  f.get("learning_rate", c.learning_rate);
  f.get("optimizer", optimizer);
  f.get("seed", c.seed);
  if (const json* u = f.child("unet")) c.unet = read_unet(*u, c.unet);
  f.finish();
  c.loss = parse_loss(loss);
  c.optimizer = ad::parse_optimizer(optimizer);
  c.validate();
  return c;
}

UNetConfig unet_config_from_json(const std::string& text, const UNetConfig& defaults) {
  return read_unet(parse(text, "unet config"), defaults);
}

DegradeSpec degrade_spec_from_json(const std::string& text, const DegradeSpec& defaults) {
  const json j = parse(text, "degrade spec");
  DegradeSpec d = defaults;
  Fields f(j, "degrade spec");
  f.get("seed", d.seed);
  if (const json* s = f.child("shadow")) d.shadow = read_shadow(*s, d.shadow);
  if (const json* g = f.child("glint")) d.glint = read_glint(*g, d.glint);
  f.finish();
  d.validate();
  return d;
}

DatasetSpec dataset_spec_from_json(const std::string& text, const DatasetSpec& defaults) {
  const json j = parse(text, "dataset spec");
  DatasetSpec d = defaults;
  Fields f(j, "dataset spec");
  if (const json* counts = f.child("counts")) {
    if (!counts->is_array() || counts->size() != 3) {
      throw ConfigError("dataset spec.counts must list three integers (shadow, glint, both)");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(*counts)[i].is_number_unsigned()) throw ConfigError("dataset spec.counts must be non-negative integers");
      d.counts[i] = (*counts)[i].get<std::size_t>();
    }
  }
  f.get("window", d.window);
  f.get("stride", d.stride);
  f.get("patch_size", d.patch_size);
  f.get("seed", d.seed);
  if (const json* s = f.child("shadow")) d.shadow = read_shadow(*s, d.shadow);
  if (const json* g = f.child("glint")) d.glint = read_glint(*g, d.glint);
  f.finish();
  DegradeSpec{d.shadow, d.glint, 0}.validate();
  if (d.window == 0 || d.stride == 0 || d.patch_size == 0) {
    throw ConfigError("dataset window, stride and patch_size must be positive");
  }
  return d;
}

SceneSpec scene_spec_from_json(const std::string& text, const SceneSpec& defaults) {
  const json j = parse(text, "scene spec");
  SceneSpec s = defaults;
  Fields f(j, "scene spec");
  f.get("width", s.width);
  f.get("height", s.height);
  f.get("seed", s.seed);
  f.finish();
  if (s.width == 0 || s.height == 0) throw ConfigError("scene width and height must be positive");
  return s;
}

std::string to_json(const TrainConfig& c) {
  const json j = {{"loss", loss_name(c.loss)},
                  {"epochs", c.epochs},
                  {"batch_size", c.batch_size},
                  {"learning_rate", c.learning_rate},
                  {"optimizer", ad::optimizer_name(c.optimizer)},
                  {"seed", c.seed},
                  {"unet", unet_json(c.unet)}};
  return j.dump(2);
}

std::string to_json(const UNetConfig& c) { return unet_json(c).dump(2); }

std::string to_json(const DegradeSpec& c) {
  const json j = {{"seed", c.seed}, {"shadow", shadow_json(c.shadow)}, {"glint", glint_json(c.glint)}};
  return j.dump(2);
}

std::string to_json(const DatasetSpec& c) {
  const json j = {{"counts", c.counts},     {"window", c.window}, {"stride", c.stride},
                  {"patch_size", c.patch_size}, {"shadow", shadow_json(c.shadow)}, {"glint", glint_json(c.glint)},
                  {"seed", c.seed}};
  return j.dump(2);
}

std::string to_json(const SceneSpec& c) {
  const json j = {{"width", c.width}, {"height", c.height}, {"seed", c.seed}};
  return j.dump(2);
}

}  // namespace sgc

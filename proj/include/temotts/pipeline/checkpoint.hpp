#pragma once

// Checkpoint bundles. Stage I holds the acoustic model, the style network and
// the phoneme inventory in one file; the adaptation checkpoint additionally
// records the stage-I file fingerprint and the emotion-provider identity so
// incompatible artifact combinations are rejected at load time.

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "temotts/acoustic/model.hpp"
#include "temotts/adaptation/net.hpp"
#include "temotts/core/serialize.hpp"
#include "temotts/corpus/g2p.hpp"
#include "temotts/style/gst.hpp"

namespace temotts::pipeline {

inline constexpr int kStage1Schema = 1;
inline constexpr int kAdaptationSchema = 1;

struct Stage1Bundle {
  acoustic::AcousticConfig acoustic_cfg;
  style::StyleConfig style_cfg;
  corpus::PhonemeInventory inventory;
  acoustic::AcousticModel acoustic;
  style::GstModel gst;
  std::size_t step = 0;
  nlohmann::json val_metrics;
  std::string source_fingerprint;  // fingerprint of the file this was loaded from

  nn::ParamMap params() const {
    nn::ParamMap pm;
    acoustic.params(pm, "acoustic");
    gst.params(pm, "style");
    return pm;
  }
};

inline Stage1Bundle make_stage1_bundle(const acoustic::AcousticConfig& acfg,
                                       const style::StyleConfig& scfg,
                                       const corpus::PhonemeInventory& inventory,
                                       std::uint64_t seed) {
  if (acfg.d_model != scfg.d_style)
    throw Error("style d_style " + std::to_string(scfg.d_style) + " must equal acoustic d_model " +
                std::to_string(acfg.d_model));
  Stage1Bundle b{acfg,
                 scfg,
                 inventory,
                 acoustic::AcousticModel(),
                 style::GstModel(),
                 0,
                 nlohmann::json::object(),
                 ""};
  Rng rng(seed);
  Rng a_rng = rng.derive("acoustic");
  Rng s_rng = rng.derive("style");
  b.acoustic = acoustic::AcousticModel(acfg, inventory.size(), a_rng);
  b.gst = style::GstModel(scfg, s_rng);
  return b;
}

inline void save_stage1(const std::filesystem::path& path, const Stage1Bundle& bundle) {
  TensorStore store;
  store.meta["schema"] = kStage1Schema;
  store.meta["kind"] = "stage1";
  store.meta["acoustic_config"] = bundle.acoustic_cfg.to_json();
  store.meta["style_config"] = bundle.style_cfg.to_json();
  store.meta["inventory"] = bundle.inventory.to_json();
  store.meta["step"] = bundle.step;
  store.meta["val_metrics"] = bundle.val_metrics;
  save_params(store, bundle.params());
  save_tensor_store(path, store);
}

inline Stage1Bundle load_stage1(const std::filesystem::path& path) {
  TensorStore store = load_tensor_store(path);
  if (store.meta.value("kind", "") != "stage1")
    throw Error(path.string() + ": not a stage-I checkpoint");
  if (store.meta.value("schema", -1) != kStage1Schema)
    throw Error(path.string() + ": unsupported stage-I checkpoint schema");

  auto acfg = acoustic::AcousticConfig::from_json(store.meta.at("acoustic_config"));
  auto scfg = style::StyleConfig::from_json(store.meta.at("style_config"));
  auto inventory = corpus::PhonemeInventory::from_json(store.meta.at("inventory"));

  Stage1Bundle b = make_stage1_bundle(acfg, scfg, inventory, 0);
  b.step = store.meta.value("step", std::size_t{0});
  b.val_metrics = store.meta.value("val_metrics", nlohmann::json::object());

  nn::ParamMap pm = b.params();
  load_params(store, pm);
  b.source_fingerprint = file_fingerprint(path);
  return b;
}

struct AdaptationBundle {
  adaptation::AdaptationConfig cfg;
  adaptation::AdaptationNet net;
  std::string provider_id;
  std::string stage1_fingerprint;
  nlohmann::json train_metrics;
};

inline void save_adaptation(const std::filesystem::path& path, const AdaptationBundle& bundle) {
  TensorStore store;
  store.meta["schema"] = kAdaptationSchema;
  store.meta["kind"] = "adaptation";
  store.meta["config"] = bundle.cfg.to_json();
  store.meta["input_dim"] = bundle.net.input_dim();
  store.meta["provider_id"] = bundle.provider_id;
  store.meta["stage1_fingerprint"] = bundle.stage1_fingerprint;
  store.meta["train_metrics"] = bundle.train_metrics;
  nn::ParamMap pm;
  bundle.net.params(pm);
  save_params(store, pm);
  save_tensor_store(path, store);
}

inline AdaptationBundle load_adaptation(const std::filesystem::path& path) {
  TensorStore store = load_tensor_store(path);
  if (store.meta.value("kind", "") != "adaptation")
    throw Error(path.string() + ": not an adaptation checkpoint");
  if (store.meta.value("schema", -1) != kAdaptationSchema)
    throw Error(path.string() + ": unsupported adaptation checkpoint schema");

  AdaptationBundle b;
  b.cfg = adaptation::AdaptationConfig::from_json(store.meta.at("config"));
  const auto input_dim = store.meta.at("input_dim").get<std::size_t>();
  Rng rng(0);
  b.net = adaptation::AdaptationNet(b.cfg, input_dim, rng);
  b.provider_id = store.meta.value("provider_id", "");
  b.stage1_fingerprint = store.meta.value("stage1_fingerprint", "");
  b.train_metrics = store.meta.value("train_metrics", nlohmann::json::object());

  nn::ParamMap pm;
  b.net.params(pm);
  load_params(store, pm);
  return b;
}

}  // namespace temotts::pipeline

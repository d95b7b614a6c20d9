#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "readapt/data/io.hpp"
#include "readapt/errors.hpp"

namespace readapt {

enum class ModelVariant {
  kBaselineFinetune,
  kBaselineFrozen,
  kFrozenPlusMapping,
  kBasicAdapter,
  kBasicAdapterRecon,
  kAdversarialAdapter,
  kAdversarialAdapterRecon,
};

inline constexpr std::array<ModelVariant, 7> kAllVariants = {
    ModelVariant::kBaselineFinetune,   ModelVariant::kBaselineFrozen,
    ModelVariant::kFrozenPlusMapping,  ModelVariant::kBasicAdapter,
    ModelVariant::kBasicAdapterRecon,  ModelVariant::kAdversarialAdapter,
    ModelVariant::kAdversarialAdapterRecon};

inline const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::kBaselineFinetune: return "baseline-finetune";
    case ModelVariant::kBaselineFrozen: return "baseline-frozen";
    case ModelVariant::kFrozenPlusMapping: return "frozen-plus-mapping";
    case ModelVariant::kBasicAdapter: return "basic-adapter";
    case ModelVariant::kBasicAdapterRecon: return "basic-adapter-recon";
    case ModelVariant::kAdversarialAdapter: return "adversarial-adapter";
    case ModelVariant::kAdversarialAdapterRecon: return "adversarial-adapter-recon";
  }
  return "?";
}

inline ModelVariant parse_variant(std::string_view s) {
  for (auto v : kAllVariants)
    if (s == variant_name(v)) return v;
  if (s == "final") return ModelVariant::kAdversarialAdapterRecon;
  throw ContractError("unknown model variant '" + std::string(s) + "'");
}

inline bool has_mapping(ModelVariant v) {
  return v != ModelVariant::kBaselineFinetune && v != ModelVariant::kBaselineFrozen;
}
inline bool uses_mse(ModelVariant v) {
  return v == ModelVariant::kBasicAdapter || v == ModelVariant::kBasicAdapterRecon;
}
inline bool uses_adversary(ModelVariant v) {
  return v == ModelVariant::kAdversarialAdapter || v == ModelVariant::kAdversarialAdapterRecon;
}
inline bool uses_reconstruction(ModelVariant v) {
  return v == ModelVariant::kBasicAdapterRecon || v == ModelVariant::kAdversarialAdapterRecon;
}
/// Variants trained against pseudo targets from a pretrained baseline.
inline bool needs_targets(ModelVariant v) { return uses_mse(v) || uses_adversary(v); }

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 256;
  std::size_t negatives = 256;
  double margin = 0.1;
  double clip = 0.1;
  double dropout = 0.2;
  double adapter_weight = 1.0;
  double reconstruction_weight = 1.0;
  std::size_t critic_steps = 5;
  std::size_t critic_hidden = 256;
  std::size_t hidden = 256;
  std::size_t epochs = 20;
  std::size_t patience = 5;
  double rmsprop_rho = 0.9;
  double rmsprop_eps = 1e-8;
  bool adapter_bias = false;
  bool negatives_from_all = false;  // negative pool: all relations instead of Train relations
  std::uint64_t seed = 1;

  void validate() const {
    require(margin > 0.0, "train config: margin must be positive");
    require(negatives >= 1, "train config: need at least one negative sample");
    require(clip > 0.0, "train config: clip bound must be positive");
    require(learning_rate > 0.0, "train config: learning rate must be positive");
    require(batch_size >= 1, "train config: batch size must be positive");
    require(dropout >= 0.0 && dropout < 1.0, "train config: dropout must lie in [0,1)");
    require(adapter_weight >= 0.0 && reconstruction_weight >= 0.0,
            "train config: loss weights must be non-negative");
    require(critic_steps >= 1 && critic_hidden >= 1 && hidden >= 1 && epochs >= 1,
            "train config: counts must be positive");
  }

  /// Flat key -> text form, used by checkpoints and resolved-config dumps.
  std::map<std::string, std::string> to_map() const {
    return {{"learning_rate", format_real(learning_rate)},
            {"batch_size", std::to_string(batch_size)},
            {"negatives", std::to_string(negatives)},
            {"margin", format_real(margin)},
            {"clip", format_real(clip)},
            {"dropout", format_real(dropout)},
            {"adapter_weight", format_real(adapter_weight)},
            {"reconstruction_weight", format_real(reconstruction_weight)},
            {"critic_steps", std::to_string(critic_steps)},
            {"critic_hidden", std::to_string(critic_hidden)},
            {"hidden", std::to_string(hidden)},
            {"epochs", std::to_string(epochs)},
            {"patience", std::to_string(patience)},
            {"rmsprop_rho", format_real(rmsprop_rho)},
            {"rmsprop_eps", format_real(rmsprop_eps)},
            {"adapter_bias", adapter_bias ? "1" : "0"},
            {"negative_pool", negatives_from_all ? "all" : "train"},
            {"seed", std::to_string(seed)}};
  }

  /// Sets one field from text; returns false for unknown keys.
  bool set(const std::string& key, const std::string& value) {
    auto real = [&](double& f) {
      if (!parse_real(value, f)) throw ContractError("config: '" + key + "' expects a number");
    };
    auto count = [&](std::size_t& f) {
      if (!parse_size(value, f)) throw ContractError("config: '" + key + "' expects a count");
    };
    if (key == "learning_rate") real(learning_rate);
    else if (key == "batch_size") count(batch_size);
    else if (key == "negatives") count(negatives);
    else if (key == "margin") real(margin);
    else if (key == "clip") real(clip);
    else if (key == "dropout") real(dropout);
    else if (key == "adapter_weight") real(adapter_weight);
    else if (key == "reconstruction_weight") real(reconstruction_weight);
    else if (key == "critic_steps") count(critic_steps);
    else if (key == "critic_hidden") count(critic_hidden);
    else if (key == "hidden") count(hidden);
    else if (key == "epochs") count(epochs);
    else if (key == "patience") count(patience);
    else if (key == "rmsprop_rho") real(rmsprop_rho);
    else if (key == "rmsprop_eps") real(rmsprop_eps);
    else if (key == "adapter_bias") {
      if (value != "0" && value != "1" && value != "true" && value != "false")
        throw ContractError("config: 'adapter_bias' expects 0/1");
      adapter_bias = value == "1" || value == "true";
    } else if (key == "negative_pool") {
      if (value != "train" && value != "all") throw ContractError("config: 'negative_pool' expects train or all");
      negatives_from_all = value == "all";
    } else if (key == "seed") {
      std::size_t s = 0;
      count(s);
      seed = s;
    } else {
      return false;
    }
    return true;
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

}  // namespace readapt

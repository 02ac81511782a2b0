#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "pairfeat/frontend.hpp"
#include "pairfeat/model.hpp"
#include "pairfeat/pair_loss.hpp"
#include "pairfeat/trainer.hpp"

namespace pairfeat {

struct EvalConfig {
  double test_fraction = 0.25;
  double perplexity = 30.0;
  int tsne_iters = 1000;
  double tsne_learning_rate = 200.0;
  int clusters = 0;  // 0 = one cluster per category
  int kmeans_restarts = 10;
  int classifier_iters = 500;
  double classifier_lr = 0.1;
  bool classify_pooled = false;      // classify the raw pooled vector instead
  bool cluster_on_features = false;  // cluster K-dim rows instead of the 2D embedding

  void validate() const;
  bool operator==(const EvalConfig&) const = default;
};

/// Everything one run needs, parsed from a single INI-style file with
/// [frontend], [model], [pair_loss], [training] and [evaluation] sections.
struct RunConfig {
  FrontendConfig frontend;
  ModelConfig model;
  TrainingConfig training;  // holds the PairLossConfig
  EvalConfig eval;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Parses `key = value` lines under [section] headers; '#' and ';' start
/// comments. Unknown sections or keys are errors.
RunConfig parse_run_config_text(const std::string& text);
RunConfig parse_run_config_file(const std::string& path);

/// Canonical INI rendering: fixed section/key order, every value explicit.
std::string serialize_run_config(const RunConfig& config);

/// FNV-1a hash (hex) of the canonical rendering.
std::string config_hash(const RunConfig& config);

// JSON bindings for the report/manifest/checkpoint headers.
void to_json(nlohmann::json& j, const FrontendConfig& c);
void from_json(const nlohmann::json& j, FrontendConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const PairLossConfig& c);
void from_json(const nlohmann::json& j, PairLossConfig& c);
void to_json(nlohmann::json& j, const TrainingConfig& c);
void from_json(const nlohmann::json& j, TrainingConfig& c);
void to_json(nlohmann::json& j, const EvalConfig& c);
void from_json(const nlohmann::json& j, EvalConfig& c);
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);
void to_json(nlohmann::json& j, const NormParams& p);
void from_json(const nlohmann::json& j, NormParams& p);

}  // namespace pairfeat

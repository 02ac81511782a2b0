#pragma once

#include <map>
#include <optional>
#include <string>

#include "pairfeat/config.hpp"
#include "pairfeat/frontend.hpp"
#include "pairfeat/model.hpp"
#include "pairfeat/trainer.hpp"

namespace pairfeat {

/// Resumable trainer progress stored next to the weights.
struct TrainerState {
  std::string mode;  // "pairloss" or "baseline"
  int epochs_done = 0;
  int64_t steps = 0;
  int64_t adam_t = 0;
  TrainingConfig config;
  TrainingLog log;
};

/// Checkpoint container: magic "PFCK", u32 version, u64 header length, a JSON
/// header (model config, frontend config, normalization params, optional
/// trainer state) and named little-endian float64 tensors. A load alone
/// reproduces inference: the header carries everything the frontend needs.
struct Checkpoint {
  ModelConfig model_config;
  FrontendConfig frontend_config;
  NormParams norm;
  std::optional<TrainerState> trainer;
  std::map<std::string, Tensor> tensors;
};

void save_checkpoint(const std::string& path, FramePredictor& model,
                     const FrontendConfig& frontend, const NormParams& norm,
                     const TrainerState* trainer_state = nullptr,
                     Adam* optimizer = nullptr);

Checkpoint read_checkpoint(const std::string& path);

/// Copies the checkpoint's tensors into an existing model. Throws if the
/// stored ModelConfig differs from the model's.
void load_weights_into(FramePredictor& model, const Checkpoint& ckpt);
void load_weights_into(FramePredictor& model, const std::string& path);

/// Builds a model from the embedded config and restores its weights.
FramePredictor load_model(const Checkpoint& ckpt);

/// Restores Adam moments from the checkpoint tensors ("adam.m.*", "adam.v.*").
void restore_optimizer(Adam& optimizer, const Checkpoint& ckpt);

}  // namespace pairfeat

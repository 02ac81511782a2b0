#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pairfeat/frontend.hpp"
#include "pairfeat/model.hpp"
#include "pairfeat/pair_loss.hpp"

namespace pairfeat {

struct TrainingConfig {
  int batch_size = 16;
  int stage1_epochs = 6;    // frame-prediction MSE only
  int stage2_epochs = 3;    // MSE + pairwise loss, jointly
  int baseline_epochs = 9;  // MSE only, single stage
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  uint64_t seed = 1;
  /// Carry optimizer moments from stage 1 into stage 2 (default) or reset.
  bool reset_optimizer_stage2 = false;
  PairLossConfig pair;

  void validate() const;
  bool operator==(const TrainingConfig&) const = default;
};

struct EpochRecord {
  int epoch = 0;          // 1-based, monotone across stages
  std::string stage;      // "mse" or "mse+pair"
  double mse = 0.0;       // epoch mean
  double pair_loss = 0.0; // epoch mean; 0 when the term is not optimized
  double seconds = 0.0;   // wall time, not part of any determinism contract
};

struct TrainingLog {
  std::vector<EpochRecord> records;
  void write_csv(const std::string& path) const;
};

/// Mean over all cells of the squared difference. Throws on shape mismatch.
double mse_loss(const Tensor& predicted, const Tensor& target);

/// Adam with bias correction. Moment state is keyed by parameter name so
/// checkpoints stay valid if parameter enumeration order ever changes.
class Adam {
 public:
  Adam() = default;
  Adam(double lr, double beta1, double beta2, double epsilon)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(epsilon) {}

  void step(const std::vector<ParamRef>& params);
  void reset() { m_.clear(); v_.clear(); t_ = 0; }

  int64_t t() const { return t_; }
  void set_t(int64_t t) { t_ = t; }
  std::map<std::string, Tensor>& m() { return m_; }
  std::map<std::string, Tensor>& v() { return v_; }

 private:
  double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

enum class TrainMode { pairloss, baseline };

std::string train_mode_name(TrainMode mode);
TrainMode train_mode_from_name(const std::string& name);

/// Owns the full training procedure over one model: epoch scheduling,
/// seeded shuffling, the gradient step, logging, and resumable state. The
/// trailing partial batch of each epoch is dropped so the pair statistics
/// always see a full batch.
class Trainer {
 public:
  Trainer(FramePredictor& model, const TrainingConfig& config);

  /// Runs the remaining epochs for `mode` (all of them on a fresh trainer).
  /// Returns the accumulated log.
  const TrainingLog& train(TrainMode mode, const std::vector<FrameSequence>& sequences);

  const TrainingLog& log() const { return log_; }
  int64_t steps() const { return steps_; }
  int epochs_done() const { return epochs_done_; }
  const TrainingConfig& config() const { return cfg_; }
  FramePredictor& model() { return model_; }

  // resumable state, used by checkpoint io
  Adam& optimizer() { return adam_; }
  void restore_progress(int epochs_done, int64_t steps, TrainingLog log) {
    epochs_done_ = epochs_done;
    steps_ = steps;
    log_ = std::move(log);
  }

 private:
  struct Batch {
    Tensor inputs;   // (N, 3, H, W)
    Tensor targets;  // (N, H, W)
  };
  Batch make_batch(const std::vector<FrameSequence>& sequences,
                   const std::vector<size_t>& order, size_t first) const;
  /// One optimizer step; returns (mse, pair) of the batch.
  std::pair<double, double> step_batch(const Batch& batch, bool with_pair);

  FramePredictor& model_;
  TrainingConfig cfg_;
  Adam adam_;
  TrainingLog log_;
  int64_t steps_ = 0;
  int epochs_done_ = 0;
};

}  // namespace pairfeat

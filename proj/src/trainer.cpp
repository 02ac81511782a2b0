#include "pairfeat/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "pairfeat/rng.hpp"

namespace pairfeat {

void TrainingConfig::validate() const {
  if (batch_size < 2)
    throw std::invalid_argument("training: batch_size must be >= 2 (the pair loss needs pairs)");
  if (stage1_epochs < 0 || stage2_epochs < 0 || baseline_epochs < 0)
    throw std::invalid_argument("training: epoch counts must be >= 0");
  if (learning_rate <= 0) throw std::invalid_argument("training: learning_rate must be > 0");
  pair.validate();
}

double mse_loss(const Tensor& predicted, const Tensor& target) {
  if (!predicted.same_shape(target))
    throw std::invalid_argument("mse_loss: shape mismatch " + predicted.shape_str() +
                                " vs " + target.shape_str());
  if (predicted.size() == 0) throw std::invalid_argument("mse_loss: empty input");
  double acc = 0.0;
  for (int64_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(predicted.size());
}

void TrainingLog::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("training log: cannot write " + path);
  out << "epoch,stage,mse,pair_loss,seconds\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.17g,%.17g,%.3f\n", r.epoch,
                  r.stage.c_str(), r.mse, r.pair_loss, r.seconds);
    out << buf;
  }
}

void Adam::step(const std::vector<ParamRef>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (const auto& p : params) {
    Tensor& m = m_[p.name];
    Tensor& v = v_[p.name];
    if (m.size() != p.value->size()) m = Tensor(p.value->shape());
    if (v.size() != p.value->size()) v = Tensor(p.value->shape());
    for (int64_t i = 0; i < p.value->size(); ++i) {
      const double g = (*p.grad)[i];
      m[i] = b1_ * m[i] + (1.0 - b1_) * g;
      v[i] = b2_ * v[i] + (1.0 - b2_) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      (*p.value)[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

std::string train_mode_name(TrainMode mode) {
  return mode == TrainMode::pairloss ? "pairloss" : "baseline";
}

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "pairloss") return TrainMode::pairloss;
  if (name == "baseline") return TrainMode::baseline;
  throw std::invalid_argument("unknown training mode: " + name);
}

Trainer::Trainer(FramePredictor& model, const TrainingConfig& config)
    : model_(model), cfg_(config) {
  cfg_.validate();
  adam_ = Adam(cfg_.learning_rate, cfg_.adam_beta1, cfg_.adam_beta2,
               cfg_.adam_epsilon);
}

Trainer::Batch Trainer::make_batch(const std::vector<FrameSequence>& sequences,
                                   const std::vector<size_t>& order,
                                   size_t first) const {
  const int64_t N = cfg_.batch_size;
  const auto& probe = sequences[order[first]];
  const int64_t H = probe.inputs[0].values.dim(0);
  const int64_t W = probe.inputs[0].values.dim(1);
  Batch b{Tensor({N, 3, H, W}), Tensor({N, H, W})};
  for (int64_t n = 0; n < N; ++n) {
    const auto& seq = sequences[order[first + static_cast<size_t>(n)]];
    for (int64_t t = 0; t < 3; ++t)
      std::memcpy(b.inputs.data() + (n * 3 + t) * H * W,
                  seq.inputs[static_cast<size_t>(t)].values.data(),
                  static_cast<size_t>(H * W) * sizeof(double));
    std::memcpy(b.targets.data() + n * H * W, seq.target.values.data(),
                static_cast<size_t>(H * W) * sizeof(double));
  }
  return b;
}

std::pair<double, double> Trainer::step_batch(const Batch& batch,
                                              bool with_pair) {
  FramePredictor::Workspace ws;
  FramePredictor::Output out = model_.forward_train(batch.inputs, ws);

  const double mse = mse_loss(out.prediction, batch.targets);
  Tensor dpred(out.prediction.shape());
  const double scale = 2.0 / static_cast<double>(out.prediction.size());
  for (int64_t i = 0; i < dpred.size(); ++i)
    dpred[i] = scale * (out.prediction[i] - batch.targets[i]);

  double pair = 0.0;
  Tensor dfeat;
  if (with_pair) {
    BatchPairLossResult pl = batch_pair_loss(out.distribution, cfg_.pair, true);
    pair = pl.value;
    Tensor dv = softmax_rows_backward(out.distribution, pl.d_distributions);
    dfeat = Tensor(dv.shape());
    for (int64_t i = 0; i < dv.size(); ++i) dfeat[i] = cfg_.pair.lambda * dv[i];
  }

  model_.zero_grads();
  model_.backward(ws, dpred, dfeat);
  adam_.step(model_.parameters());
  ++steps_;
  return {mse, pair};
}

const TrainingLog& Trainer::train(TrainMode mode,
                                  const std::vector<FrameSequence>& sequences) {
  if (static_cast<int>(sequences.size()) < cfg_.batch_size)
    throw std::invalid_argument(
        "trainer: dataset has " + std::to_string(sequences.size()) +
        " sequences, need at least one batch of " + std::to_string(cfg_.batch_size));

  const int total_epochs = mode == TrainMode::pairloss
                               ? cfg_.stage1_epochs + cfg_.stage2_epochs
                               : cfg_.baseline_epochs;
  std::vector<size_t> order(sequences.size());
  const size_t batches = sequences.size() / static_cast<size_t>(cfg_.batch_size);

  for (int epoch = epochs_done_ + 1; epoch <= total_epochs; ++epoch) {
    const bool stage2 = mode == TrainMode::pairloss && epoch > cfg_.stage1_epochs;
    if (stage2 && epoch == cfg_.stage1_epochs + 1 && cfg_.reset_optimizer_stage2)
      adam_.reset();

    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(mix_seed(mix_seed(cfg_.seed, 0x73687566666cULL),
                     static_cast<uint64_t>(epoch)));
    rng.shuffle(order);

    double mse_sum = 0.0, pair_sum = 0.0;
    for (size_t b = 0; b < batches; ++b) {
      const Batch batch =
          make_batch(sequences, order, b * static_cast<size_t>(cfg_.batch_size));
      const auto [mse, pair] = step_batch(batch, stage2);
      if (!std::isfinite(mse) || !std::isfinite(pair))
        throw std::runtime_error(
            "trainer: non-finite loss at epoch " + std::to_string(epoch) +
            ", batch " + std::to_string(b) + " (mse=" + std::to_string(mse) +
            ", pair=" + std::to_string(pair) + ")");
      mse_sum += mse;
      pair_sum += pair;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.stage = stage2 ? "mse+pair" : "mse";
    rec.mse = mse_sum / static_cast<double>(batches);
    rec.pair_loss = stage2 ? pair_sum / static_cast<double>(batches) : 0.0;
    rec.seconds = secs;
    log_.records.push_back(std::move(rec));
    epochs_done_ = epoch;
  }
  return log_;
}

}  // namespace pairfeat

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stf/data.hpp"
#include "stf/model.hpp"

namespace stf {

enum class OptimizerKind { kAdam, kSgd };
enum class LossKind { kMae, kMse };

std::string to_string(OptimizerKind kind);
std::string to_string(LossKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& s);
LossKind loss_kind_from_string(const std::string& s);

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 64;  // windows per step
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::kAdam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double sgd_momentum = 0.0;
    LossKind loss = LossKind::kMae;
    std::size_t patience = 10;  // epochs without val improvement before stopping
    std::uint64_t seed = 0;
    double clip_norm = 0.0;  // 0 disables gradient clipping

    void validate() const;
};

struct EpochRow {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_mae = 0.0;
};

struct TrainReport {
    std::vector<EpochRow> epochs;
    std::size_t best_epoch = 0;  // 1-based epoch with minimum val MAE
    double best_val_mae = 0.0;
    double wall_seconds = 0.0;
};

// Bias-corrected Adam. State tensors match the parameter layout; step_count
// is incremented per call.
struct AdamState {
    std::vector<Tensor> m, v;
    std::size_t step_count = 0;

    static AdamState zeros_like(const ParamSet& params);
};

void adam_step(ParamSet& params, const std::vector<Tensor>& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps);

struct SgdState {
    std::vector<Tensor> velocity;

    static SgdState zeros_like(const ParamSet& params);
};

void sgd_step(ParamSet& params, const std::vector<Tensor>& grads, SgdState& state, double lr,
              double momentum);

// Mini-batch training with per-epoch validation; returns the parameter
// snapshot with minimum validation MAE. Deterministic per cfg.seed.
// Throws TrainingError if the loss diverges, DataError on empty datasets.
std::pair<ParamSet, TrainReport> train(const ModelConfig& model_cfg,
                                       const WindowedDataset& train_set,
                                       const WindowedDataset& val_set, const TrainConfig& cfg);

// Mean absolute error of the model over a whole dataset (all points).
double evaluate_mae(const ModelConfig& cfg, const ParamSet& params, const WindowedDataset& data,
                    std::size_t batch_size = 256);

// Stacked forward over a dataset: predictions and targets as
// [windows x n x t_out].
std::pair<Tensor, Tensor> predict_dataset(const ModelConfig& cfg, const ParamSet& params,
                                          const WindowedDataset& data,
                                          std::size_t batch_size = 256);

}  // namespace stf

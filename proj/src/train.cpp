#include "stf/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "stf/errors.hpp"
#include "stf/metrics.hpp"

namespace stf {

using ad::Var;

std::string to_string(OptimizerKind kind) {
    return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

std::string to_string(LossKind kind) { return kind == LossKind::kMae ? "mae" : "mse"; }

OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "adam") return OptimizerKind::kAdam;
    if (s == "sgd") return OptimizerKind::kSgd;
    throw ConfigError("unknown optimizer: " + s);
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "mae") return LossKind::kMae;
    if (s == "mse") return LossKind::kMse;
    throw ConfigError("unknown loss: " + s);
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
    if (optimizer == OptimizerKind::kAdam) {
        if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
            throw ConfigError("adam betas must lie in [0, 1)");
        }
        if (adam_eps <= 0.0) throw ConfigError("adam eps must be > 0");
    }
}

AdamState AdamState::zeros_like(const ParamSet& params) {
    AdamState state;
    state.m.reserve(params.items.size());
    state.v.reserve(params.items.size());
    for (const NamedTensor& t : params.items) {
        state.m.emplace_back(t.value.shape());
        state.v.emplace_back(t.value.shape());
    }
    return state;
}

void adam_step(ParamSet& params, const std::vector<Tensor>& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    if (grads.size() != params.items.size() || state.m.size() != params.items.size()) {
        throw DimensionError("adam_step: parameter/gradient/state counts differ");
    }
    ++state.step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step_count));
    for (std::size_t p = 0; p < params.items.size(); ++p) {
        Tensor& w = params.items[p].value;
        const Tensor& g = grads[p];
        if (!g.same_shape(w)) {
            throw DimensionError("adam_step: gradient shape " + shape_to_string(g.shape()) +
                                 " does not match parameter " + params.items[p].name);
        }
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

SgdState SgdState::zeros_like(const ParamSet& params) {
    SgdState state;
    state.velocity.reserve(params.items.size());
    for (const NamedTensor& t : params.items) state.velocity.emplace_back(t.value.shape());
    return state;
}

void sgd_step(ParamSet& params, const std::vector<Tensor>& grads, SgdState& state, double lr,
              double momentum) {
    if (grads.size() != params.items.size() || state.velocity.size() != params.items.size()) {
        throw DimensionError("sgd_step: parameter/gradient/state counts differ");
    }
    for (std::size_t p = 0; p < params.items.size(); ++p) {
        Tensor& w = params.items[p].value;
        const Tensor& g = grads[p];
        Tensor& vel = state.velocity[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            vel[i] = momentum * vel[i] + g[i];
            w[i] -= lr * vel[i];
        }
    }
}

namespace {

Tensor stack_windows(const WindowedDataset& data, const std::vector<std::size_t>& order,
                     std::size_t begin, std::size_t end, bool targets) {
    const std::size_t n = data.channels();
    const std::size_t len = targets ? data.t_out() : data.t_in();
    Tensor out(Shape{(end - begin) * n, len});
    for (std::size_t b = begin; b < end; ++b) {
        const Tensor w = targets ? data.target(order[b]) : data.input(order[b]);
        std::copy(w.data().begin(), w.data().end(),
                  out.data().begin() + (b - begin) * n * len);
    }
    return out;
}

Var loss_of(LossKind kind, const Var& pred, const Tensor& target) {
    Var err = sub(pred, Var::constant(target));
    if (kind == LossKind::kMae) return mean_all(ad::abs(err));
    return mean_all(mul(err, err));
}

void clip_gradients(std::vector<Tensor>& grads, double clip_norm) {
    if (clip_norm <= 0.0) return;
    double sq = 0.0;
    for (const Tensor& g : grads) {
        for (double v : g.data()) sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (norm <= clip_norm) return;
    const double s = clip_norm / norm;
    for (Tensor& g : grads) {
        for (double& v : g.data()) v *= s;
    }
}

}  // namespace

std::pair<Tensor, Tensor> predict_dataset(const ModelConfig& cfg, const ParamSet& params,
                                          const WindowedDataset& data, std::size_t batch_size) {
    if (data.empty()) throw DataError("cannot evaluate an empty dataset");
    const std::size_t n = data.channels();
    const std::size_t count = data.size();
    Tensor preds(Shape{count, n, cfg.t_out});
    Tensor targets(Shape{count, n, cfg.t_out});
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t begin = 0; begin < count; begin += batch_size) {
        const std::size_t end = std::min(count, begin + batch_size);
        Tensor x = stack_windows(data, order, begin, end, false);
        Tensor y = stack_windows(data, order, begin, end, true);
        Tensor p = model_forward(cfg, params, x);
        std::copy(p.data().begin(), p.data().end(),
                  preds.data().begin() + begin * n * cfg.t_out);
        std::copy(y.data().begin(), y.data().end(),
                  targets.data().begin() + begin * n * cfg.t_out);
    }
    return {std::move(preds), std::move(targets)};
}

double evaluate_mae(const ModelConfig& cfg, const ParamSet& params, const WindowedDataset& data,
                    std::size_t batch_size) {
    auto [preds, targets] = predict_dataset(cfg, params, data, batch_size);
    return mae(preds, targets);
}

std::pair<ParamSet, TrainReport> train(const ModelConfig& model_cfg,
                                       const WindowedDataset& train_set,
                                       const WindowedDataset& val_set, const TrainConfig& cfg) {
    model_cfg.validate();
    cfg.validate();
    if (train_set.empty()) throw DataError("training dataset is empty");
    if (val_set.empty()) throw DataError("validation dataset is empty");
    if (train_set.t_in() != model_cfg.t_in || train_set.t_out() != model_cfg.t_out) {
        throw DimensionError("training windows (" + std::to_string(train_set.t_in()) + " -> " +
                             std::to_string(train_set.t_out()) + ") do not match model (" +
                             std::to_string(model_cfg.t_in) + " -> " +
                             std::to_string(model_cfg.t_out) + ")");
    }

    const auto start = std::chrono::steady_clock::now();
    Rng root(cfg.seed);
    Rng init_rng = root.substream("init");
    Rng shuffle_rng = root.substream("shuffle");

    ParamSet params = init_params(model_cfg, init_rng);
    AdamState adam = AdamState::zeros_like(params);
    SgdState sgd = SgdState::zeros_like(params);

    TrainReport report;
    ParamSet best = params;
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t loss_windows = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            Tensor x = stack_windows(train_set, order, begin, end, false);
            Tensor y = stack_windows(train_set, order, begin, end, true);

            std::vector<Var> leaves = params_to_vars(params, /*trainable=*/true);
            Var pred = model_forward(model_cfg, leaves, Var::constant(std::move(x)));
            Var loss = loss_of(cfg.loss, pred, y);
            const double loss_value = loss.value()[0];
            if (!std::isfinite(loss_value)) {
                throw TrainingError("loss diverged (" + std::to_string(loss_value) + ") at epoch " +
                                    std::to_string(epoch) + ", window offset " +
                                    std::to_string(begin));
            }
            loss_sum += loss_value * static_cast<double>(end - begin);
            loss_windows += end - begin;

            std::vector<Tensor> grads = ad::grad(loss, leaves);
            clip_gradients(grads, cfg.clip_norm);
            if (cfg.optimizer == OptimizerKind::kAdam) {
                adam_step(params, grads, adam, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                          cfg.adam_eps);
            } else {
                sgd_step(params, grads, sgd, cfg.learning_rate, cfg.sgd_momentum);
            }
        }

        const double val_mae = evaluate_mae(model_cfg, params, val_set);
        report.epochs.push_back(
            {epoch, loss_sum / static_cast<double>(loss_windows), val_mae});
        if (val_mae < best_val) {
            best_val = val_mae;
            best = params;
            report.best_epoch = epoch;
        }
        if (epoch - report.best_epoch > cfg.patience) break;
    }

    report.best_val_mae = best_val;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(best), std::move(report)};
}

}  // namespace stf

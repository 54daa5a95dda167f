#pragma once

#include <string>
#include <vector>

#include "stf/autodiff.hpp"
#include "stf/rng.hpp"
#include "stf/tensor.hpp"

namespace stf {

enum class ModelKind { kUltraStf, kSparseTsf, kSparseTsfMlp, kLinear };
enum class AttentionKind { kRelu, kSoftmax };

std::string to_string(ModelKind kind);
std::string to_string(AttentionKind kind);
ModelKind model_kind_from_string(const std::string& s);
AttentionKind attention_kind_from_string(const std::string& s);

// Architecture hyper-parameters. t_in/t_out need not be multiples of w:
// the forward truncates the input to floor(t_in/w) whole segments and the
// output of ceil(t_out/w) segments back down to t_out.
struct ModelConfig {
    ModelKind kind = ModelKind::kUltraStf;
    std::size_t t_in = 720;
    std::size_t t_out = 12;
    std::size_t w = 12;        // period length
    std::size_t d = 16;        // shapes per bank
    std::size_t n_block = 4;   // core blocks (ultrastf)
    std::size_t n_head = 1;    // 1 = single-head path
    AttentionKind attention = AttentionKind::kRelu;
    std::size_t mlp_depth = 2;   // sparsetsf_mlp: number of linear layers
    std::size_t mlp_hidden = 32; // sparsetsf_mlp: hidden width

    std::size_t k_in() const { return t_in / w; }
    std::size_t k_out() const { return (t_out + w - 1) / w; }

    // Throws ConfigError on any violated constraint.
    void validate() const;
};

// Per-channel normalization statistics, computed from a detached copy of
// the input (they are constants with respect to gradients).
struct NormStats {
    Tensor mu;     // [n x 1]
    Tensor sigma;  // [n x 1], entries below 1e-6 replaced by exactly 1.0
};

struct NamedTensor {
    std::string name;
    Tensor value;
};

// Ordered, named collection of learnable tensors for one model instance.
struct ParamSet {
    std::vector<NamedTensor> items;

    std::size_t total_size() const;
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const;
};

// Fresh parameters. Keys/values are standard normal draws; linear maps are
// uniform in +-1/sqrt(fan_in); the aggregation kernel starts as half a
// delta kernel.
ParamSet init_params(const ModelConfig& cfg, Rng& rng);

// Expected tensor names and shapes for a config, in serialization order.
std::vector<std::pair<std::string, Shape>> param_layout(const ModelConfig& cfg);

// ---------------------------------------------------------------------------
// Decomposed operations. All take [rows x ...] batches; rows are
// independent channels (or window-stacked channels).
// ---------------------------------------------------------------------------

// x: [n x t_in] with t_in >= 2. Returns (x - mu) / sigma per channel and
// the statistics used, computed without gradient flow.
std::pair<ad::Var, NormStats> instance_normalize(const ad::Var& x);
ad::Var denormalize(const ad::Var& y, const NormStats& stats);

// Residual context sum: conv1d_same(x, kernel) + x.
ad::Var aggregate(const ad::Var& x, const ad::Var& kernel);

struct ShapeBankVars {
    ad::Var query_weight;  // [w x w], single-head only
    ad::Var key;           // [d x w]
    ad::Var value;         // [d x w]
    // Multi-head (n_head > 1): per-head projections replace query_weight.
    std::vector<ad::Var> head_wq;  // each [w x hw]
    std::vector<ad::Var> head_wk;
    std::vector<ad::Var> head_wv;
    ad::Var out_proj;  // [hw * n_head x w]
};

// seg: [... x k x w]. Attention over the bank, applied independently per
// segment with shared weights, plus a residual connection.
ad::Var shape_bank_forward(const ad::Var& seg, const ShapeBankVars& bank, AttentionKind attention,
                           std::size_t n_head);

// seg: [... x k_in x w] -> [... x k_out x w]. weight: [k_in x k_out],
// shared across all phase positions and channels.
ad::Var cross_period_forward(const ad::Var& seg, const ad::Var& weight);

struct BlockVars {
    ShapeBankVars bank;
    ad::Var cross_weight;
};

// One core block: truncate to whole segments, shape bank, cross-period
// map to ceil(l_out/w) segments, flatten, truncate to l_out.
ad::Var core_block_forward(const ad::Var& x, const BlockVars& block, std::size_t w,
                           std::size_t l_out, AttentionKind attention, std::size_t n_head);

// Whether instance normalization wraps the forward pass. Bypass exists for
// linear-response probes (see analysis::sensitivity_matrix).
enum class NormMode { kEnabled, kBypass };

// Full forward for any model kind. x: [n x t_in] -> [n x t_out].
// params must match param_layout(cfg). Throws DataError on non-finite x.
ad::Var model_forward(const ModelConfig& cfg, const std::vector<ad::Var>& params, const ad::Var& x,
                      NormMode norm = NormMode::kEnabled);

// Convenience: plain-tensor forward with no gradient recording.
Tensor model_forward(const ModelConfig& cfg, const ParamSet& params, const Tensor& x,
                     NormMode norm = NormMode::kEnabled);

// Parameters as trainable autodiff leaves, in layout order.
std::vector<ad::Var> params_to_vars(const ParamSet& params, bool trainable = true);

}  // namespace stf

#include "stf/model.hpp"

#include <cmath>

#include "stf/errors.hpp"

namespace stf {

using ad::Var;

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::kUltraStf: return "ultrastf";
        case ModelKind::kSparseTsf: return "sparsetsf";
        case ModelKind::kSparseTsfMlp: return "sparsetsf_mlp";
        case ModelKind::kLinear: return "linear";
    }
    return "?";
}

std::string to_string(AttentionKind kind) {
    return kind == AttentionKind::kRelu ? "relu" : "softmax";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "ultrastf") return ModelKind::kUltraStf;
    if (s == "sparsetsf") return ModelKind::kSparseTsf;
    if (s == "sparsetsf_mlp") return ModelKind::kSparseTsfMlp;
    if (s == "linear") return ModelKind::kLinear;
    throw ConfigError("unknown model kind: " + s);
}

AttentionKind attention_kind_from_string(const std::string& s) {
    if (s == "relu") return AttentionKind::kRelu;
    if (s == "softmax") return AttentionKind::kSoftmax;
    throw ConfigError("unknown attention kind: " + s);
}

void ModelConfig::validate() const {
    if (w < 1) throw ConfigError("period w must be >= 1");
    if (t_in < w) throw ConfigError("t_in (" + std::to_string(t_in) + ") must be >= w (" +
                                    std::to_string(w) + ")");
    if (t_in < 2) throw ConfigError("t_in must be >= 2 for instance normalization");
    if (t_out < 1) throw ConfigError("t_out must be >= 1");
    if (kind == ModelKind::kUltraStf) {
        if (d < 1) throw ConfigError("shape count d must be >= 1");
        if (n_block < 1) throw ConfigError("n_block must be >= 1");
        if (n_head < 1) throw ConfigError("n_head must be >= 1");
        if (n_head > 1 && w / n_head < 1) {
            throw ConfigError("w=" + std::to_string(w) + " cannot be split into " +
                              std::to_string(n_head) + " heads of width >= 1");
        }
    }
    if (kind == ModelKind::kSparseTsfMlp) {
        if (mlp_depth < 1) throw ConfigError("mlp_depth must be >= 1");
        if (mlp_depth > 1 && mlp_hidden < 1) throw ConfigError("mlp_hidden must be >= 1");
    }
}

std::size_t ParamSet::total_size() const {
    std::size_t n = 0;
    for (const NamedTensor& t : items) n += t.value.size();
    return n;
}

const Tensor& ParamSet::get(const std::string& name) const {
    for (const NamedTensor& t : items) {
        if (t.name == name) return t.value;
    }
    throw ContractError("no parameter named " + name);
}

bool ParamSet::has(const std::string& name) const {
    for (const NamedTensor& t : items) {
        if (t.name == name) return true;
    }
    return false;
}

namespace {

std::size_t kernel_length(std::size_t w) { return 2 * (w / 2) + 1; }

std::vector<std::pair<std::string, Shape>> block_layout(const ModelConfig& cfg, std::size_t b,
                                                        std::size_t l_out) {
    std::vector<std::pair<std::string, Shape>> out;
    const std::string prefix = "block" + std::to_string(b) + ".";
    out.emplace_back(prefix + "key", Shape{cfg.d, cfg.w});
    out.emplace_back(prefix + "value", Shape{cfg.d, cfg.w});
    if (cfg.n_head == 1) {
        out.emplace_back(prefix + "query_weight", Shape{cfg.w, cfg.w});
    } else {
        const std::size_t hw = cfg.w / cfg.n_head;
        for (std::size_t h = 0; h < cfg.n_head; ++h) {
            const std::string hp = prefix + "head" + std::to_string(h) + ".";
            out.emplace_back(hp + "wq", Shape{cfg.w, hw});
            out.emplace_back(hp + "wk", Shape{cfg.w, hw});
            out.emplace_back(hp + "wv", Shape{cfg.w, hw});
        }
        out.emplace_back(prefix + "out_proj", Shape{hw * cfg.n_head, cfg.w});
    }
    const std::size_t k_x = cfg.t_in / cfg.w;
    const std::size_t k_y = (l_out + cfg.w - 1) / cfg.w;
    out.emplace_back(prefix + "cross.weight", Shape{k_x, k_y});
    return out;
}

}  // namespace

std::vector<std::pair<std::string, Shape>> param_layout(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<std::string, Shape>> out;
    switch (cfg.kind) {
        case ModelKind::kUltraStf: {
            out.emplace_back("aggregation.kernel", Shape{kernel_length(cfg.w)});
            for (std::size_t b = 0; b < cfg.n_block; ++b) {
                // Inner blocks map t_in -> t_in; only the final block maps
                // to t_out.
                const std::size_t l_out = b + 1 == cfg.n_block ? cfg.t_out : cfg.t_in;
                for (auto& item : block_layout(cfg, b, l_out)) out.push_back(std::move(item));
            }
            break;
        }
        case ModelKind::kSparseTsf: {
            out.emplace_back("aggregation.kernel", Shape{kernel_length(cfg.w)});
            out.emplace_back("cross.weight", Shape{cfg.k_in(), cfg.k_out()});
            break;
        }
        case ModelKind::kSparseTsfMlp: {
            out.emplace_back("aggregation.kernel", Shape{kernel_length(cfg.w)});
            const std::size_t k_in = cfg.k_in(), k_out = cfg.k_out();
            for (std::size_t i = 0; i < cfg.mlp_depth; ++i) {
                const std::size_t in = i == 0 ? k_in : cfg.mlp_hidden;
                const std::size_t o = i + 1 == cfg.mlp_depth ? k_out : cfg.mlp_hidden;
                const std::string prefix = "mlp.layer" + std::to_string(i) + ".";
                out.emplace_back(prefix + "weight", Shape{in, o});
                out.emplace_back(prefix + "bias", Shape{o});
            }
            break;
        }
        case ModelKind::kLinear: {
            out.emplace_back("linear.weight", Shape{cfg.t_in, cfg.t_out});
            break;
        }
    }
    return out;
}

ParamSet init_params(const ModelConfig& cfg, Rng& rng) {
    ParamSet params;
    for (const auto& [name, shape] : param_layout(cfg)) {
        Rng stream = rng.substream(name);
        Tensor t(shape);
        if (name.ends_with("key") || name.ends_with("value")) {
            for (double& v : t.data()) v = stream.normal();
        } else if (name == "aggregation.kernel") {
            t[t.size() / 2] = 0.5;
        } else if (name.ends_with(".bias")) {
            // zeros
        } else {
            // Uniform +-1/sqrt(fan_in). query_weight is stored [out x in]
            // (it is applied transposed); everything else is [in x out].
            const std::size_t fan_in =
                name.ends_with("query_weight") ? shape.back() : shape.front();
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (double& v : t.data()) v = stream.uniform(-bound, bound);
        }
        params.items.push_back({name, std::move(t)});
    }
    return params;
}

std::vector<Var> params_to_vars(const ParamSet& params, bool trainable) {
    std::vector<Var> out;
    out.reserve(params.items.size());
    for (const NamedTensor& t : params.items) out.push_back(Var::leaf(t.value, trainable));
    return out;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::pair<Var, NormStats> instance_normalize(const Var& x) {
    const Tensor& xv = x.value();
    if (xv.rank() != 2) {
        throw DimensionError("instance_normalize expects [n x t], got " +
                             shape_to_string(xv.shape()));
    }
    if (xv.extent(1) < 2) {
        throw ConfigError("instance_normalize requires t_in >= 2, got " +
                          std::to_string(xv.extent(1)));
    }
    // Statistics come from a detached copy; no gradient flows through them.
    const Tensor detached = xv;
    Tensor mu = stf::mean_over_axis(detached, 1, true);
    Tensor sigma = stf::std_over_axis(detached, 1, true);
    for (double& s : sigma.data()) {
        if (s < 1e-6) s = 1.0;
    }
    Tensor inv_sigma = sigma;
    for (double& s : inv_sigma.data()) s = 1.0 / s;

    Var x_norm = mul(sub(x, Var::constant(mu)), Var::constant(std::move(inv_sigma)));
    return {x_norm, NormStats{std::move(mu), std::move(sigma)}};
}

Var denormalize(const Var& y, const NormStats& stats) {
    return add(mul(y, Var::constant(stats.sigma)), Var::constant(stats.mu));
}

Var aggregate(const Var& x, const Var& kernel) { return add(conv1d_same(x, kernel), x); }

namespace {

// ReLU-scored (or scaled row-softmax) attention of [N x q_dim] queries over
// a [d x q_dim] key/value bank.
Var bank_attention(const Var& q, const Var& key, const Var& value, AttentionKind attention) {
    Var scores = matmul(q, transpose(key));  // [N x d]
    Var weights;
    if (attention == AttentionKind::kRelu) {
        weights = relu(scores);
    } else {
        const double s = 1.0 / std::sqrt(static_cast<double>(q.value().shape().back()));
        weights = softmax_lastaxis(scale(scores, s));
    }
    return matmul(weights, value);  // [N x w]
}

}  // namespace

Var shape_bank_forward(const Var& seg, const ShapeBankVars& bank, AttentionKind attention,
                       std::size_t n_head) {
    const Shape in_shape = seg.value().shape();
    if (in_shape.size() < 2) {
        throw DimensionError("shape_bank_forward expects [... x k x w], got " +
                             shape_to_string(in_shape));
    }
    const std::size_t w = in_shape.back();
    if (n_head > 1 && w / n_head < 1) {
        throw ConfigError("w=" + std::to_string(w) + " cannot be split into " +
                          std::to_string(n_head) + " heads of width >= 1");
    }
    const std::size_t n = seg.value().size() / w;
    Var flat = reshape(seg, {n, w});

    Var h;
    if (n_head == 1) {
        Var q = matmul(flat, transpose(bank.query_weight));
        h = bank_attention(q, bank.key, bank.value, attention);
    } else {
        std::vector<Var> heads;
        heads.reserve(n_head);
        for (std::size_t i = 0; i < n_head; ++i) {
            Var q_i = matmul(flat, bank.head_wq[i]);
            Var k_i = matmul(bank.key, bank.head_wk[i]);
            Var v_i = matmul(bank.value, bank.head_wv[i]);
            heads.push_back(bank_attention(q_i, k_i, v_i, attention));
        }
        h = matmul(concat(heads, 1), bank.out_proj);
    }
    return reshape(add(flat, h), in_shape);
}

Var cross_period_forward(const Var& seg, const Var& weight) {
    const Shape in_shape = seg.value().shape();
    if (in_shape.size() < 2) {
        throw DimensionError("cross_period_forward expects [... x k_in x w], got " +
                             shape_to_string(in_shape));
    }
    const std::size_t w = in_shape.back();
    const std::size_t k_in = in_shape[in_shape.size() - 2];
    if (weight.value().rank() != 2 || weight.value().extent(0) != k_in) {
        throw DimensionError("cross-period weight " + shape_to_string(weight.value().shape()) +
                             " does not match segment axis of " + shape_to_string(in_shape));
    }
    const std::size_t k_out = weight.value().extent(1);
    const std::size_t lead = seg.value().size() / (k_in * w);

    // Move the segment axis last so the shared map applies per phase.
    Var phased = permute(reshape(seg, {lead, k_in, w}), {0, 2, 1});  // [lead x w x k_in]
    Var mapped = matmul(reshape(phased, {lead * w, k_in}), weight);  // [lead*w x k_out]
    Var restored = permute(reshape(mapped, {lead, w, k_out}), {0, 2, 1});

    Shape out_shape = in_shape;
    out_shape[out_shape.size() - 2] = k_out;
    return reshape(restored, out_shape);
}

namespace {

// Shared segment plumbing: truncate to whole periods, run a segment-level
// map [rows x k_x x w] -> [rows x k_y x w], flatten, trim to l_out.
template <typename SegmentMap>
Var segmented(const Var& x, std::size_t w, std::size_t l_out, SegmentMap&& map) {
    const Shape& s = x.value().shape();
    if (s.size() != 2) {
        throw DimensionError("expected [rows x len] input, got " + shape_to_string(s));
    }
    const std::size_t rows = s[0], l_in = s[1];
    if (l_in < w) {
        throw ConfigError("input length " + std::to_string(l_in) + " is shorter than one period (" +
                          std::to_string(w) + ")");
    }
    const std::size_t k_x = l_in / w;
    const std::size_t k_y = (l_out + w - 1) / w;

    Var h = slice(x, 1, 0, k_x * w);
    h = reshape(h, {rows, k_x, w});
    h = map(h);
    if (h.value().extent(1) != k_y) {
        throw DimensionError("segment map produced " + std::to_string(h.value().extent(1)) +
                             " segments, expected " + std::to_string(k_y));
    }
    h = reshape(h, {rows, k_y * w});
    return slice(h, 1, 0, l_out);
}

}  // namespace

Var core_block_forward(const Var& x, const BlockVars& block, std::size_t w, std::size_t l_out,
                       AttentionKind attention, std::size_t n_head) {
    return segmented(x, w, l_out, [&](const Var& seg) {
        return cross_period_forward(shape_bank_forward(seg, block.bank, attention, n_head),
                                    block.cross_weight);
    });
}

namespace {

void check_params(const ModelConfig& cfg, const std::vector<Var>& params) {
    const auto layout = param_layout(cfg);
    if (params.size() != layout.size()) {
        throw DimensionError("expected " + std::to_string(layout.size()) + " parameter tensors, got " +
                             std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (params[i].value().shape() != layout[i].second) {
            throw DimensionError("parameter " + layout[i].first + " has shape " +
                                 shape_to_string(params[i].value().shape()) + ", expected " +
                                 shape_to_string(layout[i].second));
        }
    }
}

// Parameter cursor over the layout order.
struct ParamReader {
    const std::vector<Var>& params;
    std::size_t next = 0;
    Var take() { return params[next++]; }
};

BlockVars read_block(ParamReader& reader, const ModelConfig& cfg) {
    BlockVars block;
    block.bank.key = reader.take();
    block.bank.value = reader.take();
    if (cfg.n_head == 1) {
        block.bank.query_weight = reader.take();
    } else {
        for (std::size_t h = 0; h < cfg.n_head; ++h) {
            block.bank.head_wq.push_back(reader.take());
            block.bank.head_wk.push_back(reader.take());
            block.bank.head_wv.push_back(reader.take());
        }
        block.bank.out_proj = reader.take();
    }
    block.cross_weight = reader.take();
    return block;
}

}  // namespace

Var model_forward(const ModelConfig& cfg, const std::vector<Var>& params, const Var& x,
                  NormMode norm) {
    cfg.validate();
    check_params(cfg, params);
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || xv.extent(1) != cfg.t_in) {
        throw DimensionError("input shape " + shape_to_string(xv.shape()) +
                             " does not match [n x " + std::to_string(cfg.t_in) + "]");
    }
    if (!xv.all_finite()) throw DataError("model input contains NaN or Inf");

    NormStats stats;
    Var h = x;
    if (norm == NormMode::kEnabled) std::tie(h, stats) = instance_normalize(x);

    ParamReader reader{params};
    switch (cfg.kind) {
        case ModelKind::kUltraStf: {
            h = aggregate(h, reader.take());
            for (std::size_t b = 0; b < cfg.n_block; ++b) {
                const std::size_t l_out = b + 1 == cfg.n_block ? cfg.t_out : cfg.t_in;
                BlockVars block = read_block(reader, cfg);
                h = core_block_forward(h, block, cfg.w, l_out, cfg.attention, cfg.n_head);
            }
            break;
        }
        case ModelKind::kSparseTsf: {
            h = aggregate(h, reader.take());
            Var weight = reader.take();
            h = segmented(h, cfg.w, cfg.t_out,
                          [&](const Var& seg) { return cross_period_forward(seg, weight); });
            break;
        }
        case ModelKind::kSparseTsfMlp: {
            h = aggregate(h, reader.take());
            std::vector<std::pair<Var, Var>> layers;  // (weight, bias)
            for (std::size_t i = 0; i < cfg.mlp_depth; ++i) {
                Var weight = reader.take();
                Var bias = reader.take();
                layers.emplace_back(weight, bias);
            }
            h = segmented(h, cfg.w, cfg.t_out, [&](const Var& seg) {
                const Shape s = seg.value().shape();  // [rows x k x w]
                const std::size_t lead = s[0], k = s[1], w = s[2];
                Var flat = reshape(permute(seg, {0, 2, 1}), {lead * w, k});
                for (std::size_t i = 0; i < layers.size(); ++i) {
                    flat = add(matmul(flat, layers[i].first), layers[i].second);
                    if (i + 1 < layers.size()) flat = relu(flat);
                }
                const std::size_t k_y = flat.value().extent(1);
                return permute(reshape(flat, {lead, w, k_y}), {0, 2, 1});
            });
            break;
        }
        case ModelKind::kLinear: {
            h = matmul(h, reader.take());
            break;
        }
    }

    if (norm == NormMode::kEnabled) h = denormalize(h, stats);
    return h;
}

Tensor model_forward(const ModelConfig& cfg, const ParamSet& params, const Tensor& x,
                     NormMode norm) {
    std::vector<Var> vars = params_to_vars(params, /*trainable=*/false);
    return model_forward(cfg, vars, Var::constant(x), norm).value();
}

}  // namespace stf

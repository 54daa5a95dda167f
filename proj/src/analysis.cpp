#include "stf/analysis.hpp"

#include <cmath>
#include <limits>

#include "stf/errors.hpp"

namespace stf {

std::size_t count_params_enumerated(const ModelConfig& cfg) {
    std::size_t n = 0;
    for (const auto& [name, shape] : param_layout(cfg)) n += shape_size(shape);
    return n;
}

std::size_t count_params(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t kernel = 2 * (cfg.w / 2) + 1;
    switch (cfg.kind) {
        case ModelKind::kUltraStf: {
            if (cfg.n_head != 1) {
                throw ConfigError(
                    "count_params formula is defined for n_head=1; use "
                    "count_params_enumerated for multi-head configs");
            }
            const std::size_t bank = cfg.w * cfg.w + 2 * cfg.w * cfg.d;
            const std::size_t k_in = cfg.k_in();
            const std::size_t inner_k_out = (cfg.t_in + cfg.w - 1) / cfg.w;
            return kernel + (cfg.n_block - 1) * (bank + k_in * inner_k_out) +
                   (bank + k_in * cfg.k_out());
        }
        case ModelKind::kSparseTsf:
            return kernel + cfg.k_in() * cfg.k_out();
        case ModelKind::kSparseTsfMlp:
            return count_params_enumerated(cfg);
        case ModelKind::kLinear:
            return cfg.t_in * cfg.t_out;
    }
    throw ContractError("unreachable model kind");
}

SensitivityMatrix sensitivity_matrix(const ModelConfig& cfg, const ParamSet& params) {
    // Probe all basis vectors at once: rows are independent channels, so
    // row j of the response is the forward of e_j.
    Tensor identity(Shape{cfg.t_in, cfg.t_in});
    for (std::size_t i = 0; i < cfg.t_in; ++i) identity[i * cfg.t_in + i] = 1.0;
    Tensor response = model_forward(cfg, params, identity, NormMode::kBypass);

    SensitivityMatrix out;
    out.j = response.transposed();  // [t_out x t_in]
    out.model = to_string(cfg.kind);
    out.normalization_bypassed = true;
    return out;
}

std::vector<ShapeRecord> extract_shapes(const ModelConfig& cfg, const ParamSet& params) {
    std::vector<ShapeRecord> records;
    if (cfg.kind != ModelKind::kUltraStf) return records;
    records.reserve(cfg.n_block * cfg.d);
    for (std::size_t b = 0; b < cfg.n_block; ++b) {
        const Tensor& value = params.get("block" + std::to_string(b) + ".value");
        for (std::size_t i = 0; i < cfg.d; ++i) {
            ShapeRecord rec;
            rec.block = b;
            rec.index = i;
            rec.vector = value.sliced(0, i, i + 1).reshaped({cfg.w});
            records.push_back(std::move(rec));
        }
    }
    return records;
}

namespace {

constexpr double kFlatStd = 1e-8;

// Mean and population std of v[offset, offset+w).
std::pair<double, double> window_stats(const Tensor& v, std::size_t offset, std::size_t w) {
    double mean = 0.0;
    for (std::size_t i = 0; i < w; ++i) mean += v[offset + i];
    mean /= static_cast<double>(w);
    double ss = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
        const double dev = v[offset + i] - mean;
        ss += dev * dev;
    }
    return {mean, std::sqrt(ss / static_cast<double>(w))};
}

}  // namespace

std::pair<std::size_t, double> nearest_match(const Tensor& shape, const Tensor& series) {
    if (shape.rank() != 1 || series.rank() != 1) {
        throw DimensionError("nearest_match expects rank-1 shape and series");
    }
    const std::size_t w = shape.size();
    const std::size_t t = series.size();
    if (w < 2) throw ConfigError("nearest_match shape must have length >= 2");
    if (t < w) {
        throw DimensionError("series length " + std::to_string(t) +
                             " is shorter than the shape length " + std::to_string(w));
    }
    const auto [q_mean, q_std] = window_stats(shape, 0, w);
    if (q_std < kFlatStd) throw DataError("nearest_match: shape is constant");

    std::vector<double> q(w);
    for (std::size_t i = 0; i < w; ++i) q[i] = (shape[i] - q_mean) / q_std;

    std::size_t best_offset = 0;
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t offset = 0; offset + w <= t; ++offset) {
        const auto [mean, sd] = window_stats(series, offset, w);
        if (sd < kFlatStd) continue;  // degenerate z-normalization
        double dist_sq = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
            const double diff = (series[offset + i] - mean) / sd - q[i];
            dist_sq += diff * diff;
        }
        if (!any || dist_sq < best) {
            any = true;
            best = dist_sq;
            best_offset = offset;
        }
    }
    if (!any) throw DataError("nearest_match: every window of the series is constant");
    return {best_offset, std::sqrt(best)};
}

void match_shapes(std::vector<ShapeRecord>& records, const Tensor& series_time_major) {
    if (series_time_major.rank() != 2) {
        throw DimensionError("match_shapes expects a [T x n] series, got " +
                             shape_to_string(series_time_major.shape()));
    }
    const std::size_t t = series_time_major.extent(0);
    const std::size_t n = series_time_major.extent(1);
    std::vector<Tensor> columns;
    columns.reserve(n);
    for (std::size_t c = 0; c < n; ++c) {
        Tensor col(Shape{t});
        for (std::size_t r = 0; r < t; ++r) col[r] = series_time_major[r * n + c];
        columns.push_back(std::move(col));
    }
    for (ShapeRecord& rec : records) {
        ShapeMatch best;
        bool any = false;
        for (std::size_t c = 0; c < n; ++c) {
            try {
                const auto [offset, dist] = nearest_match(rec.vector, columns[c]);
                if (!any || dist < best.distance) {
                    any = true;
                    best = ShapeMatch{offset, c, dist};
                }
            } catch (const DataError&) {
                // Channel had no usable window; others may.
            }
        }
        if (any) rec.best_match = best;
    }
}

}  // namespace stf

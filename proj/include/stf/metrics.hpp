#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stf/tensor.hpp"

namespace stf {

// MAPE points where |target| <= threshold are excluded.
inline constexpr double kDefaultMapeThreshold = 1e-4;

// All means run over valid points only. mask (if given) must match the
// prediction shape; nonzero marks a valid point.
double mae(const Tensor& pred, const Tensor& target, const Tensor* mask = nullptr);
double rmse(const Tensor& pred, const Tensor& target, const Tensor* mask = nullptr);
// Reported as a percentage.
double mape(const Tensor& pred, const Tensor& target, const Tensor* mask = nullptr,
            double threshold = kDefaultMapeThreshold);

struct MetricsRow {
    std::string label;  // "horizon_3", ..., "average"
    double mae = 0.0;
    double rmse = 0.0;
    double mape_pct = 0.0;
    std::size_t points = 0;       // valid points for MAE/RMSE
    std::size_t mape_points = 0;  // additionally passing the MAPE threshold
};

// Per-horizon rows for horizons {3, 6, 12} (those <= t_out) plus an
// average row pooled over every prediction step.
struct MetricsReport {
    std::vector<MetricsRow> rows;

    const MetricsRow& average() const;
    const MetricsRow* horizon(std::size_t h) const;
};

// pred/target: [windows x n x t_out]. Horizon h scores prediction step
// h-1 only; the average row pools all t_out steps.
MetricsReport horizon_report(const Tensor& pred, const Tensor& target,
                             const Tensor* mask = nullptr,
                             double mape_threshold = kDefaultMapeThreshold);

std::string to_csv(const MetricsReport& report);

}  // namespace stf

#include "stf/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "stf/errors.hpp"

namespace stf {

namespace {

struct Accumulator {
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double ape_sum = 0.0;
    std::size_t points = 0;
    std::size_t mape_points = 0;

    void add(double p, double y, double threshold) {
        const double e = p - y;
        abs_sum += std::fabs(e);
        sq_sum += e * e;
        ++points;
        if (std::fabs(y) > threshold) {
            ape_sum += std::fabs(e) / std::fabs(y);
            ++mape_points;
        }
    }

    MetricsRow row(std::string label) const {
        if (points == 0) throw MetricsError("no valid points for metric row '" + label + "'");
        MetricsRow r;
        r.label = std::move(label);
        r.mae = abs_sum / static_cast<double>(points);
        r.rmse = std::sqrt(sq_sum / static_cast<double>(points));
        if (mape_points == 0) {
            throw MetricsError("no points above the MAPE threshold for row '" + r.label + "'");
        }
        r.mape_pct = 100.0 * ape_sum / static_cast<double>(mape_points);
        r.points = points;
        r.mape_points = mape_points;
        return r;
    }
};

void check_shapes(const Tensor& pred, const Tensor& target, const Tensor* mask) {
    if (!pred.same_shape(target)) {
        throw DimensionError("prediction shape " + shape_to_string(pred.shape()) +
                             " does not match target shape " + shape_to_string(target.shape()));
    }
    if (mask && !mask->same_shape(pred)) {
        throw DimensionError("mask shape " + shape_to_string(mask->shape()) +
                             " does not match prediction shape " + shape_to_string(pred.shape()));
    }
}

Accumulator accumulate_all(const Tensor& pred, const Tensor& target, const Tensor* mask,
                           double threshold) {
    Accumulator acc;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask && (*mask)[i] == 0.0) continue;
        acc.add(pred[i], target[i], threshold);
    }
    return acc;
}

}  // namespace

double mae(const Tensor& pred, const Tensor& target, const Tensor* mask) {
    check_shapes(pred, target, mask);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask && (*mask)[i] == 0.0) continue;
        acc += std::fabs(pred[i] - target[i]);
        ++n;
    }
    if (n == 0) throw MetricsError("mae: no valid points");
    return acc / static_cast<double>(n);
}

double rmse(const Tensor& pred, const Tensor& target, const Tensor* mask) {
    check_shapes(pred, target, mask);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask && (*mask)[i] == 0.0) continue;
        const double e = pred[i] - target[i];
        acc += e * e;
        ++n;
    }
    if (n == 0) throw MetricsError("rmse: no valid points");
    return std::sqrt(acc / static_cast<double>(n));
}

double mape(const Tensor& pred, const Tensor& target, const Tensor* mask, double threshold) {
    check_shapes(pred, target, mask);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask && (*mask)[i] == 0.0) continue;
        if (std::fabs(target[i]) <= threshold) continue;
        acc += std::fabs(pred[i] - target[i]) / std::fabs(target[i]);
        ++n;
    }
    if (n == 0) throw MetricsError("mape: no valid points above the threshold");
    return 100.0 * acc / static_cast<double>(n);
}

const MetricsRow& MetricsReport::average() const {
    for (const MetricsRow& r : rows) {
        if (r.label == "average") return r;
    }
    throw ContractError("report has no average row");
}

const MetricsRow* MetricsReport::horizon(std::size_t h) const {
    const std::string label = "horizon_" + std::to_string(h);
    for (const MetricsRow& r : rows) {
        if (r.label == label) return &r;
    }
    return nullptr;
}

MetricsReport horizon_report(const Tensor& pred, const Tensor& target, const Tensor* mask,
                             double mape_threshold) {
    check_shapes(pred, target, mask);
    if (pred.rank() != 3) {
        throw DimensionError("horizon_report expects [windows x n x t_out], got " +
                             shape_to_string(pred.shape()));
    }
    const std::size_t t_out = pred.extent(2);
    const std::size_t lead = pred.extent(0) * pred.extent(1);

    MetricsReport report;
    for (std::size_t h : {std::size_t{3}, std::size_t{6}, std::size_t{12}}) {
        if (h > t_out) continue;
        Accumulator acc;
        for (std::size_t r = 0; r < lead; ++r) {
            const std::size_t i = r * t_out + (h - 1);
            if (mask && (*mask)[i] == 0.0) continue;
            acc.add(pred[i], target[i], mape_threshold);
        }
        report.rows.push_back(acc.row("horizon_" + std::to_string(h)));
    }
    // The average row pools every prediction step, not the horizon rows.
    report.rows.push_back(accumulate_all(pred, target, mask, mape_threshold).row("average"));
    return report;
}

std::string to_csv(const MetricsReport& report) {
    std::string out = "row,mae,rmse,mape_pct,points,mape_points\n";
    char buf[128];
    for (const MetricsRow& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%zu,%zu\n", r.label.c_str(), r.mae,
                      r.rmse, r.mape_pct, r.points, r.mape_points);
        out += buf;
    }
    return out;
}

}  // namespace stf

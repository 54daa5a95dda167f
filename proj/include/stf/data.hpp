#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stf/tensor.hpp"

namespace stf {

// Chronological multi-channel series. values is time-major [T x n];
// timestamps are epoch seconds, strictly increasing with constant stride.
struct SeriesTable {
    std::vector<std::int64_t> timestamps;
    std::vector<std::string> channel_names;
    Tensor values;  // [T x n]
    std::int64_t interval_seconds = 0;

    std::size_t steps() const { return timestamps.size(); }
    std::size_t channels() const { return channel_names.size(); }
};

struct IngestReport {
    std::size_t filled_forward = 0;  // cells filled from the previous row
    std::size_t filled_zero = 0;     // leading cells with nothing to copy
};

// Parses a CSV with a header row (timestamp column first, one column per
// channel). Timestamps are ISO-8601 ("YYYY-MM-DD HH:MM:SS", 'T' separator
// also accepted) or epoch seconds. Missing cells are forward-filled, with
// zero fill at the head. Throws DataError naming the offending row.
SeriesTable ingest_csv(const std::string& path, IngestReport* report = nullptr);

void write_csv(const SeriesTable& table, const std::string& path);

enum class DownsampleAgg { kMean, kSum };

// Aggregates groups of `factor` consecutive steps; a trailing remainder is
// dropped (recorded in *warnings when given). interval scales by factor.
SeriesTable downsample(const SeriesTable& table, std::size_t factor,
                       DownsampleAgg agg = DownsampleAgg::kMean,
                       std::vector<std::string>* warnings = nullptr);

struct SplitTables {
    SeriesTable train, val, test;
};

// Chronological 6:2:2 split with boundaries at floor(0.6 T) and
// floor(0.8 T). Requires T >= 10.
SplitTables split_622(const SeriesTable& table);

enum class Partition { kTrain, kVal, kTest };
std::string to_string(Partition p);

// Lazily materialized (input, target) windows over one partition. Windows
// never cross partition boundaries because each dataset sees one table.
class WindowedDataset {
public:
    WindowedDataset() = default;
    WindowedDataset(Partition partition, const SeriesTable& table, std::size_t t_in,
                    std::size_t t_out, std::size_t stride = 1,
                    std::vector<std::string>* warnings = nullptr);

    std::size_t size() const { return origins_.size(); }
    bool empty() const { return origins_.empty(); }
    std::size_t channels() const { return channels_; }
    std::size_t t_in() const { return t_in_; }
    std::size_t t_out() const { return t_out_; }
    Partition partition() const { return partition_; }
    std::size_t origin(std::size_t i) const { return origins_.at(i); }

    // Window i as channel-major tensors: x [n x t_in], y [n x t_out].
    Tensor input(std::size_t i) const;
    Tensor target(std::size_t i) const;

private:
    Partition partition_ = Partition::kTrain;
    std::shared_ptr<const Tensor> source_;  // [T x n]
    std::vector<std::size_t> origins_;
    std::size_t channels_ = 0;
    std::size_t t_in_ = 0;
    std::size_t t_out_ = 0;
};

enum class TrendKind { kNone, kLinear, kPhaseDependent };
std::string to_string(TrendKind kind);
TrendKind trend_kind_from_string(const std::string& s);

// Synthetic series: X[t] = P[t mod w] + trend(t) + noise.
//
// trend kinds:
//   none            trend(t) = 0
//   linear          trend(t) = magnitude * t
//   phase_dependent trend(jw + l) = magnitude * sin(2*pi * f_l * j), with a
//                   per-phase rate f_l = phase_rate_base * (1 + l/w). The
//                   mapping from one period to the next then differs by
//                   phase, so no single segment-shared linear map can
//                   reproduce it, while per-phase maps can.
struct SyntheticSpec {
    Tensor period_profile;  // [w]
    TrendKind trend_kind = TrendKind::kNone;
    double trend_magnitude = 0.0;
    double phase_rate_base = 0.11;  // phase_dependent only
    double noise_std = 0.0;
    std::size_t length = 0;
    std::size_t channels = 1;
    std::uint64_t seed = 0;
    std::int64_t interval_seconds = 900;
    std::int64_t start_timestamp = 1546300800;  // 2019-01-01 00:00:00 UTC
};

SeriesTable gen_synthetic(const SyntheticSpec& spec);

}  // namespace stf

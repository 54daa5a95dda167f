#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stf/model.hpp"
#include "stf/tensor.hpp"

namespace stf {

// Closed-form learnable-parameter count for a config (single-head only;
// multi-head counts are available through count_params_enumerated).
// Always equals the scalar count of a constructed ParamSet.
std::size_t count_params(const ModelConfig& cfg);

// Count by enumerating the parameter layout; defined for every config.
std::size_t count_params_enumerated(const ModelConfig& cfg);

// Response of the single-channel forward to each standard basis vector,
// J[i][j] = output step i when the input is e_j. Instance normalization is
// bypassed for this probe (its statistics depend on the input and would
// confound the columns); the flag records that.
struct SensitivityMatrix {
    Tensor j;  // [t_out x t_in]
    std::string model;
    bool normalization_bypassed = true;
};

SensitivityMatrix sensitivity_matrix(const ModelConfig& cfg, const ParamSet& params);

struct ShapeMatch {
    std::size_t offset = 0;
    std::size_t channel = 0;
    double distance = 0.0;
};

// One learned shape: a row of a block's value bank.
struct ShapeRecord {
    std::size_t block = 0;
    std::size_t index = 0;
    Tensor vector;  // [w]
    std::optional<ShapeMatch> best_match;
};

// All value-bank rows of a parameter set (n_block * d records for
// ultrastf; empty for bank-less models).
std::vector<ShapeRecord> extract_shapes(const ModelConfig& cfg, const ParamSet& params);

// Minimizes the z-normalized Euclidean distance between `shape` and every
// length-w window of `series`. Windows with std < 1e-8 are skipped; ties
// break toward the smallest offset. Throws DataError when every window is
// constant (or the shape itself is).
std::pair<std::size_t, double> nearest_match(const Tensor& shape, const Tensor& series);

// Fills best_match for each record by scanning every channel of a table's
// series, keeping the globally closest window.
void match_shapes(std::vector<ShapeRecord>& records, const Tensor& series_time_major);

}  // namespace stf

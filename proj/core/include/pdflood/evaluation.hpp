#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>

#include "pdflood/downscale.hpp"
#include "pdflood/grid.hpp"

namespace pdflood {

/// Metrics comparing a downscaled product against a fine-resolution truth
/// grid. Fractions lie in [0, 1]; coverage95 is absent for deterministic
/// products (they carry no intervals).
struct EvalReport {
    double mae = 0.0;
    std::optional<double> coverage95;
    double accuracy = 0.0;
    double recall_flooded = 0.0;
    double recall_dry = 0.0;
    long n_cells = 0;
    double threshold = 0.3;
};

/// Which cells enter the MAE: every valid cell, or only cells with positive
/// depth in either the product or the truth.
enum class MaeDomain { kAllCells, kWetUnion };

/// Probabilistic product: mean for MAE, intervals for coverage, exceedance
/// probability > 0.5 for the flooded flag.
EvalReport evaluate(const DownscaleResult& result, const Grid& truth,
                    double threshold = 0.3, MaeDomain domain = MaeDomain::kAllCells);

/// Deterministic product: the grid itself for MAE, value > threshold for the
/// flooded flag; no coverage.
EvalReport evaluate(const Grid& deterministic, const Grid& truth,
                    double threshold = 0.3, MaeDomain domain = MaeDomain::kAllCells);

/// Canonical JSON with the fixed keys mae, coverage95 (null when absent),
/// accuracy, recall_flooded, recall_dry, n_cells, threshold.
std::string to_json(const EvalReport& report);

/// Side-by-side table of named reports as canonical JSON; per metric, every
/// report achieving the best value is flagged (lower is better for mae,
/// higher for the rest). Requires at least 2 reports.
std::string compare_reports(std::span<const std::pair<std::string, EvalReport>> reports);

} // namespace pdflood

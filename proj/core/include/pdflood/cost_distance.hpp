#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdflood/grid.hpp"

namespace pdflood {

/// Result of a multi-source least-cost-path pass over a raster.
struct CostField {
    /// Accumulated cost per cell; 0 on source cells, nodata where unreachable.
    Grid accumulated;
    /// Linear index of the least-cost source per cell; -1 where unreachable.
    std::vector<std::int64_t> source_index;
    /// 1 where a path from some source exists.
    std::vector<std::uint8_t> reachable;

    bool reachable_at(std::size_t k) const { return reachable[k] != 0; }
    std::int64_t source_at(std::size_t k) const { return source_index[k]; }
};

/// Cost of moving between two neighboring cells with costs-of-passage c_i
/// and c_j: (c_i + c_j)/2 for edge-adjacent cells, sqrt(2) times that for
/// diagonal neighbors. Costs must be finite and >= 0.
double edge_cost(double cost_i, double cost_j, bool diagonal);

/// Multi-source Dijkstra over the 8-connected grid. For every reachable cell
/// the accumulated value is the minimum over all paths from any source of
/// the summed edge costs, and source_index identifies the source achieving
/// it (ties break toward the smallest source linear index). nodata cells are
/// impassable. Equivalent to running one single-source search per source and
/// keeping the per-cell minimum, in a single pass.
///
/// Negative cost cells are rejected: adding an offset to make costs
/// nonnegative changes which routes are cheapest, so there is no silent fix.
/// Internally sequential and pure; independent invocations may run
/// concurrently on shared read-only grids.
CostField cost_distance(const Grid& cost_grid, std::span<const std::size_t> sources);

/// Fine source cells for the flood spread: every fine cell whose containing
/// coarse cell has depth > wet_threshold (strict). Returned sorted by linear
/// index. coarse_depth must match the pair's coarse layout.
std::vector<std::size_t> flood_sources(const GridPair& pair, const Grid& coarse_depth,
                                       double wet_threshold = 0.0);

} // namespace pdflood

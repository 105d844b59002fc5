#include "pdflood/cost_distance.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

namespace pdflood {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

double edge_cost(double cost_i, double cost_j, bool diagonal) {
    if (!(cost_i >= 0.0) || !(cost_j >= 0.0) || !std::isfinite(cost_i) ||
        !std::isfinite(cost_j)) {
        throw InputError("edge_cost: costs must be finite and >= 0");
    }
    const double half_sum = 0.5 * (cost_i + cost_j);
    return diagonal ? kSqrt2 * half_sum : half_sum;
}

CostField cost_distance(const Grid& cost_grid, std::span<const std::size_t> sources) {
    const std::size_t n = cost_grid.size();
    const int nrows = cost_grid.nrows();
    const int ncols = cost_grid.ncols();

    if (sources.empty()) {
        throw InputError("cost_distance: source set is empty");
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (cost_grid.is_nodata_at(k)) continue;
        const double c = cost_grid[k];
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw InputError("cost_distance: negative or non-finite cost at cell " +
                             std::to_string(k));
        }
    }

    std::vector<double> dist(n, kInf);
    std::vector<std::int64_t> src(n, -1);

    // Heap entries ordered by (distance, source index, cell); the source
    // component makes equal-cost ties resolve to the smallest source index
    // regardless of push order.
    using Entry = std::tuple<double, std::int64_t, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

    bool any_source = false;
    for (std::size_t s : sources) {
        if (s >= n) {
            throw InputError("cost_distance: source index out of range");
        }
        if (cost_grid.is_nodata_at(s)) continue; // impassable source is inert
        any_source = true;
        const auto sid = static_cast<std::int64_t>(s);
        if (dist[s] > 0.0 || (dist[s] == 0.0 && sid < src[s])) {
            dist[s] = 0.0;
            src[s] = sid;
            heap.emplace(0.0, sid, s);
        }
    }
    if (!any_source) {
        throw InputError("cost_distance: all sources are nodata");
    }

    while (!heap.empty()) {
        const auto [d, s, cell] = heap.top();
        heap.pop();
        if (d != dist[cell] || s != src[cell]) continue; // stale entry

        const int i = static_cast<int>(cell / static_cast<std::size_t>(ncols));
        const int j = static_cast<int>(cell % static_cast<std::size_t>(ncols));
        const double c_here = cost_grid[cell];

        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj == 0) continue;
                const int ni = i + di;
                const int nj = j + dj;
                if (ni < 0 || ni >= nrows || nj < 0 || nj >= ncols) continue;
                const std::size_t ncell = cost_grid.linear(ni, nj);
                if (cost_grid.is_nodata_at(ncell)) continue;
                const bool diagonal = di != 0 && dj != 0;
                const double half_sum = 0.5 * (c_here + cost_grid[ncell]);
                const double step = diagonal ? kSqrt2 * half_sum : half_sum;
                const double nd = d + step;
                if (nd < dist[ncell] || (nd == dist[ncell] && s < src[ncell])) {
                    dist[ncell] = nd;
                    src[ncell] = s;
                    heap.emplace(nd, s, ncell);
                }
            }
        }
    }

    CostField field{Grid(nrows, ncols, cost_grid.cellsize(), cost_grid.origin_x(),
                         cost_grid.origin_y(), 0.0, cost_grid.nodata()),
                    std::move(src), std::vector<std::uint8_t>(n, 0)};
    for (std::size_t k = 0; k < n; ++k) {
        if (dist[k] == kInf) {
            field.accumulated[k] = field.accumulated.nodata();
            field.source_index[k] = -1;
        } else {
            field.accumulated[k] = dist[k];
            field.reachable[k] = 1;
        }
    }
    return field;
}

std::vector<std::size_t> flood_sources(const GridPair& pair, const Grid& coarse_depth,
                                       double wet_threshold) {
    if (!coarse_depth.same_layout(pair.coarse)) {
        throw AlignmentError("flood_sources: coarse depth grid does not match the pair");
    }
    if (!(wet_threshold >= 0.0)) {
        throw InputError("flood_sources: wet_threshold must be >= 0");
    }
    std::vector<std::size_t> out;
    for (int fi = 0; fi < pair.fine.nrows(); ++fi) {
        for (int fj = 0; fj < pair.fine.ncols(); ++fj) {
            const CellIndex parent = pair.coarse_parent(fi, fj);
            if (coarse_depth.is_nodata(parent.row, parent.col)) continue;
            if (coarse_depth(parent.row, parent.col) > wet_threshold) {
                out.push_back(pair.fine.linear(fi, fj));
            }
        }
    }
    return out;
}

} // namespace pdflood

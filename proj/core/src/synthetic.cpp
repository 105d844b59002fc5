#include "pdflood/synthetic.hpp"

#include <cmath>
#include <deque>

#include "pdflood/rng.hpp"

namespace pdflood {

Grid make_valley(const ValleySpec& spec) {
    if (spec.nrows <= 0 || spec.ncols <= 0) {
        throw InputError("make_valley: dimensions must be positive");
    }
    if (spec.channel_row < 0 || spec.channel_row >= spec.nrows) {
        throw InputError("make_valley: channel_row outside the grid");
    }
    if (spec.noise_amp < 0.0) {
        throw InputError("make_valley: noise_amp must be >= 0");
    }

    Grid elev(spec.nrows, spec.ncols, spec.cellsize);

    // Smooth noise: a few long-wavelength sinusoids whose amplitudes sum to
    // noise_amp, so |noise| <= noise_amp everywhere.
    constexpr int kWaves = 4;
    double freq_i[kWaves], freq_j[kWaves], phase[kWaves];
    Rng rng(spec.seed);
    for (int w = 0; w < kWaves; ++w) {
        const double wavelength = rng.uniform(10.0, 30.0); // cells
        const double angle = rng.uniform(0.0, 2.0 * M_PI);
        freq_i[w] = 2.0 * M_PI / wavelength * std::sin(angle);
        freq_j[w] = 2.0 * M_PI / wavelength * std::cos(angle);
        phase[w] = rng.uniform(0.0, 2.0 * M_PI);
    }
    const double amp = spec.noise_amp / kWaves;

    for (int i = 0; i < spec.nrows; ++i) {
        for (int j = 0; j < spec.ncols; ++j) {
            double noise = 0.0;
            for (int w = 0; w < kWaves; ++w) {
                noise += amp * std::sin(freq_i[w] * i + freq_j[w] * j + phase[w]);
            }
            elev(i, j) = spec.base_elev +
                         spec.cross_slope * std::abs(i - spec.channel_row) + noise;
        }
    }
    return elev;
}

std::vector<std::size_t> row_cells(const Grid& grid, int row) {
    if (row < 0 || row >= grid.nrows()) {
        throw InputError("row_cells: row outside the grid");
    }
    std::vector<std::size_t> cells(static_cast<std::size_t>(grid.ncols()));
    for (int j = 0; j < grid.ncols(); ++j) cells[static_cast<std::size_t>(j)] = grid.linear(row, j);
    return cells;
}

FloodTruth bathtub_flood(const Grid& elev, std::span<const std::size_t> channel_cells,
                         double water_surface) {
    const std::size_t n = elev.size();
    FloodTruth truth;
    truth.water_surface = water_surface;
    truth.depth = Grid(elev.nrows(), elev.ncols(), elev.cellsize(), elev.origin_x(),
                       elev.origin_y(), 0.0, elev.nodata());
    truth.wet_mask.assign(n, 0);

    std::deque<std::size_t> frontier;
    for (std::size_t c : channel_cells) {
        if (c >= n) throw InputError("bathtub_flood: channel cell out of range");
        if (elev.is_nodata_at(c)) continue;
        if (elev[c] < water_surface && !truth.wet_mask[c]) {
            truth.wet_mask[c] = 1;
            frontier.push_back(c);
        }
    }
    if (frontier.empty()) {
        throw InputError("bathtub_flood: no channel cell lies below the water surface");
    }

    const int nrows = elev.nrows();
    const int ncols = elev.ncols();
    while (!frontier.empty()) {
        const std::size_t cell = frontier.front();
        frontier.pop_front();
        const auto [i, j] = elev.cell_at(cell);
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                if (di == 0 && dj == 0) continue;
                const int ni = i + di;
                const int nj = j + dj;
                if (ni < 0 || ni >= nrows || nj < 0 || nj >= ncols) continue;
                const std::size_t nc = elev.linear(ni, nj);
                if (truth.wet_mask[nc] || elev.is_nodata_at(nc)) continue;
                if (elev[nc] < water_surface) {
                    truth.wet_mask[nc] = 1;
                    frontier.push_back(nc);
                }
            }
        }
    }

    for (std::size_t c = 0; c < n; ++c) {
        if (elev.is_nodata_at(c)) {
            truth.depth[c] = truth.depth.nodata();
        } else if (truth.wet_mask[c]) {
            truth.depth[c] = water_surface - elev[c];
        }
    }
    return truth;
}

Grid coarse_flood(const Grid& fine_elev, int factor,
                  std::span<const std::size_t> fine_channel_cells, double water_surface) {
    const Grid coarse_elev = aggregate(fine_elev, factor);
    std::vector<std::uint8_t> seen(coarse_elev.size(), 0);
    std::vector<std::size_t> coarse_channel;
    for (std::size_t c : fine_channel_cells) {
        const auto [fi, fj] = fine_elev.cell_at(c);
        const std::size_t cc = coarse_elev.linear(fi / factor, fj / factor);
        if (!seen[cc]) {
            seen[cc] = 1;
            coarse_channel.push_back(cc);
        }
    }
    return bathtub_flood(coarse_elev, coarse_channel, water_surface).depth;
}

std::vector<HighWaterMark> sample_hwms(const FloodTruth& truth, int k, double noise_sd,
                                       std::uint64_t seed) {
    std::vector<std::size_t> wet_cells;
    for (std::size_t c = 0; c < truth.wet_mask.size(); ++c) {
        if (truth.wet_mask[c]) wet_cells.push_back(c);
    }
    if (static_cast<int>(wet_cells.size()) < k) {
        throw InputError("sample_hwms: fewer wet cells than requested marks");
    }

    Rng rng(seed);
    // seeded partial Fisher-Yates for k distinct cells
    std::vector<HighWaterMark> marks;
    marks.reserve(static_cast<std::size_t>(k));
    for (int m = 0; m < k; ++m) {
        const std::size_t pick =
            static_cast<std::size_t>(m) +
            rng.uniform_index(wet_cells.size() - static_cast<std::size_t>(m));
        std::swap(wet_cells[static_cast<std::size_t>(m)], wet_cells[pick]);
        const std::size_t cell = wet_cells[static_cast<std::size_t>(m)];
        const auto [i, j] = truth.depth.cell_at(cell);
        const double observed =
            std::max(truth.depth[cell] + rng.normal(0.0, noise_sd), 0.0);
        marks.push_back({truth.depth.center_x(j), truth.depth.center_y(i), observed});
    }
    return marks;
}

double toy_alpha(CellIndex cell) { return 6.0 + 0.02 * cell.row + 0.01 * cell.col; }

double toy_beta(CellIndex cell) { return 0.8 + 0.1 * ((cell.row + cell.col) % 5); }

std::vector<double> toy_forward_model(double theta, std::span<const CellIndex> locations) {
    if (!(theta > 0.01 && theta < 0.1)) {
        throw InputError("toy_forward_model: theta must lie in (0.01, 0.1)");
    }
    std::vector<double> out;
    out.reserve(locations.size());
    for (const CellIndex& cell : locations) {
        out.push_back(toy_alpha(cell) + toy_beta(cell) * std::log(theta));
    }
    return out;
}

} // namespace pdflood

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "pdflood/errors.hpp"

namespace pdflood {

struct CellIndex {
    int row = 0;
    int col = 0;
    bool operator==(const CellIndex&) const = default;
};

/// Rectangular raster of doubles with a georeferenced lower-left origin.
///
/// Rows are stored south-to-north: row 0 is the southernmost row. ESRI ASCII
/// files list the northernmost row first; the conversion happens in
/// read_ascii_grid / write_ascii_grid and nowhere else. The cell (i, j) has
/// its center at (origin_x + (j + 0.5) * cellsize,
///                origin_y + (i + 0.5) * cellsize).
///
/// Grids are immutable in all pipeline code paths once built; every free
/// function in this toolkit takes them by const reference and is safe to
/// call concurrently on shared grids.
class Grid {
public:
    static constexpr double kDefaultNodata = -9999.0;

    Grid() = default;
    Grid(int nrows, int ncols, double cellsize, double origin_x = 0.0,
         double origin_y = 0.0, double fill = 0.0, double nodata = kDefaultNodata);

    int nrows() const { return nrows_; }
    int ncols() const { return ncols_; }
    double cellsize() const { return cellsize_; }
    double origin_x() const { return origin_x_; }
    double origin_y() const { return origin_y_; }
    double nodata() const { return nodata_; }
    std::size_t size() const { return values_.size(); }

    double operator()(int i, int j) const { return values_[linear(i, j)]; }
    double& operator()(int i, int j) { return values_[linear(i, j)]; }
    double operator[](std::size_t k) const { return values_[k]; }
    double& operator[](std::size_t k) { return values_[k]; }

    bool is_nodata(int i, int j) const { return values_[linear(i, j)] == nodata_; }
    bool is_nodata_at(std::size_t k) const { return values_[k] == nodata_; }

    std::size_t linear(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(ncols_) +
               static_cast<std::size_t>(j);
    }
    CellIndex cell_at(std::size_t k) const {
        return {static_cast<int>(k / static_cast<std::size_t>(ncols_)),
                static_cast<int>(k % static_cast<std::size_t>(ncols_))};
    }

    double center_x(int j) const { return origin_x_ + (j + 0.5) * cellsize_; }
    double center_y(int i) const { return origin_y_ + (i + 0.5) * cellsize_; }

    double extent_x() const { return ncols_ * cellsize_; }
    double extent_y() const { return nrows_ * cellsize_; }

    bool contains_point(double x, double y) const {
        return x >= origin_x_ && x <= origin_x_ + extent_x() &&
               y >= origin_y_ && y <= origin_y_ + extent_y();
    }
    bool in_bounds(int i, int j) const {
        return i >= 0 && i < nrows_ && j >= 0 && j < ncols_;
    }

    /// Same dimensions, cell size, and origin.
    bool same_layout(const Grid& other) const;

    std::span<const double> values() const { return values_; }

private:
    int nrows_ = 0;
    int ncols_ = 0;
    double cellsize_ = 1.0;
    double origin_x_ = 0.0;
    double origin_y_ = 0.0;
    double nodata_ = kDefaultNodata;
    std::vector<double> values_;
};

/// A fine grid and the coarse grid it refines, sharing origin and extent.
/// coarse.cellsize == factor * fine.cellsize exactly.
struct GridPair {
    Grid fine;
    Grid coarse;
    int factor = 1;

    /// Validates the registration convention and derives the factor.
    /// Throws AlignmentError on any mismatch.
    GridPair(Grid fine_grid, Grid coarse_grid);

    /// Coarse cell containing fine cell (fi, fj).
    CellIndex coarse_parent(int fi, int fj) const {
        return {fi / factor, fj / factor};
    }
};

/// How bilinear() treats nodata among the four neighboring cell centers.
/// kError throws so data bugs surface loudly; kRenormalize reweights over
/// the valid neighbors (still throws when all four are nodata).
enum class NodataPolicy { kError, kRenormalize };

/// Reads an ESRI ASCII grid (.asc). Header keys: ncols, nrows, xllcorner,
/// yllcorner, cellsize, NODATA_value (optional, default -9999); then nrows
/// data lines, northernmost row first. Malformed headers, short rows, and
/// bad tokens are reported with their line number.
Grid read_ascii_grid(const std::filesystem::path& path);

/// Writes an ESRI ASCII grid. Values use shortest round-trip formatting, so
/// read(write(g)) reproduces every value bit-exactly.
void write_ascii_grid(const Grid& grid, const std::filesystem::path& path);

/// Block-mean aggregation: each coarse cell is the mean of its factor x
/// factor fine block, ignoring nodata members; the coarse cell is nodata iff
/// the whole block is nodata. Dimensions must divide by factor.
Grid aggregate(const Grid& fine, int factor);

/// Bilinear interpolation over the four cell centers surrounding (x, y).
/// Queries within the half-cell margin outside the center hull are clamped
/// onto the hull, so every point of the grid's extent has a defined value.
/// Throws InputError when (x, y) is outside the grid bounds.
double bilinear(const Grid& grid, double x, double y,
                NodataPolicy policy = NodataPolicy::kError);

/// Cell containing the point (x, y); points on shared edges resolve to the
/// higher-index cell. Throws InputError for points outside the grid.
CellIndex cell_of(const Grid& grid, double x, double y);

} // namespace pdflood

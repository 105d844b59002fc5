#include "pdflood/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace pdflood {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

double parse_double(std::string_view token, const std::filesystem::path& path,
                    int line_no) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw InputError(path.string() + ":" + std::to_string(line_no) +
                         ": non-numeric token '" + std::string(token) + "'");
    }
    return v;
}

long parse_long(std::string_view token, const std::filesystem::path& path,
                int line_no) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw InputError(path.string() + ":" + std::to_string(line_no) +
                         ": expected an integer, got '" + std::string(token) + "'");
    }
    return v;
}

std::vector<std::string_view> split_tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace

Grid::Grid(int nrows, int ncols, double cellsize, double origin_x, double origin_y,
           double fill, double nodata)
    : nrows_(nrows),
      ncols_(ncols),
      cellsize_(cellsize),
      origin_x_(origin_x),
      origin_y_(origin_y),
      nodata_(nodata),
      values_(static_cast<std::size_t>(nrows) * static_cast<std::size_t>(ncols), fill) {
    if (nrows <= 0 || ncols <= 0) {
        throw InputError("grid dimensions must be positive");
    }
    if (!(cellsize > 0.0)) {
        throw InputError("grid cellsize must be > 0");
    }
}

bool Grid::same_layout(const Grid& other) const {
    return nrows_ == other.nrows_ && ncols_ == other.ncols_ &&
           cellsize_ == other.cellsize_ && origin_x_ == other.origin_x_ &&
           origin_y_ == other.origin_y_;
}

GridPair::GridPair(Grid fine_grid, Grid coarse_grid)
    : fine(std::move(fine_grid)), coarse(std::move(coarse_grid)) {
    if (fine.origin_x() != coarse.origin_x() || fine.origin_y() != coarse.origin_y()) {
        throw AlignmentError("fine and coarse grids must share an origin");
    }
    const double ratio = coarse.cellsize() / fine.cellsize();
    factor = static_cast<int>(std::lround(ratio));
    if (factor < 1 || coarse.cellsize() != factor * fine.cellsize()) {
        throw AlignmentError("coarse cellsize must be an exact integer multiple of fine cellsize");
    }
    if (fine.ncols() != factor * coarse.ncols() || fine.nrows() != factor * coarse.nrows()) {
        throw AlignmentError("fine dimensions must be factor times the coarse dimensions");
    }
}

Grid read_ascii_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open grid file: " + path.string());
    }

    long ncols = -1, nrows = -1;
    double xll = 0.0, yll = 0.0, cellsize = 0.0, nodata = Grid::kDefaultNodata;
    bool have_xll = false, have_yll = false, have_cellsize = false;

    std::string line;
    int line_no = 0;

    // Header: key/value lines until the first line that starts with a number.
    std::streampos data_start = in.tellg();
    while (std::getline(in, line)) {
        ++line_no;
        auto tokens = split_tokens(line);
        if (tokens.empty()) {
            data_start = in.tellg();
            continue;
        }
        const std::string key = lower(tokens[0]);
        const bool is_header_key = key == "ncols" || key == "nrows" ||
                                   key == "xllcorner" || key == "yllcorner" ||
                                   key == "cellsize" || key == "nodata_value";
        if (!is_header_key) break;
        if (tokens.size() != 2) {
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": malformed header line '" + line + "'");
        }
        if (key == "ncols") {
            ncols = parse_long(tokens[1], path, line_no);
        } else if (key == "nrows") {
            nrows = parse_long(tokens[1], path, line_no);
        } else if (key == "xllcorner") {
            xll = parse_double(tokens[1], path, line_no);
            have_xll = true;
        } else if (key == "yllcorner") {
            yll = parse_double(tokens[1], path, line_no);
            have_yll = true;
        } else if (key == "cellsize") {
            cellsize = parse_double(tokens[1], path, line_no);
            have_cellsize = true;
        } else {
            nodata = parse_double(tokens[1], path, line_no);
        }
        data_start = in.tellg();
    }

    if (ncols <= 0 || nrows <= 0 || !have_xll || !have_yll || !have_cellsize) {
        throw InputError(path.string() +
                         ": incomplete header (need ncols, nrows, xllcorner, yllcorner, cellsize)");
    }
    if (!(cellsize > 0.0)) {
        throw InputError(path.string() + ": cellsize must be > 0");
    }

    Grid grid(static_cast<int>(nrows), static_cast<int>(ncols), cellsize, xll, yll,
              nodata, nodata);

    // Data rows, northernmost first; re-read from the first non-header line.
    in.clear();
    in.seekg(data_start);
    line_no -= 1; // the line that broke the header loop gets re-counted below

    int rows_read = 0;
    while (rows_read < nrows && std::getline(in, line)) {
        ++line_no;
        auto tokens = split_tokens(line);
        if (tokens.empty()) continue;
        if (static_cast<long>(tokens.size()) != ncols) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(ncols) + " values, got " +
                             std::to_string(tokens.size()));
        }
        const int i = static_cast<int>(nrows) - 1 - rows_read; // north first -> south row 0
        for (long j = 0; j < ncols; ++j) {
            const double v = parse_double(tokens[static_cast<std::size_t>(j)], path, line_no);
            if (v != nodata && !std::isfinite(v)) {
                throw InputError(path.string() + ":" + std::to_string(line_no) +
                                 ": non-finite value");
            }
            grid(i, static_cast<int>(j)) = v;
        }
        ++rows_read;
    }
    if (rows_read != nrows) {
        throw InputError(path.string() + ": expected " + std::to_string(nrows) +
                         " data rows, got " + std::to_string(rows_read));
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!split_tokens(line).empty()) {
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": data beyond the declared " + std::to_string(nrows) +
                             " rows");
        }
    }
    return grid;
}

void write_ascii_grid(const Grid& grid, const std::filesystem::path& path) {
    if (path.empty()) {
        throw InputError("empty output path");
    }
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot open file for writing: " + path.string());
    }
    out << "ncols " << grid.ncols() << '\n';
    out << "nrows " << grid.nrows() << '\n';
    out << "xllcorner " << format_double(grid.origin_x()) << '\n';
    out << "yllcorner " << format_double(grid.origin_y()) << '\n';
    out << "cellsize " << format_double(grid.cellsize()) << '\n';
    out << "NODATA_value " << format_double(grid.nodata()) << '\n';
    for (int i = grid.nrows() - 1; i >= 0; --i) {
        for (int j = 0; j < grid.ncols(); ++j) {
            if (j) out << ' ';
            out << format_double(grid(i, j));
        }
        out << '\n';
    }
    if (!out) {
        throw InputError("write failed: " + path.string());
    }
}

Grid aggregate(const Grid& fine, int factor) {
    if (factor < 1) {
        throw InputError("aggregation factor must be >= 1");
    }
    if (fine.nrows() % factor != 0 || fine.ncols() % factor != 0) {
        throw InputError("grid dimensions are not divisible by the aggregation factor");
    }
    if (factor == 1) return fine;

    Grid coarse(fine.nrows() / factor, fine.ncols() / factor, fine.cellsize() * factor,
                fine.origin_x(), fine.origin_y(), 0.0, fine.nodata());
    for (int ci = 0; ci < coarse.nrows(); ++ci) {
        for (int cj = 0; cj < coarse.ncols(); ++cj) {
            double sum = 0.0;
            int count = 0;
            for (int di = 0; di < factor; ++di) {
                for (int dj = 0; dj < factor; ++dj) {
                    const int fi = ci * factor + di;
                    const int fj = cj * factor + dj;
                    if (fine.is_nodata(fi, fj)) continue;
                    sum += fine(fi, fj);
                    ++count;
                }
            }
            coarse(ci, cj) = count ? sum / count : coarse.nodata();
        }
    }
    return coarse;
}

double bilinear(const Grid& grid, double x, double y, NodataPolicy policy) {
    if (!grid.contains_point(x, y)) {
        std::ostringstream msg;
        msg << "bilinear query (" << x << ", " << y << ") outside grid bounds";
        throw InputError(msg.str());
    }

    // Continuous coordinates in cell-center space; the half-cell margin
    // clamps onto the hull of centers.
    const double gx = (x - grid.origin_x()) / grid.cellsize() - 0.5;
    const double gy = (y - grid.origin_y()) / grid.cellsize() - 0.5;

    const auto clamp01 = [](double t) { return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t); };

    int j0, i0;
    double tx, ty;
    if (grid.ncols() == 1) {
        j0 = 0;
        tx = 0.0;
    } else {
        j0 = static_cast<int>(std::floor(gx));
        j0 = std::clamp(j0, 0, grid.ncols() - 2);
        tx = clamp01(gx - j0);
    }
    if (grid.nrows() == 1) {
        i0 = 0;
        ty = 0.0;
    } else {
        i0 = static_cast<int>(std::floor(gy));
        i0 = std::clamp(i0, 0, grid.nrows() - 2);
        ty = clamp01(gy - i0);
    }
    const int j1 = std::min(j0 + 1, grid.ncols() - 1);
    const int i1 = std::min(i0 + 1, grid.nrows() - 1);

    const int rows[4] = {i0, i0, i1, i1};
    const int cols[4] = {j0, j1, j0, j1};
    const double weights[4] = {(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty),
                               (1.0 - tx) * ty, tx * ty};

    double value = 0.0;
    double weight_sum = 0.0;
    for (int k = 0; k < 4; ++k) {
        const bool nd = grid.is_nodata(rows[k], cols[k]);
        if (nd) {
            if (policy == NodataPolicy::kError && weights[k] > 0.0) {
                throw InputError("bilinear neighbor is nodata");
            }
            continue;
        }
        value += weights[k] * grid(rows[k], cols[k]);
        weight_sum += weights[k];
    }
    if (weight_sum == 0.0) {
        throw InputError("bilinear query has no valid neighbors");
    }
    return value / weight_sum;
}

CellIndex cell_of(const Grid& grid, double x, double y) {
    if (!grid.contains_point(x, y)) {
        std::ostringstream msg;
        msg << "point (" << x << ", " << y << ") outside grid bounds";
        throw InputError(msg.str());
    }
    // floor() sends shared edges to the higher-index cell; the outer max
    // boundary clamps back into the last cell.
    int j = static_cast<int>(std::floor((x - grid.origin_x()) / grid.cellsize()));
    int i = static_cast<int>(std::floor((y - grid.origin_y()) / grid.cellsize()));
    j = std::clamp(j, 0, grid.ncols() - 1);
    i = std::clamp(i, 0, grid.nrows() - 1);
    return {i, j};
}

} // namespace pdflood

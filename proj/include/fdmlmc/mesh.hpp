#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fdmlmc/errors.hpp"

namespace fdmlmc {

// Uniform mesh on [-K, K] with an odd number of cells, one centered at x = 0.
class Grid1D {
public:
    Grid1D() = default;

    Grid1D(double half_width, std::size_t cells) : half_width_(half_width), cells_(cells) {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw DomainError("grid half width must be positive and finite");
        if (cells == 0 || cells % 2 == 0)
            throw DomainError("grid cell count must be odd, got " + std::to_string(cells));
        dx_ = 2.0 * half_width / static_cast<double>(cells);
    }

    double half_width() const noexcept { return half_width_; }
    std::size_t cells() const noexcept { return cells_; }
    double dx() const noexcept { return dx_; }
    // P in x_i = i*dx, i = -P..P
    std::ptrdiff_t half_cells() const noexcept { return static_cast<std::ptrdiff_t>(cells_ / 2); }

    // Center of the cell with storage index idx in [0, N).
    double center(std::size_t idx) const noexcept {
        return static_cast<double>(static_cast<std::ptrdiff_t>(idx) - half_cells()) * dx_;
    }
    double left_face(std::size_t idx) const noexcept { return center(idx) - 0.5 * dx_; }
    double right_face(std::size_t idx) const noexcept { return center(idx) + 0.5 * dx_; }

    friend bool operator==(const Grid1D& a, const Grid1D& b) noexcept {
        return a.cells_ == b.cells_ && a.half_width_ == b.half_width_;
    }

private:
    double half_width_ = 1.0;
    std::size_t cells_ = 1;
    double dx_ = 2.0;
};

// Level l has N_0 * 3^l cells on the same interval.
class MeshHierarchy {
public:
    MeshHierarchy(double half_width, std::size_t base_cells, int levels) : levels_(levels) {
        if (levels < 0) throw DomainError("hierarchy needs a nonnegative number of levels");
        grids_.reserve(static_cast<std::size_t>(levels) + 1);
        std::size_t n = base_cells;
        for (int l = 0; l <= levels; ++l) {
            grids_.emplace_back(half_width, n);
            n *= 3;
        }
    }

    int levels() const noexcept { return levels_; }
    const Grid1D& grid(int level) const {
        if (level < 0 || level > levels_)
            throw StructuralError("level " + std::to_string(level) + " outside hierarchy");
        return grids_[static_cast<std::size_t>(level)];
    }
    const Grid1D& base() const noexcept { return grids_.front(); }
    const Grid1D& finest() const noexcept { return grids_.back(); }

private:
    int levels_;
    std::vector<Grid1D> grids_;
};

// Cell averages on a grid at a given time.
struct SolutionField {
    Grid1D grid;
    std::vector<double> values;
    double time = 0.0;

    SolutionField() = default;
    SolutionField(const Grid1D& g, std::vector<double> v, double t = 0.0)
        : grid(g), values(std::move(v)), time(t) {
        if (values.size() != grid.cells())
            throw StructuralError("field length " + std::to_string(values.size()) +
                                  " does not match grid with " + std::to_string(grid.cells()) +
                                  " cells");
        for (double x : values)
            if (!std::isfinite(x)) throw NumericalError("field holds a non-finite value");
    }
    static SolutionField constant(const Grid1D& g, double value, double t = 0.0) {
        return SolutionField(g, std::vector<double>(g.cells(), value), t);
    }

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const noexcept { return values[i]; }
};

namespace detail {
inline void check_refinement(const Grid1D& coarse, const Grid1D& fine) {
    if (fine.cells() != 3 * coarse.cells() || fine.half_width() != coarse.half_width())
        throw StructuralError("grids with " + std::to_string(coarse.cells()) + " and " +
                              std::to_string(fine.cells()) +
                              " cells are not one 3-refinement apart");
}
} // namespace detail

// Mean of each triple of fine cells, taken relative to the middle child so
// that equal children reproduce their value exactly.
inline SolutionField restrict(const SolutionField& fine, const Grid1D& coarse_grid) {
    detail::check_refinement(coarse_grid, fine.grid);
    std::vector<double> out(coarse_grid.cells());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double* c = &fine.values[3 * i];
        out[i] = c[1] + ((c[0] - c[1]) + (c[2] - c[1])) / 3.0;
    }
    return SolutionField(coarse_grid, std::move(out), fine.time);
}

// Piecewise-constant injection.
inline SolutionField prolong(const SolutionField& coarse, const Grid1D& fine_grid) {
    detail::check_refinement(coarse.grid, fine_grid);
    std::vector<double> out(fine_grid.cells());
    for (std::size_t i = 0; i < coarse.size(); ++i)
        out[3 * i] = out[3 * i + 1] = out[3 * i + 2] = coarse.values[i];
    return SolutionField(fine_grid, std::move(out), coarse.time);
}

// Repeated injection up to a grid any number of 3-refinements finer.
inline SolutionField prolong_to(const SolutionField& field, const Grid1D& target) {
    if (field.grid == target) return field;
    if (target.cells() <= field.grid.cells() || target.half_width() != field.grid.half_width() ||
        target.cells() % field.grid.cells() != 0)
        throw StructuralError("cannot prolong a " + std::to_string(field.grid.cells()) +
                              "-cell field to " + std::to_string(target.cells()) + " cells");
    SolutionField out = field;
    while (out.grid.cells() < target.cells())
        out = prolong(out, Grid1D(target.half_width(), out.grid.cells() * 3));
    if (!(out.grid == target))
        throw StructuralError("target grid is not a power-of-3 refinement");
    return out;
}

// sum |v| dx
inline double l1_norm(std::span<const double> v, double dx) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s * dx;
}

// sqrt(sum v^2 dx)
inline double l2_norm(std::span<const double> v, double dx) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s * dx);
}

inline double mass(const SolutionField& f) {
    double s = 0.0;
    for (double x : f.values) s += x;
    return s * f.grid.dx();
}

// Columns x,<name>; 17 significant digits.
inline void write_csv(std::ostream& os, const SolutionField& f, const std::string& name = "value") {
    const auto old = os.precision(17);
    os << "x," << name << '\n';
    for (std::size_t i = 0; i < f.size(); ++i) os << f.grid.center(i) << ',' << f.values[i] << '\n';
    os.precision(old);
}

} // namespace fdmlmc

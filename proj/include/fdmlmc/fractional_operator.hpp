#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fdmlmc/errors.hpp"
#include "fdmlmc/mesh.hpp"

namespace fdmlmc {

enum class BoundaryMode { ConstantExtension, Periodic };

// Normalization of the fractional Laplacian of order lambda in dimension d.
inline double c_lambda(double lambda, int d = 1) {
    if (!(lambda > 0.0 && lambda < 2.0))
        throw DomainError("fractional order must lie in (0, 2), got " + std::to_string(lambda));
    if (lambda > 2.0 - 1e-8) throw DomainError("fractional order too close to 2 (Gamma pole)");
    if (d < 1) throw DomainError("dimension must be at least 1");
    const double dd = static_cast<double>(d);
    return std::exp2(lambda - 1.0) * lambda * std::tgamma(0.5 * (dd + lambda)) /
           (std::pow(std::numbers::pi, 0.5 * dd) * std::tgamma(1.0 - 0.5 * lambda));
}

// Precomputed weights G_|j| and boundary tail coefficients for one (grid, lambda).
class FractionalKernel {
public:
    FractionalKernel(const Grid1D& grid, double lambda)
        : grid_(grid), lambda_(lambda), c_(c_lambda(lambda, 1)) {
        const std::size_t n = grid.cells();
        const double scale = c_ / lambda * std::pow(grid.dx(), -lambda);
        tail_coef_ = scale;

        weights_.assign(n, 0.0); // index |j| = 0 .. 2P
        for (std::size_t j = 1; j < n; ++j) {
            // (x^-l - (x+1)^-l) with x = j - 1/2, written to avoid cancellation
            const double x = static_cast<double>(j) - 0.5;
            weights_[j] = scale * std::pow(x, -lambda) * -std::expm1(-lambda * std::log1p(1.0 / x));
        }

        left_tail_.resize(n);
        right_tail_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            left_tail_[i] = scale * std::pow(static_cast<double>(i) + 0.5, -lambda);
            right_tail_[i] = scale * std::pow(static_cast<double>(n - 1 - i) + 0.5, -lambda);
        }

        // banded[t] = G_|t - (N-1)|, t = 0 .. 2N-2
        banded_.resize(2 * n - 1);
        for (std::size_t t = 0; t < banded_.size(); ++t) {
            const std::size_t j = t >= n - 1 ? t - (n - 1) : (n - 1) - t;
            banded_[t] = weights_[j];
        }
        // wrapped[t] = G of the nearest periodic image at offset t - N, t = 0 .. 2N-1
        wrapped_.resize(2 * n);
        for (std::size_t t = 0; t < wrapped_.size(); ++t) {
            const std::size_t m = t % n;
            wrapped_[t] = weights_[std::min(m, n - m)];
        }
    }

    const Grid1D& grid() const noexcept { return grid_; }
    double lambda() const noexcept { return lambda_; }
    double c() const noexcept { return c_; }
    std::size_t cells() const noexcept { return grid_.cells(); }

    // G_j for j in [-2P, 2P]; G_0 = 0.
    double weight(std::ptrdiff_t j) const {
        const auto a = static_cast<std::size_t>(j < 0 ? -j : j);
        if (a >= weights_.size()) throw StructuralError("weight index beyond 2P");
        return weights_[a];
    }
    const std::vector<double>& weights() const noexcept { return weights_; }
    double tail_coefficient() const noexcept { return tail_coef_; }
    double left_tail(std::size_t idx) const noexcept { return left_tail_[idx]; }
    double right_tail(std::size_t idx) const noexcept { return right_tail_[idx]; }

    // Coupling between storage indices i and k under the given boundary mode.
    double coupling(std::size_t i, std::size_t k, BoundaryMode mode) const noexcept {
        const std::size_t n = cells();
        return mode == BoundaryMode::Periodic ? wrapped_[i + n - k] : banded_[i + n - 1 - k];
    }

    const double* banded() const noexcept { return banded_.data(); }
    const double* wrapped() const noexcept { return wrapped_.data(); }

private:
    Grid1D grid_;
    double lambda_;
    double c_;
    double tail_coef_ = 0.0;
    std::vector<double> weights_;
    std::vector<double> left_tail_, right_tail_;
    std::vector<double> banded_, wrapped_;
};

inline FractionalKernel build_weights(const Grid1D& grid, double lambda) {
    return FractionalKernel(grid, lambda);
}

// out_i = sum_k G_{i-k} (a_k - a_i) (+ boundary tails); overwrites out.
// Summation runs over k in increasing order for every i. Pairs where both
// a_k and a_i are exactly zero contribute exact zeros and are skipped, which
// leaves the result bit-identical to the full double sum.
inline void apply_nonlocal_into(const FractionalKernel& kernel, std::span<const double> a,
                                BoundaryMode mode, std::span<double> out) {
    const std::size_t n = kernel.cells();
    if (a.size() != n || out.size() != n)
        throw StructuralError("nonlocal apply: vector length " + std::to_string(a.size()) +
                              " does not match " + std::to_string(n) + " cells");
    std::fill(out.begin(), out.end(), 0.0);

    // maximal runs of cells with a_i != 0
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = 0; i < n;) {
        if (a[i] == 0.0) { ++i; continue; }
        std::size_t j = i;
        while (j < n && a[j] != 0.0) ++j;
        runs.emplace_back(i, j);
        i = j;
    }
    if (runs.empty()) return;

    const double* base = mode == BoundaryMode::Periodic ? kernel.wrapped() + n : kernel.banded() + (n - 1);
    const double* av = a.data();
    double* o = out.data();
    for (std::size_t k = 0; k < n; ++k) {
        const double ak = av[k];
        const double* g = base - k; // g[i] = coupling(i, k)
        if (ak != 0.0) {
            for (std::size_t i = 0; i < n; ++i) o[i] += g[i] * (ak - av[i]);
        } else {
            for (const auto& [lo, hi] : runs)
                for (std::size_t i = lo; i < hi; ++i) o[i] += g[i] * (ak - av[i]);
        }
    }

    if (mode == BoundaryMode::ConstantExtension) {
        const double a_left = av[0], a_right = av[n - 1];
        for (std::size_t i = 0; i < n; ++i)
            o[i] += kernel.left_tail(i) * (a_left - av[i]) + kernel.right_tail(i) * (a_right - av[i]);
    }
}

inline std::vector<double> apply_nonlocal(const FractionalKernel& kernel, std::span<const double> a,
                                          BoundaryMode mode) {
    std::vector<double> out(a.size());
    apply_nonlocal_into(kernel, a, mode, out);
    return out;
}

} // namespace fdmlmc

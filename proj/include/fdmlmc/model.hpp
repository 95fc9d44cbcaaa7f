#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fdmlmc/errors.hpp"
#include "fdmlmc/philox.hpp"

namespace fdmlmc {

using ScalarFn = std::function<double(double)>;

// u(x) = values[j] on (breaks[j-1], breaks[j]); values has one more entry than breaks.
struct PiecewiseConstant {
    std::vector<double> breaks;
    std::vector<double> values{0.0};

    static PiecewiseConstant constant(double v) { return {{}, {v}}; }

    void validate() const {
        if (values.size() != breaks.size() + 1)
            throw DomainError("piecewise-constant datum needs one more value than breaks");
        for (std::size_t j = 1; j < breaks.size(); ++j)
            if (!(breaks[j - 1] <= breaks[j])) throw DomainError("breaks must be sorted");
    }

    // Value at x; at a break the right piece is used.
    double operator()(double x) const {
        const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
        return values[static_cast<std::size_t>(it - breaks.begin())];
    }

    // Exact mean over [a, b], a < b.
    double average(double a, double b) const {
        double integral = 0.0, left = a;
        for (std::size_t j = 0; j <= breaks.size(); ++j) {
            const double right = j < breaks.size() ? std::min(breaks[j], b) : b;
            if (right > left) {
                integral += values[j] * (right - left);
                left = right;
            }
            if (left >= b) break;
        }
        return integral / (b - a);
    }
};

// One realization of the coefficients.
struct ModelSample {
    ScalarFn flux;
    ScalarFn flux_derivative;
    ScalarFn diffusion;
    ScalarFn diffusion_derivative;
    PiecewiseConstant initial;
    double lipschitz_flux = 0.0;
    double lipschitz_diffusion = 0.0;
    // sup |f'| over the states between two values; empty means endpoint values only
    std::function<double(double, double)> max_speed;
};

struct BlParams {
    double c = 0.0;
    double mu = 0.5;
    double alpha = 0.2;

    friend bool operator==(const BlParams&, const BlParams&) = default;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    bool degenerate() const noexcept { return lo == hi; }
    double width() const noexcept { return hi - lo; }
    friend bool operator==(const Range&, const Range&) = default;
};

// Independent uniform laws for (c, mu, alpha).
struct ParamDistribution {
    Range c{0.0, 0.1};
    Range mu{0.3, 0.7};
    Range alpha{0.0, 0.4};

    static ParamDistribution point(const BlParams& p) {
        return {{p.c, p.c}, {p.mu, p.mu}, {p.alpha, p.alpha}};
    }

    void validate() const {
        auto check = [](const Range& r, const char* name) {
            if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi)
                throw DomainError(std::string("range for ") + name + " must satisfy lower <= upper");
        };
        check(c, "c");
        check(mu, "mu");
        check(alpha, "alpha");
        if (!(mu.lo > 0.0)) throw DomainError("viscosity ratio mu must be positive");
        if (alpha.lo < 0.0) throw DomainError("degeneracy threshold alpha must be nonnegative");
    }

    friend bool operator==(const ParamDistribution&, const ParamDistribution&) = default;
};

struct SampleSeed {
    std::uint64_t master_seed = 0;
    int level = 0;
    std::uint64_t index = 0;
};

inline double bl_flux(double u, double mu) {
    const double w = u * u;
    return w / (w + mu * (1.0 - u) * (1.0 - u));
}

inline double bl_flux_derivative(double u, double mu) {
    const double d = u * u + mu * (1.0 - u) * (1.0 - u);
    return 2.0 * mu * u * (1.0 - u) / (d * d);
}

inline double bl_diffusion(double u, double alpha) { return std::max(u - alpha, 0.0); }

// Zero at the kink u = alpha.
inline double bl_diffusion_derivative(double u, double alpha) { return u > alpha ? 1.0 : 0.0; }

inline double bl_initial(double x, double c) { return (-0.5 + c < x && x < 0.0) ? 0.85 : 0.1; }

inline PiecewiseConstant bl_initial_profile(double c) {
    const double left = -0.5 + c;
    if (left >= 0.0) return PiecewiseConstant::constant(0.1);
    return {{left, 0.0}, {0.1, 0.85, 0.1}};
}

// Three uniforms from the (seed, level, index) counter: c and mu from block 0, alpha from block 1.
inline BlParams draw_params(const ParamDistribution& dist, const SampleSeed& seed) {
    const auto key = Philox4x32::key_from(seed.master_seed);
    Philox4x32::Counter ctr{static_cast<std::uint32_t>(seed.index),
                            static_cast<std::uint32_t>(seed.index >> 32),
                            static_cast<std::uint32_t>(seed.level), 0u};
    const auto r0 = Philox4x32::block(ctr, key);
    ctr[3] = 1u;
    const auto r1 = Philox4x32::block(ctr, key);
    auto map = [](const Range& r, double u) { return r.lo + (r.hi - r.lo) * u; };
    return {map(dist.c, Philox4x32::to_unit(r0[0], r0[1])),
            map(dist.mu, Philox4x32::to_unit(r0[2], r0[3])),
            map(dist.alpha, Philox4x32::to_unit(r1[0], r1[1]))};
}

// Location of the maximum of f' on [0, 1]; f' is unimodal there.
inline double bl_peak_speed_state(double mu) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = 1.0;
    for (int it = 0; it < 80; ++it) {
        const double x1 = b - g * (b - a), x2 = a + g * (b - a);
        if (bl_flux_derivative(x1, mu) < bl_flux_derivative(x2, mu))
            a = x1;
        else
            b = x2;
    }
    return 0.5 * (a + b);
}

// max |f'| on a 1025-point grid over [lo, hi], padded by 10%.
inline double estimate_flux_lipschitz(const ScalarFn& fprime, double lo = 0.1, double hi = 0.85) {
    double m = 0.0;
    for (int k = 0; k <= 1024; ++k) m = std::max(m, std::abs(fprime(lo + (hi - lo) * k / 1024.0)));
    return 1.1 * m;
}

inline ModelSample make_sample(const BlParams& p) {
    if (!(p.mu > 0.0)) throw DomainError("viscosity ratio mu must be positive");
    if (p.alpha < 0.0) throw DomainError("degeneracy threshold alpha must be nonnegative");
    ModelSample s;
    const double mu = p.mu, alpha = p.alpha;
    s.flux = [mu](double u) { return bl_flux(u, mu); };
    s.flux_derivative = [mu](double u) { return bl_flux_derivative(u, mu); };
    s.diffusion = [alpha](double u) { return bl_diffusion(u, alpha); };
    s.diffusion_derivative = [alpha](double u) { return bl_diffusion_derivative(u, alpha); };
    s.initial = bl_initial_profile(p.c);
    s.lipschitz_flux = estimate_flux_lipschitz(s.flux_derivative);
    s.lipschitz_diffusion = 1.0;
    const double peak = bl_peak_speed_state(mu);
    s.max_speed = [mu, peak](double a, double b) {
        const double lo = std::min(a, b), hi = std::max(a, b);
        double m = std::max(std::abs(bl_flux_derivative(lo, mu)), std::abs(bl_flux_derivative(hi, mu)));
        if (lo < peak && peak < hi) m = std::max(m, bl_flux_derivative(peak, mu));
        return m;
    };
    return s;
}

using ModelFactory = std::function<ModelSample(const BlParams&)>;

} // namespace fdmlmc

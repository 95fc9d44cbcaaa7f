#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fdmlmc/errors.hpp"
#include "fdmlmc/mc.hpp"
#include "fdmlmc/mesh.hpp"
#include "fdmlmc/model.hpp"
#include "fdmlmc/parallel.hpp"
#include "fdmlmc/solver.hpp"

namespace fdmlmc {

struct RateExponents {
    double theta = 0.25; // L2 convergence order in dx
    double r = 3.0;      // work per solve ~ dx^{-r}
    SchemeKind scheme = SchemeKind::Explicit;
    double lambda = 0.5;
};

inline RateExponents rate_exponents(double lambda, SchemeKind scheme) {
    if (!(lambda > 0.0 && lambda < 2.0)) throw DomainError("lambda must lie in (0, 2)");
    if (lambda == 1.0) throw DomainError("lambda = 1 is the excluded critical case");
    RateExponents e{0.0, 0.0, scheme, lambda};
    if (scheme == SchemeKind::Explicit) {
        e.theta = lambda <= 2.0 / 3.0 ? 0.25 : (2.0 - lambda) / (2.0 * (2.0 + lambda));
        e.r = lambda < 1.0 ? 3.0 : lambda + 2.0;
    } else {
        e.theta = lambda < 1.0 ? 0.25 : (2.0 - lambda) / 4.0;
        e.r = lambda < 1.0 ? 4.0 : 3.0 + lambda;
    }
    return e;
}

struct MlmcPlan {
    MeshHierarchy hierarchy;
    std::vector<std::size_t> samples; // M_l, l = 0..L
    double epsilon = 0.0;
    RateExponents exponents;

    int levels() const noexcept { return hierarchy.levels(); }

    void validate() const {
        if (samples.size() != static_cast<std::size_t>(hierarchy.levels()) + 1)
            throw StructuralError("plan has " + std::to_string(samples.size()) + " sample counts for " +
                                  std::to_string(hierarchy.levels() + 1) + " levels");
        for (std::size_t l = 0; l < samples.size(); ++l) {
            if (samples[l] < 1) throw StructuralError("every level needs at least one sample");
            if (l > 0 && samples[l] > samples[l - 1])
                throw StructuralError("sample counts must be nonincreasing in the level");
        }
    }
};

// 2 dx_L^{2 theta}
inline double default_tolerance(const MeshHierarchy& h, const RateExponents& e) {
    return 2.0 * std::pow(h.finest().dx(), 2.0 * e.theta);
}

// Optimal per-level sample counts. The level chain is evaluated with the
// real-valued M_0 and each entry rounded up.
inline std::vector<std::size_t> level_sample_counts(const MeshHierarchy& h, const RateExponents& e,
                                                    double epsilon) {
    const int L = h.levels();
    const double dx0 = h.base().dx();
    const double th = e.theta, r = e.r;
    const double denom = epsilon - std::pow(dx0, 2.0 * th) * std::pow(3.0, -2.0 * th * L);
    if (!(denom > 0.0))
        throw ToleranceError("tolerance " + std::to_string(epsilon) + " is too small for " + std::to_string(L) +
                             " levels (needs > dx_L^{2 theta})");
    const double ln3 = std::log(3.0);

    std::vector<double> chain(static_cast<std::size_t>(L) + 1);
    if (e.scheme == SchemeKind::Explicit) {
        double s = 0.0;
        for (int j = 1; j <= L; ++j) s += std::pow(3.0, j * (r / 2.0 - th));
        chain[0] = (1.0 + std::pow(dx0, th) * s) / denom;
        for (int l = 1; l <= L; ++l) chain[static_cast<std::size_t>(l)] = chain[0] * std::pow(dx0, th) * std::pow(3.0, -l * (th + r / 2.0));
    } else {
        const double lg = std::log(1.0 / dx0);
        if (!(lg > 0.0)) throw DomainError("explicit-implicit sample counts need dx_0 < 1");
        double s = 0.0;
        for (int j = 1; j <= L; ++j) s += std::pow(3.0, j * (r / 2.0 - th)) * std::sqrt(j * ln3 + lg);
        chain[0] = (std::sqrt(lg) + std::pow(dx0, th) * s) / denom / std::sqrt(lg);
        for (int l = 1; l <= L; ++l)
            chain[static_cast<std::size_t>(l)] = std::sqrt(lg) * std::pow(dx0, th) * std::pow(3.0, -l * (th + r / 2.0)) /
                                                 std::sqrt(l * ln3 + lg) * chain[0];
    }
    std::vector<std::size_t> m(chain.size());
    for (std::size_t l = 0; l < m.size(); ++l) m[l] = static_cast<std::size_t>(std::max(1.0, std::ceil(chain[l])));
    return m;
}

inline MlmcPlan make_plan(const MeshHierarchy& h, double lambda, SchemeKind scheme, double epsilon = 0.0) {
    const auto e = rate_exponents(lambda, scheme);
    const double eps = epsilon > 0.0 ? epsilon : default_tolerance(h, e);
    MlmcPlan plan{h, level_sample_counts(h, e, eps), eps, e};
    plan.validate();
    return plan;
}

// Double-log factor of the Newton work, clamped below at 1.
inline double newton_work_factor(double dx) {
    const double l = std::log(1.0 / dx);
    return l > 1.0 ? std::max(1.0, std::log(l)) : 1.0;
}

// sum_l M_l dx_l^{-r} (times the double-log factor for explicit-implicit)
inline double work_model(const MlmcPlan& plan, SchemeKind scheme) {
    double w = 0.0;
    for (int l = 0; l <= plan.levels(); ++l) {
        const double dx = plan.hierarchy.grid(l).dx();
        double term = static_cast<double>(plan.samples[static_cast<std::size_t>(l)]) * std::pow(dx, -plan.exponents.r);
        if (scheme == SchemeKind::ExplicitImplicit) term *= newton_work_factor(dx);
        w += term;
    }
    return w;
}

struct MlmcOptions {
    int workers = 0;
    // Use seed level 0 for every level, so index k draws the same parameters on all levels.
    bool shared_level_seeds = false;
    ModelFactory factory = make_sample;
};

// Coupled level-difference estimator. Differences u_l - prolong(u_{l-1}) are
// formed on grid l; level means and variances are prolonged to grid L and
// summed in level order.
inline EstimatorResult mlmc_estimate(const MlmcPlan& plan, const ParamDistribution& dist, double lambda,
                                     const SolverConfig& solver_config, std::uint64_t master_seed,
                                     const MlmcOptions& options = {}) {
    plan.validate();
    dist.validate();
    solver_config.validate();
    if (plan.exponents.scheme != solver_config.scheme || plan.exponents.lambda != lambda)
        throw StructuralError("plan was built for a different scheme or fractional order");
    const int L = plan.levels();
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<FractionalKernel> kernels;
    kernels.reserve(static_cast<std::size_t>(L) + 1);
    for (int l = 0; l <= L; ++l) kernels.emplace_back(plan.hierarchy.grid(l), lambda);

    const Grid1D& finest = plan.hierarchy.finest();
    const double T = solver_config.final_time;
    std::vector<double> mean(finest.cells(), 0.0), var(finest.cells(), 0.0);
    EstimatorResult out;

    for (int l = 0; l <= L; ++l) {
        const std::size_t m = plan.samples[static_cast<std::size_t>(l)];
        const Grid1D& grid = plan.hierarchy.grid(l);
        const int seed_level = options.shared_level_seeds ? 0 : l;
        std::vector<std::vector<double>> diffs(m);
        std::vector<std::size_t> steps(m, 0);
        parallel_for(m, options.workers, [&](std::size_t k) {
            try {
                const auto params = draw_params(dist, {master_seed, seed_level, k});
                const ModelSample sample = options.factory(params);
                auto fine = solve_detailed(sample, kernels[static_cast<std::size_t>(l)], solver_config);
                steps[k] = fine.stats.steps;
                if (l == 0) {
                    diffs[k] = std::move(fine.field.values);
                    return;
                }
                auto coarse = solve_detailed(sample, kernels[static_cast<std::size_t>(l - 1)], solver_config);
                steps[k] += coarse.stats.steps;
                const auto up = prolong(coarse.field, grid);
                std::vector<double> d(grid.cells());
                for (std::size_t i = 0; i < d.size(); ++i) d[i] = fine.field.values[i] - up.values[i];
                diffs[k] = std::move(d);
            } catch (const std::exception& e) {
                throw SampleError(l, k, e.what());
            }
        });
        auto [lm, lv] = sample_moments(diffs);
        const auto lm_fine = prolong_to(SolutionField(grid, std::move(lm), T), finest);
        const auto lv_fine = prolong_to(SolutionField(grid, std::move(lv), T), finest);
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += lm_fine.values[i];
            var[i] += lv_fine.values[i];
        }
        out.samples_per_level.push_back(m);
        out.solver_steps.push_back(std::accumulate(steps.begin(), steps.end(), std::size_t{0}));
    }
    out.mean = SolutionField(finest, std::move(mean), T);
    out.variance = SolutionField(finest, std::move(var), T);
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace fdmlmc

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fdmlmc/errors.hpp"
#include "fdmlmc/fractional_operator.hpp"
#include "fdmlmc/mesh.hpp"
#include "fdmlmc/model.hpp"
#include "fdmlmc/parallel.hpp"
#include "fdmlmc/solver.hpp"

namespace fdmlmc {

struct ReferenceConfig {
    int q_c = 9;
    int q_mu = 9;
    int q_alpha = 9;
    Grid1D grid{5.0, 3321};
    SolverConfig solver;
    ParamDistribution dist;
    int workers = 0;
    ModelFactory factory = make_sample;
};

struct RmsReport {
    std::vector<double> per_repetition;
    double rms = 0.0;
    std::size_t repetitions = 0;
};

struct TrapezoidRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Trapezoid nodes and weights on [lo, hi], normalized to sum 1. A degenerate
// range collapses to one node.
inline TrapezoidRule trapezoid_rule(const Range& r, int q, const char* name) {
    if (q < 1) throw DomainError(std::string("quadrature points for ") + name + " must be positive");
    if (r.degenerate()) return {{r.lo}, {1.0}};
    if (q == 1)
        throw DomainError(std::string("a single quadrature point for ") + name + " needs a degenerate range");
    TrapezoidRule t;
    const double h = 1.0 / (q - 1);
    for (int j = 0; j < q; ++j) {
        t.nodes.push_back(j == q - 1 ? r.hi : r.lo + (r.hi - r.lo) * j * h);
        t.weights.push_back((j == 0 || j == q - 1) ? 0.5 * h : h);
    }
    return t;
}

// Parameter-space mean by tensor trapezoidal quadrature over the uniform box.
// Solves run in parallel; the weighted sum runs in lexicographic (c, mu, alpha) order.
inline SolutionField reference_solution(const ReferenceConfig& cfg, double lambda) {
    cfg.dist.validate();
    cfg.solver.validate();
    const auto rc = trapezoid_rule(cfg.dist.c, cfg.q_c, "c");
    const auto rm = trapezoid_rule(cfg.dist.mu, cfg.q_mu, "mu");
    const auto ra = trapezoid_rule(cfg.dist.alpha, cfg.q_alpha, "alpha");
    const std::size_t nc = rc.nodes.size(), nm = rm.nodes.size(), na = ra.nodes.size();
    const std::size_t total = nc * nm * na;

    const FractionalKernel kernel(cfg.grid, lambda);
    std::vector<std::vector<double>> fields(total);
    parallel_for(total, cfg.workers, [&](std::size_t s) {
        const std::size_t ia = s % na, im = (s / na) % nm, ic = s / (na * nm);
        const BlParams p{rc.nodes[ic], rm.nodes[im], ra.nodes[ia]};
        fields[s] = solve_detailed(cfg.factory(p), kernel, cfg.solver).field.values;
    });

    std::vector<double> acc(cfg.grid.cells(), 0.0);
    for (std::size_t s = 0; s < total; ++s) {
        const std::size_t ia = s % na, im = (s / na) % nm, ic = s / (na * nm);
        const double w = rc.weights[ic] * rm.weights[im] * ra.weights[ia];
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * fields[s][i];
    }
    return SolutionField(cfg.grid, std::move(acc), cfg.solver.final_time);
}

// Relative discrete L2 errors against the reference; coarser estimates are
// prolonged to the reference grid first.
inline RmsReport rms_error(const std::vector<SolutionField>& estimates, const SolutionField& reference) {
    if (estimates.empty()) throw DomainError("rms_error needs at least one estimate");
    const double dx = reference.grid.dx();
    const double ref_norm = l2_norm(reference.values, dx);
    if (!(ref_norm > 0.0)) throw DomainError("reference field has zero norm");
    RmsReport rep;
    double sq = 0.0;
    for (const auto& est : estimates) {
        const SolutionField z = prolong_to(est, reference.grid);
        std::vector<double> d(z.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = reference.values[i] - z.values[i];
        const double e = l2_norm(d, dx) / ref_norm;
        rep.per_repetition.push_back(e);
        sq += e * e;
    }
    rep.repetitions = estimates.size();
    rep.rms = std::sqrt(sq / static_cast<double>(rep.repetitions));
    return rep;
}

// r such that ys ~ xs^{-r}: negated least-squares slope in log-log.
inline double fit_rate(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw DomainError("fit_rate needs equally long inputs");
    if (xs.size() < 2) throw DomainError("fit_rate needs at least two points");
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw DomainError("fit_rate needs positive inputs");
        mx += std::log(xs[i]);
        my += std::log(ys[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = std::log(xs[i]) - mx;
        sxy += dx * (std::log(ys[i]) - my);
        sxx += dx * dx;
    }
    if (!(sxx > 0.0)) throw DomainError("fit_rate needs at least two distinct abscissae");
    return -sxy / sxx;
}

} // namespace fdmlmc

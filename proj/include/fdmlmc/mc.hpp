#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fdmlmc/errors.hpp"
#include "fdmlmc/fractional_operator.hpp"
#include "fdmlmc/mesh.hpp"
#include "fdmlmc/model.hpp"
#include "fdmlmc/parallel.hpp"
#include "fdmlmc/solver.hpp"

namespace fdmlmc {

struct McConfig {
    std::size_t samples = 0;     // 0: use the sample-count rule
    double constant = 2.0;       // C of the rule
    std::uint64_t master_seed = 0;
    int seed_level = 0;          // level coordinate used for every draw
    int workers = 0;             // 0: all hardware threads
};

struct EstimatorResult {
    SolutionField mean;
    SolutionField variance;
    std::vector<std::size_t> samples_per_level;
    double wall_time_s = 0.0;
    std::vector<std::size_t> solver_steps; // per level, summed over samples and solves
};

// C dx^{-1/2} for lambda <= 2/3, C dx^{-(2-lambda)/(2+lambda)} otherwise; rounded up.
inline std::size_t mc_sample_count(double dx, double lambda, double constant) {
    if (!(dx > 0.0)) throw DomainError("mesh width must be positive");
    if (!(lambda > 0.0 && lambda < 2.0) || lambda == 1.0)
        throw DomainError("sample-count rule needs lambda in (0,1) or (1,2)");
    if (!(constant > 0.0)) throw DomainError("sample-count constant must be positive");
    const double expo = lambda <= 2.0 / 3.0 ? 0.5 : (2.0 - lambda) / (2.0 + lambda);
    return static_cast<std::size_t>(std::max(1.0, std::ceil(constant * std::pow(dx, -expo))));
}

namespace detail {
// Elementwise pairwise sum of rows[lo, hi), each row shifted by -shift.
inline std::vector<double> pairwise_sum(const std::vector<std::vector<double>>& rows, std::size_t lo, std::size_t hi,
                                        const std::vector<double>& shift, bool square) {
    if (hi - lo == 1) {
        std::vector<double> out(shift.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = rows[lo][i] - shift[i];
            out[i] = square ? d * d : d;
        }
        return out;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    auto left = pairwise_sum(rows, lo, mid, shift, square);
    const auto right = pairwise_sum(rows, mid, hi, shift, square);
    for (std::size_t i = 0; i < left.size(); ++i) left[i] += right[i];
    return left;
}
} // namespace detail

// Sample mean and 1/M variance with a fixed-order pairwise reduction.
// The mean is accumulated relative to the first sample.
inline std::pair<std::vector<double>, std::vector<double>> sample_moments(
    const std::vector<std::vector<double>>& samples) {
    if (samples.empty()) throw DomainError("no samples to reduce");
    const auto m = static_cast<double>(samples.size());
    const std::vector<double>& first = samples.front();
    auto mean = detail::pairwise_sum(samples, 0, samples.size(), first, false);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = first[i] + mean[i] / m;
    auto var = detail::pairwise_sum(samples, 0, samples.size(), mean, true);
    for (double& v : var) v /= m;
    return {std::move(mean), std::move(var)};
}

inline EstimatorResult mc_estimate(const Grid1D& grid, double lambda, const ParamDistribution& dist,
                                   const SolverConfig& solver_config, const McConfig& mc_config,
                                   const ModelFactory& factory = make_sample) {
    dist.validate();
    solver_config.validate();
    const std::size_t m =
        mc_config.samples > 0 ? mc_config.samples : mc_sample_count(grid.dx(), lambda, mc_config.constant);

    const auto t0 = std::chrono::steady_clock::now();
    const FractionalKernel kernel(grid, lambda);
    std::vector<std::vector<double>> fields(m);
    std::vector<std::size_t> steps(m, 0);
    parallel_for(m, mc_config.workers, [&](std::size_t k) {
        try {
            const auto params = draw_params(dist, {mc_config.master_seed, mc_config.seed_level, k});
            auto r = solve_detailed(factory(params), kernel, solver_config);
            fields[k] = std::move(r.field.values);
            steps[k] = r.stats.steps;
        } catch (const std::exception& e) {
            throw SampleError(mc_config.seed_level, k, e.what());
        }
    });
    auto [mean, var] = sample_moments(fields);
    const double T = solver_config.final_time;

    EstimatorResult out;
    out.mean = SolutionField(grid, std::move(mean), T);
    out.variance = SolutionField(grid, std::move(var), T);
    out.samples_per_level = {m};
    std::size_t total = 0;
    for (auto s : steps) total += s;
    out.solver_steps = {total};
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// Columns x,mean,variance; 17 significant digits.
inline void write_csv(std::ostream& os, const EstimatorResult& r) {
    const auto old = os.precision(17);
    os << "x,mean,variance\n";
    for (std::size_t i = 0; i < r.mean.size(); ++i)
        os << r.mean.grid.center(i) << ',' << r.mean.values[i] << ',' << r.variance.values[i] << '\n';
    os.precision(old);
}

} // namespace fdmlmc

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fdmlmc/errors.hpp"
#include "fdmlmc/fractional_operator.hpp"
#include "fdmlmc/mesh.hpp"
#include "fdmlmc/model.hpp"

namespace fdmlmc {

enum class SchemeKind { Explicit, ExplicitImplicit };

// Viscosity of the local Lax-Friedrichs flux: sup of |f'| over all states
// between the two arguments, or the larger of the two endpoint speeds.
enum class FluxSpeed { Interval, Endpoint };

inline const char* to_string(FluxSpeed s) { return s == FluxSpeed::Interval ? "interval" : "endpoint"; }

inline const char* to_string(SchemeKind s) {
    return s == SchemeKind::Explicit ? "explicit" : "explicit-implicit";
}

struct SolverConfig {
    SchemeKind scheme = SchemeKind::Explicit;
    double cfl = 0.2;
    BoundaryMode boundary = BoundaryMode::ConstantExtension;
    FluxSpeed flux_speed = FluxSpeed::Interval;
    int newton_max_iters = 50;
    double final_time = 1.0;

    void validate() const {
        if (!(cfl > 0.0 && cfl < 1.0)) throw DomainError("cfl must lie in (0, 1)");
        if (!(final_time >= 0.0) || !std::isfinite(final_time))
            throw DomainError("final time must be finite and nonnegative");
        if (newton_max_iters < 1) throw DomainError("newton_max_iters must be positive");
    }
};

struct StepReport {
    double dt = 0.0;
    int newton_iterations = 0;
    double residual = 0.0;
};

struct SolveStats {
    std::size_t steps = 0;
    long newton_iterations = 0;
    double max_residual = 0.0;
    std::size_t factorizations = 0;
    bool outside_rate_theory = false; // lambda == 1
};

struct SolveResult {
    SolutionField field;
    SolveStats stats;
};

namespace detail {
inline double llf(double ul, double ur, double fl, double fr, double speed) {
    return 0.5 * (fl + fr) - 0.5 * speed * (ur - ul);
}

inline double face_speed(double ul, double ur, const ModelSample& sample, FluxSpeed mode) {
    if (mode == FluxSpeed::Interval && sample.max_speed) return sample.max_speed(ul, ur);
    return std::max(std::abs(sample.flux_derivative(ul)), std::abs(sample.flux_derivative(ur)));
}
} // namespace detail

// Local Lax-Friedrichs flux.
inline double numerical_flux_llf(double u_left, double u_right, const ModelSample& sample,
                                 FluxSpeed mode = FluxSpeed::Interval) {
    return detail::llf(u_left, u_right, sample.flux(u_left), sample.flux(u_right),
                       detail::face_speed(u_left, u_right, sample, mode));
}

inline double cfl_timestep(const Grid1D& grid, double lambda, double cfl) {
    if (!(cfl > 0.0 && cfl < 1.0)) throw DomainError("cfl must lie in (0, 1)");
    return cfl * std::pow(grid.dx(), std::max(1.0, lambda));
}

inline SolutionField project_initial(const ModelSample& sample, const Grid1D& grid) {
    sample.initial.validate();
    std::vector<double> v(grid.cells());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = sample.initial.average(grid.left_face(i), grid.right_face(i));
    return SolutionField(grid, std::move(v), 0.0);
}

// (F_{i+1/2} - F_{i-1/2}) / dx for every cell.
inline std::vector<double> convective_divergence(std::span<const double> u, const ModelSample& sample,
                                                 double dx, BoundaryMode boundary,
                                                 FluxSpeed mode = FluxSpeed::Interval) {
    const std::size_t n = u.size();
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = sample.flux(u[i]);
    auto face = [&](std::size_t l, std::size_t r) {
        return detail::llf(u[l], u[r], f[l], f[r], detail::face_speed(u[l], u[r], sample, mode));
    };
    // faces[i] = F_{i-1/2}
    std::vector<double> faces(n + 1);
    for (std::size_t i = 1; i < n; ++i) faces[i] = face(i - 1, i);
    if (boundary == BoundaryMode::Periodic) {
        faces[0] = face(n - 1, 0);
        faces[n] = faces[0];
    } else {
        faces[0] = face(0, 0);
        faces[n] = face(n - 1, n - 1);
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (faces[i + 1] - faces[i]) / dx;
    return out;
}

namespace detail {
inline void check_state(const SolutionField& state, const FractionalKernel& kernel) {
    if (!(state.grid == kernel.grid()))
        throw StructuralError("state grid and kernel grid differ");
}

inline double max_stable_dt(const FractionalKernel& kernel) {
    return std::pow(kernel.grid().dx(), std::max(1.0, kernel.lambda()));
}

inline std::vector<double> map_values(std::span<const double> u, const ScalarFn& fn) {
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = fn(u[i]);
    return out;
}

// U - dt * D^- F(U)
inline std::vector<double> convective_update(const SolutionField& state, const ModelSample& sample,
                                             double dt, BoundaryMode boundary, FluxSpeed mode) {
    auto conv = convective_divergence(state.values, sample, state.grid.dx(), boundary, mode);
    for (std::size_t i = 0; i < conv.size(); ++i) conv[i] = state.values[i] - dt * conv[i];
    return conv;
}
} // namespace detail

inline SolutionField step_explicit(const SolutionField& state, const ModelSample& sample,
                                   const FractionalKernel& kernel, double dt, BoundaryMode boundary,
                                   FluxSpeed mode = FluxSpeed::Interval) {
    detail::check_state(state, kernel);
    if (!(dt > 0.0) || dt > detail::max_stable_dt(kernel) * (1.0 + 1e-12))
        throw PreconditionError("time step " + std::to_string(dt) + " violates the CFL bound " +
                                std::to_string(detail::max_stable_dt(kernel)));
    auto out = detail::convective_update(state, sample, dt, boundary, mode);
    const auto a = detail::map_values(state.values, sample.diffusion);
    const auto nl = apply_nonlocal(kernel, a, boundary);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += dt * nl[i];
    return SolutionField(state.grid, std::move(out), state.time + dt);
}

// Dense Newton machinery for the implicit nonlocal term. Holds the LU of the
// Jacobian restricted to cells with A'(V) != 0; reused while A'(V) and dt repeat.
class NewtonSolver {
public:
    NewtonSolver(const FractionalKernel& kernel, BoundaryMode boundary, FluxSpeed mode = FluxSpeed::Interval)
        : kernel_(kernel), boundary_(boundary), mode_(mode) {
        const std::size_t n = kernel.cells();
        row_sum_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += i == k ? 0.0 : kernel.coupling(i, k, boundary);
            if (boundary == BoundaryMode::ConstantExtension) s += kernel.left_tail(i) + kernel.right_tail(i);
            row_sum_[i] = s;
        }
    }

    // Matrix of the linear map a -> apply_nonlocal(a).
    double operator_entry(std::size_t i, std::size_t k) const {
        const std::size_t n = kernel_.cells();
        double v = i == k ? -row_sum_[i] : kernel_.coupling(i, k, boundary_);
        if (boundary_ == BoundaryMode::ConstantExtension) {
            if (k == 0) v += kernel_.left_tail(i);
            if (k == n - 1) v += kernel_.right_tail(i);
        }
        return v;
    }

    std::size_t factorizations() const noexcept { return factorizations_; }

    std::pair<SolutionField, StepReport> step(const SolutionField& state, const ModelSample& sample, double dt,
                                              int max_iters) {
        detail::check_state(state, kernel_);
        if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("time step must be positive");
        if (max_iters < 1) throw PreconditionError("max_iters must be positive");
        const std::size_t n = kernel_.cells();
        const double tol = dt * kernel_.grid().dx();

        const auto b = detail::convective_update(state, sample, dt, boundary_, mode_);
        std::vector<double> v = state.values;
        std::vector<double> r(n), work(n);
        double res = residual(v, b, sample, dt, r);

        StepReport report{dt, 0, res};
        std::vector<double> next(n), trial(n);
        for (int it = 1; it <= max_iters; ++it) {
            newton_iterate(v, b, sample, dt, next);
            double res_next = residual(next, b, sample, dt, r);
            if (!(res_next <= res)) {
                double theta = 1.0;
                for (int h = 0; h < 30; ++h) {
                    theta *= 0.5;
                    for (std::size_t i = 0; i < n; ++i) trial[i] = v[i] + theta * (next[i] - v[i]);
                    const double res_trial = residual(trial, b, sample, dt, r);
                    if (res_trial < res || h == 29) {
                        next.swap(trial);
                        res_next = res_trial;
                        break;
                    }
                }
            }
            v.swap(next);
            res = res_next;
            report.newton_iterations = it;
            report.residual = res;
            if (!std::isfinite(res)) throw NumericalError("Newton iterate became non-finite");
            if (res <= tol) return {SolutionField(state.grid, std::move(v), state.time + dt), report};
        }
        throw ConvergenceError("Newton did not reach residual " + std::to_string(tol) + " in " +
                                   std::to_string(max_iters) + " iterations (last " + std::to_string(res) + ")",
                               res, max_iters);
    }

    // max_i |V_i - b_i - dt * N(A(V))_i|
    double residual(std::span<const double> v, std::span<const double> b, const ModelSample& sample, double dt,
                    std::vector<double>& scratch) const {
        const auto a = detail::map_values(v, sample.diffusion);
        apply_nonlocal_into(kernel_, a, boundary_, scratch);
        double m = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double ri = v[i] - b[i] - dt * scratch[i];
            if (!(std::abs(ri) <= m)) m = std::isnan(ri) ? std::numeric_limits<double>::infinity() : std::abs(ri);
        }
        return m;
    }

private:
    // Solve (I - dt N diag(d)) V_new = b + dt N (A(V) - d V) with d = A'(V).
    void newton_iterate(std::span<const double> v, std::span<const double> b, const ModelSample& sample, double dt,
                        std::vector<double>& out) {
        const std::size_t n = v.size();
        std::vector<double> d = detail::map_values(v, sample.diffusion_derivative);
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = sample.diffusion(v[i]) - d[i] * v[i];
        std::vector<double> rhs(n);
        apply_nonlocal_into(kernel_, z, boundary_, rhs);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = b[i] + dt * rhs[i];

        if (!(valid_ && dt == cached_dt_ && d == cached_d_)) factorize(d, dt);
        if (active_.empty()) {
            out.assign(rhs.begin(), rhs.end());
            return;
        }

        const std::size_t m = active_.size();
        Eigen::VectorXd rs(static_cast<Eigen::Index>(m));
        for (std::size_t p = 0; p < m; ++p) rs(static_cast<Eigen::Index>(p)) = rhs[active_[p]];
        const Eigen::VectorXd vs = lu_.solve(rs);
        if (!vs.allFinite()) throw NumericalError("Newton linear solve produced non-finite values");

        // inactive rows: V_i = rhs_i + dt * sum_{k active} N_ik d_k V_k
        out.assign(rhs.begin(), rhs.end());
        std::vector<double> is_active(n, 0.0);
        for (std::size_t p = 0; p < m; ++p) is_active[active_[p]] = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_active[i] != 0.0) continue;
            double s = 0.0;
            for (std::size_t p = 0; p < m; ++p) {
                const std::size_t k = active_[p];
                s += operator_entry(i, k) * d[k] * vs(static_cast<Eigen::Index>(p));
            }
            out[i] = rhs[i] + dt * s;
        }
        for (std::size_t p = 0; p < m; ++p) out[active_[p]] = vs(static_cast<Eigen::Index>(p));
    }

    void factorize(const std::vector<double>& d, double dt) {
        active_.clear();
        for (std::size_t k = 0; k < d.size(); ++k)
            if (d[k] != 0.0) active_.push_back(k);
        const auto m = static_cast<Eigen::Index>(active_.size());
        if (m > 0) {
            Eigen::MatrixXd jac(m, m);
            for (Eigen::Index q = 0; q < m; ++q) {
                const std::size_t k = active_[static_cast<std::size_t>(q)];
                for (Eigen::Index p = 0; p < m; ++p)
                    jac(p, q) = (p == q ? 1.0 : 0.0) - dt * operator_entry(active_[static_cast<std::size_t>(p)], k) * d[k];
            }
            lu_.compute(jac);
            const auto piv = lu_.matrixLU().diagonal().cwiseAbs();
            if (!piv.allFinite() || piv.minCoeff() == 0.0) throw NumericalError("singular Newton Jacobian");
            ++factorizations_;
        }
        cached_d_ = d;
        cached_dt_ = dt;
        valid_ = true;
    }

    const FractionalKernel& kernel_;
    BoundaryMode boundary_;
    FluxSpeed mode_;
    std::vector<double> row_sum_;
    std::vector<std::size_t> active_;
    std::vector<double> cached_d_;
    double cached_dt_ = -1.0;
    bool valid_ = false;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    std::size_t factorizations_ = 0;
};

inline std::pair<SolutionField, StepReport> step_explicit_implicit(const SolutionField& state,
                                                                   const ModelSample& sample,
                                                                   const FractionalKernel& kernel, double dt,
                                                                   BoundaryMode boundary, int max_iters,
                                                                   FluxSpeed mode = FluxSpeed::Interval) {
    NewtonSolver newton(kernel, boundary, mode);
    return newton.step(state, sample, dt, max_iters);
}

using StepObserver = std::function<void(const SolutionField& after, const StepReport&)>;

inline SolveResult solve_detailed(const ModelSample& sample, const FractionalKernel& kernel,
                                  const SolverConfig& config, const StepObserver& observer = {}) {
    config.validate();
    const Grid1D& grid = kernel.grid();
    SolveResult result{project_initial(sample, grid), {}};
    result.stats.outside_rate_theory = kernel.lambda() == 1.0;
    const double T = config.final_time;
    if (T == 0.0) return result;

    const double dt0 = cfl_timestep(grid, kernel.lambda(), config.cfl);
    const auto nsteps = static_cast<std::size_t>(std::max(1.0, std::ceil(T / dt0 - 1e-9)));
    std::optional<NewtonSolver> newton;
    if (config.scheme == SchemeKind::ExplicitImplicit) newton.emplace(kernel, config.boundary, config.flux_speed);

    SolutionField& u = result.field;
    for (std::size_t s = 0; s < nsteps; ++s) {
        const double dt = s + 1 < nsteps ? dt0 : T - static_cast<double>(nsteps - 1) * dt0;
        StepReport rep{dt, 0, 0.0};
        if (config.scheme == SchemeKind::Explicit) {
            u = step_explicit(u, sample, kernel, dt, config.boundary, config.flux_speed);
        } else {
            auto [next, r] = newton->step(u, sample, dt, config.newton_max_iters);
            u = std::move(next);
            rep = r;
            result.stats.newton_iterations += r.newton_iterations;
            result.stats.max_residual = std::max(result.stats.max_residual, r.residual);
        }
        if (observer) observer(u, rep);
    }
    u.time = T;
    result.stats.steps = nsteps;
    if (newton) result.stats.factorizations = newton->factorizations();
    return result;
}

inline SolveResult solve_detailed(const ModelSample& sample, const Grid1D& grid, double lambda,
                                  const SolverConfig& config, const StepObserver& observer = {}) {
    const FractionalKernel kernel(grid, lambda);
    return solve_detailed(sample, kernel, config, observer);
}

inline SolutionField solve(const ModelSample& sample, const Grid1D& grid, double lambda, const SolverConfig& config) {
    return solve_detailed(sample, grid, lambda, config).field;
}

} // namespace fdmlmc

#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fdmlmc/analysis.hpp"
#include "fdmlmc/config.hpp"
#include "fdmlmc/mc.hpp"
#include "fdmlmc/mesh.hpp"
#include "fdmlmc/mlmc.hpp"
#include "fdmlmc/model.hpp"
#include "fdmlmc/solver.hpp"

namespace fdmlmc {

// One row of the level table.
struct TableRow {
    int L = 0;
    std::vector<std::size_t> samples;
    std::size_t cells = 0;
    double rms = std::numeric_limits<double>::quiet_NaN();
    double runtime_s = std::numeric_limits<double>::quiet_NaN();
    double work_model = 0.0;
};

struct TableFit {
    double r1 = std::numeric_limits<double>::quiet_NaN();
    double r2_runtime = std::numeric_limits<double>::quiet_NaN();
    double r2_runtime_raw = std::numeric_limits<double>::quiet_NaN();
    double r2_work_model = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::string join(const std::vector<std::size_t>& v, char sep = ';') {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(v[i]);
    }
    return s;
}

inline std::string format17(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline Grid1D level_grid(const ExperimentConfig& c) {
    std::size_t n = c.N0;
    for (int l = 0; l < c.L; ++l) n *= 3;
    return Grid1D(c.K, n);
}

inline void write_file(const ExperimentConfig& c, const std::string& name, const std::string& body,
                       std::ostream& log) {
    const std::filesystem::path dir(c.output);
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    f << body;
    if (!f) throw Error("failed writing " + path.string());
    log << "wrote " << path.string() << '\n';
}

inline std::string field_csv(const SolutionField& f, const std::string& name) {
    std::ostringstream os;
    write_csv(os, f, name);
    return os.str();
}

inline std::string estimator_csv(const EstimatorResult& r) {
    std::ostringstream os;
    write_csv(os, r);
    return os.str();
}

// x / ln x, defined for x > 1
inline std::vector<double> over_log(const std::vector<double>& xs) {
    std::vector<double> out;
    for (double x : xs) {
        if (!(x > 1.0)) return {};
        out.push_back(x / std::log(x));
    }
    return out;
}

} // namespace detail

// r1 against N_L; r2 against runtime and against the work model. For
// explicit-implicit the r2 abscissa is w / ln w (left NaN when w <= 1);
// r2_runtime_raw always fits against plain runtime.
inline TableFit fit_table(const std::vector<TableRow>& rows, SchemeKind scheme) {
    TableFit fit;
    if (rows.size() < 2) return fit;
    std::vector<double> n, rms, rt, wm;
    for (const auto& r : rows) {
        n.push_back(static_cast<double>(r.cells));
        rms.push_back(r.rms);
        rt.push_back(r.runtime_s);
        wm.push_back(r.work_model);
    }
    for (double v : rms)
        if (!(v > 0.0)) return fit;
    fit.r1 = fit_rate(n, rms);
    const auto rate = [&](const std::vector<double>& xs) {
        if (xs.size() != rows.size()) return std::numeric_limits<double>::quiet_NaN();
        for (double x : xs)
            if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return fit_rate(xs, rms);
    };
    fit.r2_runtime_raw = rate(rt);
    if (scheme == SchemeKind::ExplicitImplicit) {
        rt = detail::over_log(rt);
        wm = detail::over_log(wm);
    }
    fit.r2_runtime = rate(rt);
    fit.r2_work_model = rate(wm);
    return fit;
}

inline std::string table_csv(const std::vector<TableRow>& rows, const TableFit& fit) {
    std::ostringstream os;
    os.precision(17);
    os << "L,M,N_L,RMS,runtime_s,work_model\n";
    for (const auto& r : rows)
        os << r.L << ',' << detail::join(r.samples) << ',' << r.cells << ',' << r.rms << ',' << r.runtime_s << ','
           << r.work_model << '\n';
    os << "\nr1,r2_runtime,r2_runtime_raw,r2_work_model\n"
       << fit.r1 << ',' << fit.r2_runtime << ',' << fit.r2_runtime_raw << ',' << fit.r2_work_model << '\n';
    return os.str();
}

// Builds the level table for L = 1..cfg.L. Without plan_only, each row runs
// Q independent MLMC estimates (master seeds seed, seed+1, ...) and scores
// them against the quadrature reference.
inline std::vector<TableRow> level_table(const ExperimentConfig& cfg, std::ostream& log) {
    const auto solver = cfg.solver_config();
    SolutionField reference;
    if (!cfg.plan_only) {
        ReferenceConfig rc;
        rc.q_c = cfg.ref_q_c;
        rc.q_mu = cfg.ref_q_mu;
        rc.q_alpha = cfg.ref_q_alpha;
        rc.grid = Grid1D(cfg.K, cfg.ref_cells);
        rc.solver = solver;
        rc.dist = cfg.dist;
        rc.workers = cfg.workers;
        log << "reference: " << cfg.ref_cells << " cells, " << rc.q_c << "x" << rc.q_mu << "x" << rc.q_alpha
            << " quadrature points\n";
        reference = reference_solution(rc, cfg.lambda);
    }
    std::vector<TableRow> rows;
    for (int L = 1; L <= cfg.L; ++L) {
        const MeshHierarchy h(cfg.K, cfg.N0, L);
        const auto plan = make_plan(h, cfg.lambda, cfg.scheme, cfg.epsilon);
        TableRow row;
        row.L = L;
        row.samples = plan.samples;
        row.cells = h.finest().cells();
        row.work_model = work_model(plan, cfg.scheme);
        if (!cfg.plan_only) {
            std::vector<SolutionField> means;
            double wall = 0.0;
            for (int q = 0; q < cfg.Q; ++q) {
                auto est = mlmc_estimate(plan, cfg.dist, cfg.lambda, solver, cfg.seed + static_cast<std::uint64_t>(q),
                                         {cfg.workers, false, make_sample});
                wall += est.wall_time_s;
                means.push_back(std::move(est.mean));
            }
            row.rms = rms_error(means, reference).rms;
            row.runtime_s = wall / cfg.Q;
        }
        log << "L=" << L << " M=" << detail::join(row.samples) << " RMS=" << row.rms << " runtime=" << row.runtime_s
            << "s\n";
        rows.push_back(std::move(row));
    }
    return rows;
}

// Executes one configured experiment and writes its CSV files. Returns 0.
inline int run(const ExperimentConfig& cfg, std::ostream& log) {
    validate(cfg);
    const auto solver = cfg.solver_config();
    const std::string header = emit_header(cfg);

    switch (cfg.command) {
    case Command::DetRun: {
        const Grid1D grid = detail::level_grid(cfg);
        const auto t0 = std::chrono::steady_clock::now();
        const auto res = solve_detailed(make_sample(cfg.params), grid, cfg.lambda, solver);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::string meta = metadata_line("cells", std::to_string(grid.cells())) +
                           metadata_line("steps", std::to_string(res.stats.steps)) +
                           metadata_line("newton_iterations", std::to_string(res.stats.newton_iterations));
        if (res.stats.outside_rate_theory) meta += metadata_line("outside_rate_theory", "lambda = 1");
        detail::write_file(cfg, "solution.csv", header + meta + detail::field_csv(res.field, "value"), log);
        log << "det-run: " << grid.cells() << " cells, " << res.stats.steps << " steps, " << wall << " s\n";
        return 0;
    }
    case Command::McRun: {
        const Grid1D grid = detail::level_grid(cfg);
        McConfig mc{cfg.mc_samples, cfg.mc_constant, cfg.seed, cfg.L, cfg.workers};
        const auto est = mc_estimate(grid, cfg.lambda, cfg.dist, solver, mc);
        const std::string meta = metadata_line("cells", std::to_string(grid.cells())) +
                                 metadata_line("samples", detail::join(est.samples_per_level)) +
                                 metadata_line("solver_steps", detail::join(est.solver_steps));
        detail::write_file(cfg, "mean.csv", header + meta + detail::estimator_csv(est), log);
        detail::write_file(cfg, "variance.csv", header + meta + detail::field_csv(est.variance, "variance"), log);
        log << "mc-run: M=" << est.samples_per_level[0] << ", " << est.wall_time_s << " s\n";
        return 0;
    }
    case Command::MlmcRun: {
        const MeshHierarchy h(cfg.K, cfg.N0, cfg.L);
        const auto plan = make_plan(h, cfg.lambda, cfg.scheme, cfg.epsilon);
        const auto est = mlmc_estimate(plan, cfg.dist, cfg.lambda, solver, cfg.seed,
                                       {cfg.workers, false, make_sample});
        const std::string meta = metadata_line("cells", std::to_string(h.finest().cells())) +
                                 metadata_line("samples_per_level", detail::join(est.samples_per_level)) +
                                 metadata_line("epsilon", detail::format17(plan.epsilon)) +
                                 metadata_line("work_model", detail::format17(work_model(plan, cfg.scheme))) +
                                 metadata_line("solver_steps", detail::join(est.solver_steps));
        detail::write_file(cfg, "mean.csv", header + meta + detail::estimator_csv(est), log);
        detail::write_file(cfg, "variance.csv", header + meta + detail::field_csv(est.variance, "variance"), log);
        log << "mlmc-run: M=" << detail::join(est.samples_per_level) << ", " << est.wall_time_s << " s\n";
        return 0;
    }
    case Command::ConvergenceStudy: {
        const auto sample = make_sample(cfg.params);
        std::vector<SolutionField> sols;
        for (int l = 0; l <= cfg.L; ++l) {
            const MeshHierarchy h(cfg.K, cfg.N0, l);
            sols.push_back(solve(sample, h.finest(), cfg.lambda, solver));
        }
        std::vector<double> ns, errs;
        std::ostringstream os;
        os.precision(17);
        os << "level,N,dx,l1_error\n";
        for (int l = 0; l < cfg.L; ++l) {
            const auto& coarse = sols[static_cast<std::size_t>(l)];
            const auto fine = restrict(sols[static_cast<std::size_t>(l) + 1], coarse.grid);
            std::vector<double> d(coarse.size());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = coarse.values[i] - fine.values[i];
            const double e = l1_norm(d, coarse.grid.dx());
            ns.push_back(static_cast<double>(coarse.grid.cells()));
            errs.push_back(e);
            os << l << ',' << coarse.grid.cells() << ',' << coarse.grid.dx() << ',' << e << '\n';
        }
        const double order = fit_rate(ns, errs);
        os << "\norder\n" << order << '\n';
        detail::write_file(cfg, "table.csv", header + os.str(), log);
        log << "convergence-study: order " << order << '\n';
        return 0;
    }
    case Command::ReferenceGen: {
        ReferenceConfig rc;
        rc.q_c = cfg.ref_q_c;
        rc.q_mu = cfg.ref_q_mu;
        rc.q_alpha = cfg.ref_q_alpha;
        rc.grid = Grid1D(cfg.K, cfg.ref_cells);
        rc.solver = solver;
        rc.dist = cfg.dist;
        rc.workers = cfg.workers;
        const auto ref = reference_solution(rc, cfg.lambda);
        detail::write_file(cfg, "mean.csv",
                           header + metadata_line("cells", std::to_string(cfg.ref_cells)) +
                               detail::field_csv(ref, "mean"),
                           log);
        return 0;
    }
    case Command::TableRepro: {
        const auto rows = level_table(cfg, log);
        const auto fit = fit_table(rows, cfg.scheme);
        detail::write_file(cfg, "table.csv", header + table_csv(rows, fit), log);
        log << "r1=" << fit.r1 << " r2_runtime=" << fit.r2_runtime << " r2_runtime_raw=" << fit.r2_runtime_raw
            << " r2_work_model=" << fit.r2_work_model << '\n';
        return 0;
    }
    }
    return 1;
}

} // namespace fdmlmc

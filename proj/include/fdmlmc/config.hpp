#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "fdmlmc/errors.hpp"
#include "fdmlmc/fractional_operator.hpp"
#include "fdmlmc/model.hpp"
#include "fdmlmc/solver.hpp"

namespace fdmlmc {

enum class Command { DetRun, McRun, MlmcRun, ConvergenceStudy, ReferenceGen, TableRepro };

struct ExperimentConfig {
    Command command = Command::DetRun;
    double lambda = 0.5;
    SchemeKind scheme = SchemeKind::Explicit;
    BoundaryMode boundary = BoundaryMode::ConstantExtension;
    FluxSpeed flux_speed = FluxSpeed::Interval;
    double K = 5.0;
    std::size_t N0 = 41;
    int L = 0;
    double T = 1.0;
    double cfl = 0.2;
    std::uint64_t seed = 0;
    int Q = 30;
    ParamDistribution dist;
    BlParams params;           // det-run and convergence-study
    int newton_max_iters = 50;
    double mc_constant = 2.0;
    std::size_t mc_samples = 0; // 0: sample-count rule
    double epsilon = 0.0;       // 0: 2 dx_L^{2 theta}
    std::size_t ref_cells = 3321;
    int ref_q_c = 9;
    int ref_q_mu = 9;
    int ref_q_alpha = 9;
    bool plan_only = false;
    std::string output = ".";
    int workers = 0; // execution setting; not part of the emitted header

    SolverConfig solver_config() const { return {scheme, cfl, boundary, flux_speed, newton_max_iters, T}; }

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline const char* to_string(Command c) {
    switch (c) {
    case Command::DetRun: return "det-run";
    case Command::McRun: return "mc-run";
    case Command::MlmcRun: return "mlmc-run";
    case Command::ConvergenceStudy: return "convergence-study";
    case Command::ReferenceGen: return "reference-gen";
    case Command::TableRepro: return "table-repro";
    }
    return "?";
}

inline const char* to_string(BoundaryMode b) {
    return b == BoundaryMode::Periodic ? "periodic" : "constant";
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct Bad {
    std::string what;
};

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw Bad{"expected a finite number, got '" + std::string(s) + "'"};
    return v;
}

template <class Int>
Int parse_integer(std::string_view s) {
    Int v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Bad{"expected an integer, got '" + std::string(s) + "'"};
    return v;
}

inline bool parse_bool(std::string_view s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw Bad{"expected true or false, got '" + std::string(s) + "'"};
}

inline Command parse_command(std::string_view s) {
    for (auto c : {Command::DetRun, Command::McRun, Command::MlmcRun, Command::ConvergenceStudy,
                   Command::ReferenceGen, Command::TableRepro})
        if (s == to_string(c)) return c;
    throw Bad{"unknown command '" + std::string(s) + "'"};
}

inline SchemeKind parse_scheme(std::string_view s) {
    if (s == "explicit") return SchemeKind::Explicit;
    if (s == "explicit-implicit") return SchemeKind::ExplicitImplicit;
    throw Bad{"scheme must be explicit or explicit-implicit, got '" + std::string(s) + "'"};
}

inline BoundaryMode parse_boundary(std::string_view s) {
    if (s == "constant") return BoundaryMode::ConstantExtension;
    if (s == "periodic") return BoundaryMode::Periodic;
    throw Bad{"boundary must be constant or periodic, got '" + std::string(s) + "'"};
}

inline FluxSpeed parse_flux_speed(std::string_view s) {
    if (s == "interval") return FluxSpeed::Interval;
    if (s == "endpoint") return FluxSpeed::Endpoint;
    throw Bad{"flux_speed must be interval or endpoint, got '" + std::string(s) + "'"};
}

struct KeySpec {
    const char* name;
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define FDMLMC_REAL(key, member)                                                                  \
    KeySpec{key, [](ExperimentConfig& c, std::string_view v) { c.member = parse_double(v); },     \
            [](const ExperimentConfig& c) { return format_double(c.member); }}
#define FDMLMC_INT(key, member, type)                                                             \
    KeySpec{key, [](ExperimentConfig& c, std::string_view v) { c.member = parse_integer<type>(v); }, \
            [](const ExperimentConfig& c) { return std::to_string(c.member); }}

inline const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = {
        {"command", [](ExperimentConfig& c, std::string_view v) { c.command = parse_command(v); },
         [](const ExperimentConfig& c) { return std::string(to_string(c.command)); }},
        FDMLMC_REAL("lambda", lambda),
        {"scheme", [](ExperimentConfig& c, std::string_view v) { c.scheme = parse_scheme(v); },
         [](const ExperimentConfig& c) { return std::string(to_string(c.scheme)); }},
        {"boundary", [](ExperimentConfig& c, std::string_view v) { c.boundary = parse_boundary(v); },
         [](const ExperimentConfig& c) { return std::string(to_string(c.boundary)); }},
        {"flux_speed", [](ExperimentConfig& c, std::string_view v) { c.flux_speed = parse_flux_speed(v); },
         [](const ExperimentConfig& c) { return std::string(to_string(c.flux_speed)); }},
        FDMLMC_REAL("K", K),
        FDMLMC_INT("N0", N0, std::size_t),
        FDMLMC_INT("L", L, int),
        FDMLMC_REAL("T", T),
        FDMLMC_REAL("cfl", cfl),
        FDMLMC_INT("seed", seed, std::uint64_t),
        FDMLMC_INT("Q", Q, int),
        FDMLMC_REAL("c_min", dist.c.lo),
        FDMLMC_REAL("c_max", dist.c.hi),
        FDMLMC_REAL("mu_min", dist.mu.lo),
        FDMLMC_REAL("mu_max", dist.mu.hi),
        FDMLMC_REAL("alpha_min", dist.alpha.lo),
        FDMLMC_REAL("alpha_max", dist.alpha.hi),
        FDMLMC_REAL("c", params.c),
        FDMLMC_REAL("mu", params.mu),
        FDMLMC_REAL("alpha", params.alpha),
        FDMLMC_INT("newton_max_iters", newton_max_iters, int),
        FDMLMC_REAL("mc_constant", mc_constant),
        FDMLMC_INT("mc_samples", mc_samples, std::size_t),
        FDMLMC_REAL("epsilon", epsilon),
        FDMLMC_INT("ref_cells", ref_cells, std::size_t),
        FDMLMC_INT("ref_q_c", ref_q_c, int),
        FDMLMC_INT("ref_q_mu", ref_q_mu, int),
        FDMLMC_INT("ref_q_alpha", ref_q_alpha, int),
        {"plan_only", [](ExperimentConfig& c, std::string_view v) { c.plan_only = parse_bool(v); },
         [](const ExperimentConfig& c) { return std::string(c.plan_only ? "true" : "false"); }},
        {"output", [](ExperimentConfig& c, std::string_view v) { c.output = std::string(v); },
         [](const ExperimentConfig& c) { return c.output; }},
        FDMLMC_INT("workers", workers, int),
    };
    return table;
}

#undef FDMLMC_REAL
#undef FDMLMC_INT

inline const KeySpec* find_key(std::string_view name) {
    for (const auto& k : key_table())
        if (name == k.name) return &k;
    return nullptr;
}

} // namespace detail

// Sets one key from its text form; line is used in error messages only.
inline void set_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value,
                             std::size_t line = 0) {
    const auto* spec = detail::find_key(key);
    if (!spec) throw ConfigError("unknown key '" + std::string(key) + "'", line);
    try {
        spec->set(cfg, value);
    } catch (const detail::Bad& e) {
        throw ConfigError("key '" + std::string(key) + "': " + e.what, line);
    }
}

inline void validate(const ExperimentConfig& c) {
    auto fail = [](const std::string& key, const std::string& why) {
        throw ConfigError("key '" + key + "': " + why);
    };
    if (!(c.lambda > 0.0 && c.lambda < 2.0 - 1e-8)) fail("lambda", "must lie in (0, 2)");
    if (c.lambda == 1.0 && (c.command == Command::MlmcRun || c.command == Command::TableRepro ||
                            (c.command == Command::McRun && c.mc_samples == 0)))
        fail("lambda", "lambda = 1 is the excluded critical case; rates and sample counts are undefined there");
    if (!(c.K > 0.0)) fail("K", "half width must be positive");
    if (c.N0 == 0 || c.N0 % 2 == 0) fail("N0", "cell count must be odd so that a cell is centered at 0");
    if (c.L < 0 || c.L > 10) fail("L", "must lie in 0..10");
    if (!(c.T >= 0.0)) fail("T", "final time must be nonnegative");
    if (!(c.cfl > 0.0 && c.cfl < 1.0)) fail("cfl", "must lie in (0, 1)");
    if (c.Q < 1) fail("Q", "needs at least one repetition");
    if (c.newton_max_iters < 1) fail("newton_max_iters", "must be positive");
    if (!(c.mc_constant > 0.0)) fail("mc_constant", "must be positive");
    if (!(c.epsilon >= 0.0)) fail("epsilon", "must be nonnegative (0 selects the default)");
    if (c.ref_cells == 0 || c.ref_cells % 2 == 0) fail("ref_cells", "cell count must be odd");
    if (c.ref_q_c < 1 || c.ref_q_mu < 1 || c.ref_q_alpha < 1) fail("ref_q_*", "quadrature points must be positive");
    if (c.workers < 0) fail("workers", "must be nonnegative (0 uses all cores)");
    if (c.output.empty()) fail("output", "must not be empty");
    auto range = [&](const Range& r, const char* lo, const char* hi) {
        if (r.lo > r.hi) fail(std::string(lo) + "/" + hi, "lower bound exceeds upper bound");
    };
    range(c.dist.c, "c_min", "c_max");
    range(c.dist.mu, "mu_min", "mu_max");
    range(c.dist.alpha, "alpha_min", "alpha_max");
    if (!(c.dist.mu.lo > 0.0)) fail("mu_min", "viscosity ratio must be positive");
    if (c.dist.alpha.lo < 0.0) fail("alpha_min", "degeneracy threshold must be nonnegative");
    if (!(c.params.mu > 0.0)) fail("mu", "viscosity ratio must be positive");
    if (c.params.alpha < 0.0) fail("alpha", "degeneracy threshold must be nonnegative");
    if (c.command == Command::ConvergenceStudy && c.L < 2)
        fail("L", "convergence-study needs L >= 2 (at least two error levels)");
    if (c.command == Command::TableRepro) {
        if (c.L < 1) fail("L", "table-repro needs L >= 1");
        if (!c.plan_only) {
            std::size_t n = c.N0;
            for (int l = 0; l < c.L; ++l) n *= 3;
            if (c.ref_cells < n || c.ref_cells % n != 0) fail("ref_cells", "must be N0 * 3^m with m >= L");
            for (std::size_t r = c.ref_cells / n; r > 1; r /= 3)
                if (r % 3 != 0) fail("ref_cells", "must be N0 * 3^m with m >= L");
        }
    }
}

// Line-oriented "key = value" text applied on top of base, without validation.
// '#' starts a comment. Unknown and repeated keys are rejected.
inline ExperimentConfig read_config(std::string_view text, ExperimentConfig base = {}) {
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key before '='", line_no);
        if (!seen.insert(std::string(key)).second)
            throw ConfigError("key '" + std::string(key) + "' given twice", line_no);
        set_config_value(base, key, value, line_no);
    }
    return base;
}

// read_config on top of the defaults, then validate.
inline ExperimentConfig parse_config(std::string_view text) {
    auto cfg = read_config(text);
    validate(cfg);
    return cfg;
}

// "# key = value" for every key except workers.
inline std::string emit_header(const ExperimentConfig& c) {
    std::string out;
    for (const auto& k : detail::key_table()) {
        if (std::string_view(k.name) == "workers") continue;
        out += "# ";
        out += k.name;
        out += " = ";
        out += k.get(c);
        out += '\n';
    }
    return out;
}

// "# @ name: value" run metadata line.
inline std::string metadata_line(const std::string& name, const std::string& value) {
    return "# @ " + name + ": " + value + "\n";
}

// Re-reads the configuration block of an emitted file header.
inline ExperimentConfig parse_header(std::string_view text) {
    std::string body;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (line.empty() || line.front() != '#') break;
        const auto rest = detail::trim(line.substr(1));
        if (rest.empty() || rest.front() == '@') continue;
        body += rest;
        body += '\n';
    }
    return parse_config(body);
}

} // namespace fdmlmc

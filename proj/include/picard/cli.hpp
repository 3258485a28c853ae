#pragma once

// JSON run configurations, experiment orchestration and report emission.
// Exit codes: 0 success, 1 configuration error, 2 solver error, 3 bound violation.

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "picard/bench.hpp"
#include "picard/expr.hpp"
#include "picard/picard_complex.hpp"
#include "picard/picard_real.hpp"

namespace picard {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_solver = 2, exit_violation = 3 };

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RunMode { real_grid, real_exact, complex };

inline std::string to_string(RunMode m)
{
    switch (m) {
    case RunMode::real_grid:
        return "real-grid";
    case RunMode::real_exact:
        return "real-exact";
    case RunMode::complex:
        return "complex";
    }
    return "real-exact";
}

inline RunMode run_mode_from_string(const std::string& s)
{
    if (s == "real-grid")
        return RunMode::real_grid;
    if (s == "real-exact")
        return RunMode::real_exact;
    if (s == "complex")
        return RunMode::complex;
    throw config_error("mode: expected real-grid, real-exact or complex, got '" + s + "'");
}

struct ProblemConfig {
    std::optional<std::string> registry;
    cplx t0{0.0, 0.0};
    std::vector<cplx> y0;
    double a = 0.0;
    double b = 0.0;
    std::vector<std::string> rhs;
    /// Complex coefficients listed term by term, one list per component.
    std::vector<std::vector<PolyField<cplx>::Monomial>> rhs_terms;
    std::optional<double> lipschitz;
    std::optional<double> sup_bound;
    std::optional<double> alpha;
    NormKind norm = NormKind::euclidean;
};

struct RunConfig {
    ProblemConfig problem;
    RunMode mode = RunMode::real_exact;
    std::size_t n_max = 10;
    std::ptrdiff_t grid_n = 1024;
    std::size_t k_max = 64;
    double tol = 1e-13;
    std::size_t ref_extra = 8;
    std::optional<std::size_t> n_ref;
    std::optional<std::size_t> samples;
    std::string csv_path;
    std::string json_path;
    double kappa_scale = 1.0;
};

namespace detail {

using nlohmann::json;

inline void only_keys(const json& j, const std::string& block, std::initializer_list<const char*> allowed)
{
    if (!j.is_object())
        throw config_error(block + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key))
            throw config_error(block + "." + key + ": unknown field");
}

inline double number(const json& j, const std::string& field)
{
    if (!j.is_number())
        throw config_error(field + ": expected a number");
    return j.get<double>();
}

inline std::size_t count(const json& j, const std::string& field)
{
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw config_error(field + ": expected a nonnegative integer");
    return j.get<std::size_t>();
}

/// A real number or a [re, im] pair.
inline cplx complex_number(const json& j, const std::string& field)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw config_error(field + ": expected a number or [re, im]");
}

inline ProblemConfig parse_problem(const json& j)
{
    only_keys(j, "problem", {"registry", "t0", "y0", "a", "b", "rhs", "rhs_terms", "L", "M", "alpha", "norm"});
    ProblemConfig p;
    if (j.contains("registry")) {
        if (!j["registry"].is_string())
            throw config_error("problem.registry: expected a string");
        for (const char* k : {"t0", "y0", "a", "b", "rhs", "rhs_terms", "L", "M", "alpha", "norm"})
            if (j.contains(k))
                throw config_error(std::string("problem.") + k + ": not allowed together with registry");
        p.registry = j["registry"].get<std::string>();
        return p;
    }
    for (const char* k : {"y0", "a", "b"})
        if (!j.contains(k))
            throw config_error(std::string("problem.") + k + ": required");
    if (j.contains("t0"))
        p.t0 = complex_number(j["t0"], "problem.t0");
    if (!j["y0"].is_array() || j["y0"].empty())
        throw config_error("problem.y0: expected a nonempty array");
    for (std::size_t i = 0; i < j["y0"].size(); ++i)
        p.y0.push_back(complex_number(j["y0"][i], "problem.y0[" + std::to_string(i) + "]"));
    p.a = number(j["a"], "problem.a");
    p.b = number(j["b"], "problem.b");
    if (!(p.a > 0.0))
        throw config_error("problem.a: must be positive");
    if (!(p.b > 0.0))
        throw config_error("problem.b: must be positive");
    const std::size_t d = p.y0.size();

    if (j.contains("rhs") == j.contains("rhs_terms"))
        throw config_error("problem.rhs: give exactly one of rhs or rhs_terms");
    if (j.contains("rhs")) {
        if (!j["rhs"].is_array() || j["rhs"].size() != d)
            throw config_error("problem.rhs: expected one expression per component of y0");
        for (const auto& e : j["rhs"]) {
            if (!e.is_string())
                throw config_error("problem.rhs: expressions must be strings");
            p.rhs.push_back(e.get<std::string>());
        }
    } else {
        const json& terms = j["rhs_terms"];
        if (!terms.is_array() || terms.size() != d)
            throw config_error("problem.rhs_terms: expected one term list per component of y0");
        for (std::size_t i = 0; i < d; ++i) {
            const std::string field = "problem.rhs_terms[" + std::to_string(i) + "]";
            if (!terms[i].is_array())
                throw config_error(field + ": expected an array of terms");
            std::vector<PolyField<cplx>::Monomial> comp;
            for (const auto& term : terms[i]) {
                only_keys(term, field, {"coef", "t_pow", "z_pows"});
                if (!term.contains("coef") || !term.contains("z_pows"))
                    throw config_error(field + ": each term needs coef and z_pows");
                PolyField<cplx>::Monomial m;
                m.coef = complex_number(term["coef"], field + ".coef");
                m.t_pow = term.contains("t_pow") ? static_cast<int>(count(term["t_pow"], field + ".t_pow")) : 0;
                if (!term["z_pows"].is_array() || term["z_pows"].size() != d)
                    throw config_error(field + ".z_pows: expected one exponent per component");
                for (const auto& e : term["z_pows"])
                    m.y_pows.push_back(static_cast<int>(count(e, field + ".z_pows")));
                comp.push_back(std::move(m));
            }
            p.rhs_terms.push_back(std::move(comp));
        }
    }
    if (j.contains("L"))
        p.lipschitz = number(j["L"], "problem.L");
    if (j.contains("M"))
        p.sup_bound = number(j["M"], "problem.M");
    if (j.contains("alpha"))
        p.alpha = number(j["alpha"], "problem.alpha");
    if (j.contains("norm")) {
        if (!j["norm"].is_string())
            throw config_error("problem.norm: expected a string");
        try {
            p.norm = norm_kind_from_string(j["norm"].get<std::string>());
        } catch (const std::exception& e) {
            throw config_error(std::string("problem.norm: ") + e.what());
        }
    }
    return p;
}

} // namespace detail

/// Strict schema check; throws config_error naming the offending field.
inline RunConfig parse_config(const nlohmann::json& j)
{
    using detail::count;
    using detail::number;
    detail::only_keys(j, "config", {"problem", "mode", "solver", "output", "test_hooks"});
    if (!j.contains("problem"))
        throw config_error("problem: required");
    RunConfig c;
    c.problem = detail::parse_problem(j["problem"]);
    if (j.contains("mode")) {
        if (!j["mode"].is_string())
            throw config_error("mode: expected a string");
        c.mode = run_mode_from_string(j["mode"].get<std::string>());
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        detail::only_keys(s, "solver", {"n_max", "N", "K_max", "tol", "ref_extra", "n_ref", "samples"});
        if (s.contains("n_max"))
            c.n_max = count(s["n_max"], "solver.n_max");
        if (s.contains("N")) {
            c.grid_n = static_cast<std::ptrdiff_t>(count(s["N"], "solver.N"));
            if (c.grid_n < 1)
                throw config_error("solver.N: must be positive");
        }
        if (s.contains("K_max")) {
            c.k_max = count(s["K_max"], "solver.K_max");
            if (c.k_max < 1)
                throw config_error("solver.K_max: must be positive");
        }
        if (s.contains("tol")) {
            c.tol = number(s["tol"], "solver.tol");
            if (!(c.tol > 0.0))
                throw config_error("solver.tol: must be positive");
        }
        if (s.contains("ref_extra"))
            c.ref_extra = count(s["ref_extra"], "solver.ref_extra");
        if (s.contains("n_ref"))
            c.n_ref = count(s["n_ref"], "solver.n_ref");
        if (s.contains("samples"))
            c.samples = count(s["samples"], "solver.samples");
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        detail::only_keys(o, "output", {"csv", "json"});
        for (const char* k : {"csv", "json"})
            if (o.contains(k) && !o[k].is_string())
                throw config_error(std::string("output.") + k + ": expected a path string");
        c.csv_path = o.value("csv", "");
        c.json_path = o.value("json", "");
    }
    if (j.contains("test_hooks")) {
        const auto& h = j["test_hooks"];
        detail::only_keys(h, "test_hooks", {"kappa_scale"});
        if (h.contains("kappa_scale")) {
            c.kappa_scale = number(h["kappa_scale"], "test_hooks.kappa_scale");
            if (!(c.kappa_scale > 0.0))
                throw config_error("test_hooks.kappa_scale: must be positive");
        }
    }
    return c;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw config_error("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

// ---------------------------------------------------------------------------
// Problem construction

struct RealSetup {
    IVProblem problem;
    std::function<RealVec(double)> closed_form;
    std::vector<std::string> notes;
};

struct ComplexSetup {
    ComplexIVProblem problem;
    std::function<ComplexVec(cplx)> closed_form;
    std::vector<std::string> notes;
};

inline RealSetup build_real(const RunConfig& c)
{
    const ProblemConfig& pc = c.problem;
    RealSetup s;
    if (pc.registry) {
        const RegistryEntry* entry = nullptr;
        try {
            entry = &find_entry(*pc.registry);
        } catch (const std::invalid_argument& e) {
            throw config_error(std::string("problem.registry: ") + e.what());
        }
        if (!entry->real)
            throw config_error("problem.registry: '" + *pc.registry + "' has no real-time form");
        s.problem = *entry->real;
        s.closed_form = entry->closed_form;
        if (!entry->note.empty())
            s.notes.push_back(entry->note);
    } else {
        if (!pc.rhs_terms.empty())
            throw config_error("problem.rhs_terms: only valid in complex mode");
        if (pc.t0.imag() != 0.0)
            throw config_error("problem.t0: must be real outside complex mode");
        IVProblem& p = s.problem;
        p.t0 = pc.t0.real();
        p.y0 = RealVec(static_cast<Eigen::Index>(pc.y0.size()));
        for (std::size_t i = 0; i < pc.y0.size(); ++i) {
            if (pc.y0[i].imag() != 0.0)
                throw config_error("problem.y0: must be real outside complex mode");
            p.y0[static_cast<Eigen::Index>(i)] = pc.y0[i].real();
        }
        p.a = pc.a;
        p.b = pc.b;
        p.norm = pc.norm;
        p.alpha_override = pc.alpha;
        std::vector<ExprPtr> asts;
        for (std::size_t i = 0; i < pc.rhs.size(); ++i) {
            try {
                asts.push_back(parse_expression(pc.rhs[i], static_cast<int>(pc.y0.size())));
            } catch (const parse_error& e) {
                throw config_error("problem.rhs[" + std::to_string(i) + "]: " + e.what());
            }
        }
        p.rhs = [asts](double t, const RealVec& y) {
            RealVec out(static_cast<Eigen::Index>(asts.size()));
            for (std::size_t i = 0; i < asts.size(); ++i)
                out[static_cast<Eigen::Index>(i)] = eval_expression(*asts[i], t, y);
            return out;
        };
        p.poly = to_poly_field(asts);
        if (!pc.lipschitz || !pc.sup_bound) {
            const auto est = estimate_L_M(p);
            p.lipschitz = pc.lipschitz.value_or(est.lipschitz);
            p.sup_bound = pc.sup_bound.value_or(est.sup_bound);
            s.notes.push_back("L and M not given; sampled estimates used (not certified)");
        } else {
            p.lipschitz = *pc.lipschitz;
            p.sup_bound = *pc.sup_bound;
        }
    }
    try {
        validate(s.problem);
        validate_degenerate(s.problem);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("problem.") + e.what());
    } catch (const eval_error& e) {
        throw config_error(std::string("problem.rhs: ") + e.what() + " on the rectangle");
    }
    if (c.mode == RunMode::real_exact && !s.problem.poly)
        throw config_error("problem.rhs: real-exact mode needs a polynomial right-hand side; use real-grid");
    return s;
}

inline ComplexSetup build_complex(const RunConfig& c)
{
    const ProblemConfig& pc = c.problem;
    ComplexSetup s;
    if (pc.registry) {
        const RegistryEntry* entry = nullptr;
        try {
            entry = &find_entry(*pc.registry);
        } catch (const std::invalid_argument& e) {
            throw config_error(std::string("problem.registry: ") + e.what());
        }
        if (!entry->complex)
            throw config_error("problem.registry: '" + *pc.registry + "' has no complex-time form");
        s.problem = *entry->complex;
        s.closed_form = entry->closed_form_complex;
        if (!entry->note.empty())
            s.notes.push_back(entry->note);
    } else {
        ComplexIVProblem& p = s.problem;
        p.t0 = pc.t0;
        p.z0 = ComplexVec(static_cast<Eigen::Index>(pc.y0.size()));
        for (std::size_t i = 0; i < pc.y0.size(); ++i)
            p.z0[static_cast<Eigen::Index>(i)] = pc.y0[i];
        p.a = pc.a;
        p.b = pc.b;
        p.alpha_override = pc.alpha;
        if (!pc.rhs_terms.empty()) {
            p.rhs.components = pc.rhs_terms;
        } else {
            std::vector<ExprPtr> asts;
            for (std::size_t i = 0; i < pc.rhs.size(); ++i) {
                try {
                    asts.push_back(parse_expression(pc.rhs[i], static_cast<int>(pc.y0.size())));
                } catch (const parse_error& e) {
                    throw config_error("problem.rhs[" + std::to_string(i) + "]: " + e.what());
                }
            }
            const auto field = to_poly_field(asts);
            if (!field)
                throw config_error("problem.rhs: complex mode needs a polynomial right-hand side");
            for (const auto& comp : field->components) {
                std::vector<PolyField<cplx>::Monomial> out;
                for (const auto& m : comp)
                    out.push_back({cplx{m.coef, 0.0}, m.t_pow, m.y_pows});
                p.rhs.components.push_back(std::move(out));
            }
        }
        if (p.rhs.dim() != p.z0.size())
            throw config_error("problem.rhs: one component per entry of y0");
        for (const auto& comp : p.rhs.components)
            for (const auto& m : comp)
                if (m.y_pows.size() != pc.y0.size())
                    throw config_error("problem.rhs_terms: exponent count does not match y0");
        const auto maj = majorant_bounds(p);
        p.lipschitz = pc.lipschitz.value_or(maj.lipschitz);
        p.sup_bound = pc.sup_bound.value_or(maj.sup_bound);
    }
    try {
        validate(s.problem);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("problem.") + e.what());
    }
    return s;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json to_json(const ConvergenceReport& r)
{
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"n", row.n},
                        {"observed", row.observed},
                        {"observed_upper", opt(row.observed_upper)},
                        {"theorem_bound", row.theorem_bound},
                        {"lemma_bound", row.lemma_bound},
                        {"geometric_bound", opt(row.geometric_bound)},
                        {"step", row.step},
                        {"defect", opt(row.defect)},
                        {"closed_form_error", opt(row.closed_form_error)},
                        {"tail_majorant", row.tail_majorant}});
    return {{"mode", r.mode},
            {"reference", r.reference},
            {"alpha", r.alpha},
            {"lipschitz", r.lipschitz},
            {"bound_m", r.bound_m},
            {"series_constant", r.series_constant},
            {"first_step", r.first_step},
            {"theorem_form_applicable", r.theorem_form_applicable},
            {"rows", rows},
            {"violations", r.violations},
            {"warnings", r.warnings}};
}

inline nlohmann::json to_json(const RateReport& r)
{
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"n", row.n},
                        {"observed", row.observed_error},
                        {"factorial_bound", row.factorial_bound},
                        {"geometric_bound", opt(row.geometric_bound)},
                        {"euler_matched", opt(row.euler_error_at_matched_cost)}});
    return {{"entry", r.entry},
            {"backend", r.backend},
            {"reference", r.reference},
            {"rows", rows},
            {"picard_decay", to_string(r.picard)},
            {"geometric_decay", to_string(r.geometric)},
            {"euler_slope", opt(r.euler_slope)},
            {"warnings", r.warnings}};
}

inline void print_summary(std::ostream& os, const ConvergenceReport& r)
{
    os << "mode " << r.mode << ", reference " << r.reference << ", alpha " << format_double(r.alpha) << ", L "
       << format_double(r.lipschitz) << ", C " << format_double(r.series_constant) << '\n';
    os << std::setw(4) << "n" << std::setw(16) << "observed" << std::setw(16) << "bound" << std::setw(16)
       << "chain_bound" << '\n';
    const auto old = os.flags();
    const auto old_precision = os.precision();
    os << std::scientific << std::setprecision(6);
    for (const auto& row : r.rows)
        os << std::setw(4) << row.n << std::setw(16) << row.observed << std::setw(16) << row.theorem_bound
           << std::setw(16) << row.lemma_bound << '\n';
    os.flags(old);
    os.precision(old_precision);
}

namespace detail {

inline void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    out << content;
    if (!out)
        throw std::runtime_error("write failed for '" + path + "'");
}

} // namespace detail

/// Builds, solves and reports. Messages go to `err`, the summary to `out`.
inline int run_experiment(const RunConfig& c, std::ostream& out, std::ostream& err)
{
    ConvergenceReport report;
    std::vector<std::optional<double>> euler;
    std::vector<std::string> notes;
    try {
        if (c.mode == RunMode::complex) {
            auto s = build_complex(c);
            notes = s.notes;
            ComplexSolveOptions o;
            o.n_max = c.n_max;
            o.n_ref = c.n_ref.value_or(c.n_max + c.ref_extra);
            o.k_max = c.k_max;
            o.tol = c.tol;
            o.kappa_scale = c.kappa_scale;
            if (c.samples)
                o.samples = *c.samples;
            o.closed_form = s.closed_form;
            report = solve_complex(s.problem, o);
        } else {
            auto s = build_real(c);
            notes = s.notes;
            SolveOptions o;
            o.n_max = c.n_max;
            o.k_max = c.k_max;
            o.tol = c.tol;
            o.ref_extra = c.ref_extra;
            o.kappa_scale = c.kappa_scale;
            if (c.samples)
                o.samples = *c.samples;
            o.closed_form = s.closed_form;
            if (c.n_ref && *c.n_ref <= c.n_max)
                throw config_error("solver.n_ref: must exceed n_max");
            if (c.n_ref)
                o.ref_extra = *c.n_ref - c.n_max;
            if (c.mode == RunMode::real_exact) {
                report = solve_ivp(s.problem, o);
            } else {
                const UniformGrid grid{s.problem.t0, s.problem.alpha(), c.grid_n};
                report = solve_ivp(s.problem, GridFunction::constant(grid, s.problem.y0), o);
            }
            for (const auto& row : report.rows)
                euler.push_back(euler_matched_error(s.problem, row.n, c.grid_n, s.closed_form));
        }
    } catch (const config_error& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        err << "solver error: " << e.what() << '\n';
        return exit_solver;
    }

    try {
        if (!c.csv_path.empty()) {
            std::ostringstream csv;
            write_csv(csv, report, euler);
            detail::write_file(c.csv_path, csv.str());
        }
        if (!c.json_path.empty())
            detail::write_file(c.json_path, to_json(report).dump(2) + "\n");
    } catch (const std::exception& e) {
        err << "output error: " << e.what() << '\n';
        return exit_solver;
    }

    print_summary(out, report);
    for (const auto& n : notes)
        err << "note: " << n << '\n';
    for (const auto& w : report.warnings)
        err << "warning: " << w << '\n';
    for (const auto& v : report.violations)
        err << "BOUND VIOLATION: " << v << '\n';
    return report.bound_violation() ? exit_violation : exit_ok;
}

} // namespace picard

#pragma once

#include "unfold/acceptance.hpp"
#include "unfold/io.hpp"

namespace unfold::commands {

using io::json;

// Files are held in memory until the command has finished, so a failure writes nothing.
struct Output {
    std::vector<std::pair<std::string, std::string>> files;
    json manifest = json::object();
    std::vector<std::string> log;
    int exit_code = 0;
};

inline int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::config: return 2;
        case ErrorKind::domain: return 3;
        case ErrorKind::convergence:
        case ErrorKind::numeric: return 4;
        case ErrorKind::acceptance: return 5;
    }
    return 4;
}

inline json load_spec_json(const io::RunConfig& rc, std::string& text) {
    if (rc.spec_path.empty()) fail(ErrorKind::config, "no spec file given");
    text = rc.spec_text.empty() ? io::read_text(rc.spec_path) : rc.spec_text;
    return io::parse_json_text(text, "spec " + rc.spec_path.string());
}

inline SolveOptions solve_options(const io::RunConfig& rc) {
    SolveOptions o;
    o.tol = rc.tol;
    o.max_iter = rc.max_iter;
    return o;
}

inline json grid_json(const OmegaGrid& g) {
    json a = json::array();
    for (double v : g.alphas) a.push_back(v);
    return {{"sqrt_eps", io::cx_json(g.s)},
            {"direction_range", {{"beta1", g.dr.beta1}, {"beta2", g.dr.beta2}, {"eta", g.dr.eta}, {"rho", g.dr.rho}}},
            {"Lambda", g.Lambda},
            {"alphas", a},
            {"half_width", g.T},
            {"nodes", g.n},
            {"offsets", g.offsets},
            {"spectral_margin", g.spectral_margin}};
}

inline json solution_json(const OmegaSolution& sol) {
    json dirs = json::array();
    for (const auto& d : sol.dirs)
        dirs.push_back({{"alpha", d.alpha},
                        {"side", side_name(d.side)},
                        {"iterations", d.iterations},
                        {"rate", d.rate},
                        {"residual", d.residual}});
    return {{"grid", grid_json(sol.grid)},
            {"iterations", sol.iterations},
            {"contraction_rate", sol.contraction_rate},
            {"residual", sol.residual},
            {"Lambda_used", sol.Lambda_used},
            {"rho_used", sol.rho_used},
            {"retries", sol.retries},
            {"directions", dirs}};
}

inline std::vector<std::string> y_header(int m) {
    std::vector<std::string> h;
    for (int c = 0; c < m; ++c) {
        h.push_back("re_y" + std::to_string(c));
        h.push_back("im_y" + std::to_string(c));
    }
    return h;
}

inline void push_vec(std::vector<std::string>& row, const Vec& v) {
    for (int c = 0; c < v.size(); ++c) {
        row.push_back(io::num(v(c).real()));
        row.push_back(io::num(v(c).imag()));
    }
}

inline void push_nan(std::vector<std::string>& row, int m) {
    for (int c = 0; c < 2 * m; ++c) row.push_back("nan");
}

// x samples: {"from", "to", "count"} along a segment, or an explicit list of numbers / [re, im].
inline std::vector<cx> parse_points(const json& j, const std::vector<cx>& dflt) {
    if (j.is_null()) return dflt;
    if (j.is_object()) {
        cx a = io::parse_cx(j.value("from", json(0.0)), "x.from");
        cx b = io::parse_cx(j.value("to", json(0.0)), "x.to");
        int n = j.value("count", 0);
        if (n < 1) fail(ErrorKind::config, "x.count must be >= 1");
        std::vector<cx> out;
        for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * (double(i) / (n - 1)));
        return out;
    }
    auto v = io::parse_cx_list(j, "x");
    if (v.empty()) fail(ErrorKind::config, "x list is empty");
    return v;
}

inline json section_field(const io::RunConfig& rc, const char* key) {
    return rc.section.is_object() && rc.section.contains(key) ? rc.section[key] : json();
}

// ------------------------------------------------------------------ borel-sum

// Classical sum at ε = 0: either a spec solved on one ray, or a raw series y_1, y_2, ... whose Borel
// transform is evaluated as a polynomial on the ray.
inline Output borel_sum(const io::RunConfig& rc0) {
    io::RunConfig rc = rc0;
    if (rc.s != cx{}) fail(ErrorKind::config, "borel-sum runs at ε = 0; set sqrt_eps to 0");
    json alpha_j = section_field(rc, "alpha");
    if (!alpha_j.is_null()) {
        double w = 0.5 * (rc.dr.beta2 - rc.dr.beta1), a = alpha_j.get<double>();
        rc.dr.beta1 = a - w;
        rc.dr.beta2 = a + w;
    }
    rc.validate();
    const double alpha = 0.5 * (rc.dr.beta1 + rc.dr.beta2);
    std::vector<cx> xs = parse_points(section_field(rc, "x"), {});
    if (xs.empty()) fail(ErrorKind::config, "borel_sum.x is required");

    Output out;
    out.manifest["command"] = "borel-sum";
    out.manifest["alpha"] = alpha;
    json series_j = section_field(rc, "series");
    if (!series_j.is_null()) {
        auto coeffs = io::parse_cx_list(series_j, "series");
        coeffs.insert(coeffs.begin(), cx{});  // y_0 = 0
        PowerSeries1 phi = formal_borel(PowerSeries1(coeffs));
        io::Csv csv({"re_x", "im_x", "re_y0", "im_y0", "residual"});
        double tail = 0.0;
        for (cx x : xs) {
            auto r = laplace_ray([&](cx xi) { return phi.eval(xi); }, alpha, x, rc.grid.T);
            tail = std::max(tail, r.tail_estimate);
            csv.row({io::num(x.real()), io::num(x.imag()), io::num(r.value.real()), io::num(r.value.imag()), "nan"});
        }
        out.files.push_back({"sum.csv", csv.str()});
        out.manifest["mode"] = "series";
        out.manifest["series_order"] = phi.order() + 1;
        out.manifest["tail_estimate"] = tail;
        out.log.push_back("borel-sum: " + std::to_string(xs.size()) + " points from the raw series");
        return out;
    }

    std::string text;
    SystemSpec spec = io::parse_system(load_spec_json(rc, text));
    GridOptions g = rc.grid;
    g.directions = 1;
    g.sides = SideSet::plus_only;
    OmegaSolution sol = solve_fixed_point(spec, build_omega_grid(spec, 0.0, rc.dr, rc.Lambda, g), solve_options(rc));
    auto h = y_header(spec.m);
    std::vector<std::string> header{"re_x", "im_x"};
    header.insert(header.end(), h.begin(), h.end());
    header.push_back("residual");
    io::Csv csv(header);
    double worst = 0.0;
    for (cx x : xs) {
        EvalChoice c = choose_evaluation(sol, {x, 0});
        Vec y = solution_at_time(sol, c.dir, c.side, c.t);
        double res = ode_residual(spec, fixed_branch_evaluator(sol, c), x, 0.0, 0.01 * std::abs(x));
        worst = std::max(worst, res);
        std::vector<std::string> row{io::num(x.real()), io::num(x.imag())};
        push_vec(row, y);
        row.push_back(io::num(res));
        csv.row(row);
    }
    out.files.push_back({"sum.csv", csv.str()});
    out.manifest["mode"] = "spec";
    out.manifest["solution"] = solution_json(sol);
    out.manifest["max_residual"] = worst;
    out.log.push_back("borel-sum: " + std::to_string(xs.size()) + " points, max ODE residual " + io::num(worst));
    return out;
}

// ------------------------------------------------------------------ unfold-solve

// True for (x²-ε)u' = u + (x²-ε), whose Borel solution ξχ⁺/(ξ-1) is known in closed form.
inline bool is_unfolding_linear(const SystemSpec& sp) {
    if (sp.m != 1 || sp.terms.size() != 1) return false;
    if (std::abs(sp.M[0](0, 0) - 1.0) > 0) return false;
    for (std::size_t j = 1; j < sp.M.size(); ++j)
        if (sp.M[j].cwiseAbs().maxCoeff() != 0) return false;
    const Term& t = sp.terms[0];
    if (t.kind != TermKind::g || t.l.order() != 0) return false;
    for (int e = 0; e <= t.poly.eps_degree; ++e)
        for (int k = 0; k <= t.poly.x_degree; ++k)
            if (t.poly.at(k, e) != (e == 0 && k == 0 ? cx(1.0) : cx{})) return false;
    return true;
}

inline std::vector<cx> default_cloud(cx s) {
    std::vector<cx> pts;
    double r0 = std::max(std::abs(s), 0.05);
    for (double f : {0.5, 1.5, 3.0, 6.0})
        for (int k = 0; k < 24; ++k) pts.push_back(f * r0 * std::exp(cx(0, 2 * pi * (k + 0.5) / 24)));
    return pts;
}

inline Output unfold_solve(const io::RunConfig& rc) {
    rc.validate();
    std::string text;
    SystemSpec spec = io::parse_system(load_spec_json(rc, text));
    GridOptions g = rc.grid;
    if (rc.s == cx{}) g.sides = SideSet::both;
    OmegaSolution sol = solve_fixed_point(spec, build_omega_grid(spec, rc.s, rc.dr, rc.Lambda, g), solve_options(rc));
    const cx s = rc.s;
    Output out;
    out.manifest["command"] = "unfold-solve";
    out.manifest["solution"] = solution_json(sol);

    // line samples
    const bool exact = is_unfolding_linear(spec);
    double exact_err = 0.0;
    auto yh = y_header(spec.m);
    for (std::size_t k = 0; k < sol.dirs.size(); ++k) {
        const auto& d = sol.dirs[k];
        int ai = s == cx{} ? static_cast<int>(k / (g.sides == SideSet::both ? 2 : 1)) : static_cast<int>(k);
        std::string name = "line_d" + std::to_string(ai) + (s == cx{} ? std::string("_") + side_name(d.side) : "") + ".csv";
        std::vector<std::string> header{"tau", "u", "re_xi", "im_xi"};
        header.insert(header.end(), yh.begin(), yh.end());
        io::Csv csv(header);
        for (std::size_t li = 0; li < d.values.lines.size(); ++li) {
            const LineFunction& L = d.values.lines[li];
            for (int j = 0; j < L.n; ++j) {
                cx xi = L.xi(j);
                std::vector<std::string> row{io::num(d.values.offsets[li]), io::num(L.u(j)), io::num(xi.real()),
                                             io::num(xi.imag())};
                push_vec(row, L.values.row(j).transpose());
                csv.row(row);
                if (exact && !(L.ray && j == 0) && std::abs(xi - 1.0) > 1e-6)
                    exact_err = std::max(exact_err, std::abs(L.values(j, 0) - systems::unfolding_linear_borel(xi, s)));
            }
        }
        out.files.push_back({name, csv.str()});
    }

    // y over a point cloud of Z(√ε)
    std::vector<cx> cloud = parse_points(section_field(rc, "cloud"), default_cloud(s));
    std::vector<std::string> header{"re_x", "im_x", "in_z", "evaluated", "dir", "side", "margin"};
    header.insert(header.end(), yh.begin(), yh.end());
    header.push_back("residual");
    io::Csv csv(header);
    int evaluated = 0;
    double worst = 0.0;
    for (cx x : cloud) {
        std::vector<std::string> row{io::num(x.real()), io::num(x.imag())};
        bool in_z = false;
        try {
            in_z = z_contains({x, 0}, s, sol.grid.Lambda, sol.grid.dr);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::domain) throw;
        }
        row.push_back(in_z ? "1" : "0");
        std::optional<EvalChoice> c;
        if (in_z) {
            try {
                c = choose_evaluation(sol, {x, 0});
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::domain) throw;
            }
        }
        if (!c) {
            row.insert(row.end(), {"0", "-1", "none", "nan"});
            push_nan(row, spec.m);
            row.push_back("nan");
            csv.row(row);
            continue;
        }
        ++evaluated;
        Vec y = solution_at_time(sol, c->dir, c->side, c->t);
        double res = std::numeric_limits<double>::quiet_NaN();
        try {
            double h = 1e-3 * std::max(std::abs(x * x - s * s), 1e-3);
            res = ode_residual(spec, fixed_branch_evaluator(sol, *c), x, s, h);
            worst = std::max(worst, res);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::domain) throw;
        }
        row.insert(row.end(), {"1", std::to_string(c->dir), side_name(c->side), io::num(c->margin)});
        push_vec(row, y);
        row.push_back(io::num(res));
        csv.row(row);
    }
    out.files.push_back({"cloud.csv", csv.str()});
    out.manifest["cloud"] = {{"points", cloud.size()}, {"evaluated", evaluated}, {"max_residual", worst}};
    if (exact) {
        bool pass = exact_err < 1e-8;
        out.manifest["exact_check"] = pass ? "pass" : "fail";
        out.manifest["exact_check_error"] = exact_err;
        out.log.push_back(std::string("exact-check: ") + (pass ? "pass" : "fail") + " (max error " + io::num(exact_err) + ")");
    } else {
        out.manifest["exact_check"] = "not-applicable";
    }
    std::ostringstream os;
    os << "unfold-solve: " << sol.dirs.size() << " direction solves, " << sol.iterations << " iterations, rate "
       << sol.contraction_rate << ", residual " << sol.residual << ", " << evaluated << "/" << cloud.size()
       << " cloud points evaluated";
    out.log.push_back(os.str());
    return out;
}

// ------------------------------------------------------------------ confluence

inline Output confluence(const io::RunConfig& rc) {
    rc.validate();
    std::string text;
    SystemSpec spec = io::parse_system(load_spec_json(rc, text));
    json s0j = section_field(rc, "s0");
    cx s0 = s0j.is_null() ? rc.s : io::parse_cx(s0j, "confluence.s0");
    if (s0 == cx{}) fail(ErrorKind::config, "confluence needs a nonzero s0 (confluence.s0 or sqrt_eps)");
    std::vector<double> nus;
    json nj = section_field(rc, "nus");
    if (nj.is_null()) {
        for (int j = 0; j <= 6; ++j) nus.push_back(std::ldexp(1.0, -j));
    } else {
        for (const auto& v : nj) nus.push_back(v.get<double>());
    }
    std::vector<cx> xs = parse_points(section_field(rc, "x"), {});
    if (xs.empty()) fail(ErrorKind::config, "confluence.x is required");
    ConfluenceOptions opt;
    opt.Lambda = rc.Lambda;
    opt.grid = rc.grid;
    opt.solve = solve_options(rc);
    if (!section_field(rc, "refine").is_null()) opt.refine = section_field(rc, "refine").get<double>();
    auto rows = confluence_table(spec, rc.dr, s0, nus, xs, opt);
    io::Csv csv({"nu", "re_x", "im_x", "abs_diff", "skipped"});
    std::map<double, double> per_nu;
    for (const auto& r : rows) {
        csv.row({io::num(r.nu), io::num(r.x.real()), io::num(r.x.imag()), r.skipped ? "nan" : io::num(r.abs_diff),
                 r.skipped ? "1" : "0"});
        if (!r.skipped) per_nu[r.nu] = std::max(per_nu[r.nu], r.abs_diff);
    }
    Output out;
    out.files.push_back({"confluence.csv", csv.str()});
    json maxes = json::array();
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (double nu : nus) {
        double v = per_nu.count(nu) ? per_nu[nu] : std::numeric_limits<double>::quiet_NaN();
        maxes.push_back({{"nu", nu}, {"max_abs_diff", v}});
        if (nu != 0.0 && !std::isnan(v)) {
            if (v > prev) monotone = false;
            prev = v;
        }
    }
    out.manifest = {{"command", "confluence"}, {"s0", io::cx_json(s0)}, {"per_nu", maxes}, {"monotone", monotone}};
    out.log.push_back(std::string("confluence: ") + std::to_string(rows.size()) + " rows, monotone " +
                      (monotone ? "yes" : "no"));
    return out;
}

// ------------------------------------------------------------------ normalize

inline Output normalize(const io::RunConfig& rc) {
    rc.validate();
    if (rc.s == cx{}) fail(ErrorKind::config, "normalize needs ε ≠ 0");
    std::string text;
    LinearSystemSpec lin = io::parse_linear(load_spec_json(rc, text));
    SystemSpec spec = riccati_reduce(lin);
    OmegaSolution sol = solve_fixed_point(spec, build_omega_grid(spec, rc.s, rc.dr, rc.Lambda, rc.grid), solve_options(rc));
    const cx s = rc.s;
    TOptions topt;
    if (!section_field(rc, "panels_per_unit").is_null()) topt.panels_per_unit = section_field(rc, "panels_per_unit").get<int>();
    if (!section_field(rc, "decay_lengths").is_null()) topt.decay_lengths = section_field(rc, "decay_lengths").get<double>();
    double h = section_field(rc, "h").is_null() ? 1e-3 : section_field(rc, "h").get<double>();

    // default points: both sides of the middle direction at several real times
    std::vector<cx> xs;
    if (section_field(rc, "x").is_null()) {
        int k = static_cast<int>(sol.dirs.size()) / 2;
        double a = sol.dirs[k].alpha, W = strip_width(a, s);
        for (Side side : {Side::plus, Side::minus})
            for (double u : {-3.0, 0.0, 2.0, 5.0, 12.0}) {
                double C = side == Side::plus ? sol.grid.Lambda + 1.0 : -W + sol.grid.Lambda + 1.5;
                xs.push_back(inverse_time(std::exp(cx(0, -a)) * cx(C, u), s).x);
            }
    } else {
        xs = parse_points(section_field(rc, "x"), {});
    }
    json pts = json::array();
    double worst = 0.0;
    for (cx x : xs) {
        EvalChoice c = choose_evaluation(sol, {x, 0});
        MatEval T = fixed_branch_T(lin, sol, c, topt);
        Mat Tx = T(x);
        double r = normalization_residual(lin, T, x, s, h);
        worst = std::max(worst, r);
        json Tj = json::array();
        for (int i = 0; i < lin.n; ++i) {
            json row = json::array();
            for (int j = 0; j < lin.n; ++j) row.push_back(io::cx_json(Tx(i, j)));
            Tj.push_back(row);
        }
        pts.push_back({{"x", io::cx_json(x)},
                       {"alpha", sol.dirs[c.dir].alpha},
                       {"side", side_name(c.side)},
                       {"margin", c.margin},
                       {"residual", r},
                       {"T", Tj}});
    }
    double at_s = (assemble_T(lin, sol, {s, 0}, topt) - Mat::Identity(lin.n, lin.n)).cwiseAbs().maxCoeff();
    json report = {{"sqrt_eps", io::cx_json(s)},
                   {"n", lin.n},
                   {"riccati_dimension", spec.m},
                   {"gauge", "T_D(sqrt_eps) = I; diagonal integral taken from sqrt_eps to x"},
                   {"path",
                    {{"kind", "t + i e^{-i alpha} v, v in [0, V], V = decay_lengths / (2|s||sin(alpha - arg s)|)"},
                     {"panels_per_unit", topt.panels_per_unit},
                     {"decay_lengths", topt.decay_lengths},
                     {"rule", "Gauss-Legendre 20 points per panel"}}},
                   {"difference_step", h},
                   {"residual_norm", "max abs entry"},
                   {"points", pts},
                   {"max_residual", worst},
                   {"T_at_sqrt_eps_minus_I", at_s},
                   {"solution", solution_json(sol)}};
    Output out;
    out.files.push_back({"normalization.json", report.dump(2) + "\n"});
    out.manifest = {{"command", "normalize"}, {"max_residual", worst}};
    out.log.push_back("normalize: " + std::to_string(xs.size()) + " points, max residual " + io::num(worst));
    return out;
}

// ------------------------------------------------------------------ selftest

inline Output selftest(const io::RunConfig& rc) {
    Output out;
    auto results = acceptance::run_all(rc.seed);
    int passed = 0;
    io::Csv csv({"id", "pass", "detail"});
    for (const auto& r : results) {
        out.log.push_back(acceptance::format_line(r));
        passed += r.pass;
        std::string d = r.detail;
        for (auto& ch : d)
            if (ch == ',' || ch == '\n') ch = ';';
        csv.row({r.id, r.pass ? "1" : "0", d});
    }
    out.log.push_back(std::to_string(passed) + "/" + std::to_string(results.size()) + " criteria passed");
    out.files.push_back({"selftest.csv", csv.str()});
    out.manifest = {{"command", "selftest"}, {"passed", passed}, {"total", results.size()}, {"seed", rc.seed}};
    out.exit_code = passed == static_cast<int>(results.size()) ? 0 : 5;
    return out;
}

inline Output run(const io::RunConfig& rc) {
    if (rc.command == "borel-sum") return borel_sum(rc);
    if (rc.command == "unfold-solve") return unfold_solve(rc);
    if (rc.command == "confluence") return confluence(rc);
    if (rc.command == "normalize") return normalize(rc);
    if (rc.command == "selftest") return selftest(rc);
    fail(ErrorKind::config, "unknown command '" + rc.command + "'");
}

}  // namespace unfold::commands

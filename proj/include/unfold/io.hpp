#pragma once

#include "unfold/applications.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace unfold::io {

using json = nlohmann::json;

// A complex entry is a number or a two-element array [re, im].
inline cx parse_cx(const json& j, const std::string& what) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    fail(ErrorKind::config, what + ": expected a number or [re, im]");
}

inline std::vector<cx> parse_cx_list(const json& j, const std::string& what) {
    if (!j.is_array()) fail(ErrorKind::config, what + ": expected an array");
    std::vector<cx> out;
    for (const auto& e : j) out.push_back(parse_cx(e, what));
    return out;
}

inline Mat parse_matrix(const json& j, int m, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != m) fail(ErrorKind::config, what + ": expected " + std::to_string(m) + " rows");
    Mat r(m, m);
    for (int i = 0; i < m; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != m)
            fail(ErrorKind::config, what + ": expected " + std::to_string(m) + " columns");
        for (int k = 0; k < m; ++k) r(i, k) = parse_cx(j[i][k], what);
    }
    return r;
}

// [[x-coefficients at ε⁰], [at ε¹], ...]; a bare number is a constant.
inline Poly2 parse_poly(const json& j, const std::string& what) {
    if (j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number())) return Poly2{0, 0, {parse_cx(j, what)}};
    if (!j.is_array() || j.empty()) fail(ErrorKind::config, what + ": polynomial must be a non-empty array of rows");
    std::size_t width = 0;
    for (const auto& row : j) {
        if (!row.is_array() || row.empty()) fail(ErrorKind::config, what + ": each ε row must be a non-empty array");
        width = std::max(width, row.size());
    }
    Poly2 p;
    p.eps_degree = static_cast<int>(j.size()) - 1;
    p.x_degree = static_cast<int>(width) - 1;
    p.coeffs.assign(j.size() * width, cx{});
    for (std::size_t e = 0; e < j.size(); ++e)
        for (std::size_t k = 0; k < j[e].size(); ++k) p.coeffs[e * width + k] = parse_cx(j[e][k], what);
    return p;
}

template <class T>
T get_or(const json& j, const char* key, T dflt) {
    if (!j.contains(key)) return dflt;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorKind::config, std::string("field '") + key + "' has the wrong type");
    }
}

inline SystemSpec parse_system(const json& j) {
    if (!j.is_object()) fail(ErrorKind::config, "system spec must be a JSON object");
    SystemSpec sp;
    sp.m = get_or<int>(j, "m", 0);
    if (sp.m < 1) fail(ErrorKind::config, "system spec: m must be a positive integer");
    if (!j.contains("M") || !j["M"].is_array() || j["M"].empty())
        fail(ErrorKind::config, "system spec: M must list at least the ε⁰ matrix");
    for (const auto& Mj : j["M"]) sp.M.push_back(parse_matrix(Mj, sp.m, "M"));
    if (j.contains("terms")) {
        if (!j["terms"].is_array()) fail(ErrorKind::config, "system spec: terms must be an array");
        for (const auto& t : j["terms"]) {
            Term term;
            std::string kind = get_or<std::string>(t, "kind", "");
            if (kind == "m")
                term.kind = TermKind::m;
            else if (kind == "a")
                term.kind = TermKind::a;
            else if (kind == "g")
                term.kind = TermKind::g;
            else
                fail(ErrorKind::config, "term kind must be one of m, a, g");
            if (!t.contains("l") || !t["l"].is_array()) fail(ErrorKind::config, "term needs a multi-index l");
            for (const auto& v : t["l"]) {
                if (!v.is_number_integer()) fail(ErrorKind::config, "multi-index entries must be integers");
                term.l.l.push_back(v.get<int>());
            }
            term.row = get_or<int>(t, "row", 0);
            if (!t.contains("poly")) fail(ErrorKind::config, "term needs poly");
            term.poly = parse_poly(t["poly"], "poly");
            sp.terms.push_back(term);
        }
    }
    sp.L1 = get_or<double>(j, "L1", sp.L1);
    sp.Lambda1 = get_or<double>(j, "Lambda1", sp.Lambda1);
    sp.rho1 = get_or<double>(j, "rho1", sp.rho1);
    sp.validate();
    return sp;
}

inline LinearSystemSpec parse_linear(const json& j) {
    if (!j.is_object()) fail(ErrorKind::config, "linear spec must be a JSON object");
    LinearSystemSpec lin;
    lin.n = get_or<int>(j, "n", 0);
    if (lin.n < 2) fail(ErrorKind::config, "linear spec: n must be >= 2");
    auto plist = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_array()) fail(ErrorKind::config, std::string("linear spec: missing ") + key);
        std::vector<std::vector<cx>> out;
        // each entry lists ε-coefficients; a bare number is a constant
        for (const auto& p : j[key])
            out.push_back(p.is_number() ? std::vector<cx>{parse_cx(p, key)} : parse_cx_list(p, key));
        return out;
    };
    lin.lambda0 = plist("lambda0");
    lin.lambda1 = plist("lambda1");
    if (!j.contains("R") || !j["R"].is_array()) fail(ErrorKind::config, "linear spec: missing R");
    for (const auto& row : j["R"]) {
        if (!row.is_array()) fail(ErrorKind::config, "linear spec: R rows must be arrays");
        std::vector<Poly2> r;
        for (const auto& p : row) r.push_back(parse_poly(p, "R"));
        lin.R.push_back(r);
    }
    lin.validate();
    return lin;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorKind::config, "cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config, what + ": " + e.what());
    }
}

// ------------------------------------------------------------------ run configuration

struct RunConfig {
    std::string command;
    std::filesystem::path spec_path;
    std::string spec_text;
    cx s = 0.0;
    DirectionRange dr;
    double Lambda = 0.5;
    GridOptions grid;
    double tol = 1e-10;
    int max_iter = 200;
    std::filesystem::path out = "out";
    unsigned seed = 20240611u;
    json section;  // command-specific block

    void validate() const {
        dr.validate();
        if (!(Lambda > 0)) fail(ErrorKind::config, "Λ must be positive");
        if (grid.directions < 1 || grid.directions > 64) fail(ErrorKind::config, "dirs must lie in [1, 64]");
        if (!(grid.T > 0 && grid.T <= 200)) fail(ErrorKind::config, "half-width must lie in (0, 200]");
        if (grid.n < 9 || grid.n % 2 == 0 || grid.n > 1 << 16) fail(ErrorKind::config, "nodes must be odd in [9, 65536]");
        if (!(tol > 0 && tol < 1)) fail(ErrorKind::config, "tol must lie in (0, 1)");
        if (max_iter < 1) fail(ErrorKind::config, "max-iter must be >= 1");
        if (!finite(s)) fail(ErrorKind::config, "√ε must be finite");
    }
};

inline std::string section_key(const std::string& command) {
    std::string k = command;
    for (auto& c : k)
        if (c == '-') c = '_';
    return k;
}

// Reads the config file; the spec path is resolved relative to the config's directory.
inline RunConfig parse_run_config(const json& j, const std::filesystem::path& base) {
    if (!j.is_object()) fail(ErrorKind::config, "config must be a JSON object");
    RunConfig rc;
    rc.command = get_or<std::string>(j, "command", "");
    if (j.contains("spec")) {
        rc.spec_path = get_or<std::string>(j, "spec", "");
        if (rc.spec_path.is_relative()) rc.spec_path = base / rc.spec_path;
    }
    if (j.contains("sqrt_eps")) rc.s = parse_cx(j["sqrt_eps"], "sqrt_eps");
    if (j.contains("direction_range")) {
        const auto& d = j["direction_range"];
        rc.dr.beta1 = get_or<double>(d, "beta1", rc.dr.beta1);
        rc.dr.beta2 = get_or<double>(d, "beta2", rc.dr.beta2);
        rc.dr.eta = get_or<double>(d, "eta", rc.dr.eta);
        rc.dr.rho = get_or<double>(d, "rho", rc.dr.rho);
    }
    rc.Lambda = get_or<double>(j, "Lambda", rc.Lambda);
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        rc.grid.directions = get_or<int>(g, "directions", rc.grid.directions);
        rc.grid.T = get_or<double>(g, "half_width", rc.grid.T);
        rc.grid.n = get_or<int>(g, "nodes", rc.grid.n);
        std::string sides = get_or<std::string>(g, "sides", "both");
        if (sides == "both")
            rc.grid.sides = SideSet::both;
        else if (sides == "plus_only")
            rc.grid.sides = SideSet::plus_only;
        else
            fail(ErrorKind::config, "grid.sides must be both or plus_only");
    }
    rc.tol = get_or<double>(j, "tol", rc.tol);
    rc.max_iter = get_or<int>(j, "max_iter", rc.max_iter);
    if (j.contains("out")) {
        rc.out = get_or<std::string>(j, "out", "out");
        if (rc.out.is_relative()) rc.out = base / rc.out;
    }
    rc.seed = get_or<unsigned>(j, "seed", rc.seed);
    if (!rc.command.empty() && j.contains(section_key(rc.command))) rc.section = j[section_key(rc.command)];
    return rc;
}

// ------------------------------------------------------------------ output

// Shortest round-trip decimal form, so equal runs give equal bytes.
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : cols_(header.size()) { row(header); }
    void row(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) fail(ErrorKind::numeric, "csv row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
        os_ << "\n";
    }
    std::string str() const { return os_.str(); }

private:
    std::size_t cols_;
    std::ostringstream os_;
};

inline json cx_json(cx z) { return json::array({z.real(), z.imag()}); }

}  // namespace unfold::io

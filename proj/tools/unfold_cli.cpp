// Batch driver: unfold_cli <command> [--config run.json] [overrides]
#include "unfold/commands.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <iostream>

namespace fs = std::filesystem;
using namespace unfold;
using io::json;

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        fail(ErrorKind::numeric, "sha256 failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

cx parse_pair(const std::string& text) {
    auto comma = text.find(',');
    try {
        if (comma == std::string::npos) return {std::stod(text), 0.0};
        return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    } catch (const std::exception&) {
        fail(ErrorKind::config, "--sqrt-eps expects RE,IM");
    }
}

struct Overrides {
    std::string config, spec, sqrt_eps, out;
    std::optional<double> alpha_lo, alpha_hi, eta, rho, lambda, half_width, tol;
    std::optional<int> dirs, nodes, max_iter;
    std::optional<unsigned> seed;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "run configuration JSON");
    sub->add_option("--spec", o.spec, "system spec JSON (overrides the config's spec)");
    sub->add_option("--sqrt-eps", o.sqrt_eps, "√ε as RE,IM");
    sub->add_option("--alpha-lo", o.alpha_lo, "β₁, lower end of the direction range");
    sub->add_option("--alpha-hi", o.alpha_hi, "β₂, upper end of the direction range");
    sub->add_option("--eta", o.eta, "η, angular margin");
    sub->add_option("--rho", o.rho, "ρ, sector radius");
    sub->add_option("--lambda", o.lambda, "Λ, exponential weight");
    sub->add_option("--dirs", o.dirs, "number of directions");
    sub->add_option("--half-width", o.half_width, "line half width T");
    sub->add_option("--nodes", o.nodes, "nodes per line (odd)");
    sub->add_option("--tol", o.tol, "fixed-point tolerance");
    sub->add_option("--max-iter", o.max_iter, "Picard iteration cap");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "seed for property sampling");
}

io::RunConfig build_config(const std::string& command, const Overrides& o) {
    io::RunConfig rc;
    if (!o.config.empty()) {
        fs::path p(o.config);
        json j = io::parse_json_text(io::read_text(p), "config " + p.string());
        rc = io::parse_run_config(j, p.parent_path());
        if (!rc.command.empty() && rc.command != command)
            fail(ErrorKind::config, "config is for '" + rc.command + "', not '" + command + "'");
    }
    rc.command = command;
    if (!o.spec.empty()) rc.spec_path = o.spec;
    if (!o.sqrt_eps.empty()) rc.s = parse_pair(o.sqrt_eps);
    if (o.alpha_lo) rc.dr.beta1 = *o.alpha_lo;
    if (o.alpha_hi) rc.dr.beta2 = *o.alpha_hi;
    if (o.eta) rc.dr.eta = *o.eta;
    if (o.rho) rc.dr.rho = *o.rho;
    if (o.lambda) rc.Lambda = *o.lambda;
    if (o.dirs) rc.grid.directions = *o.dirs;
    if (o.half_width) rc.grid.T = *o.half_width;
    if (o.nodes) rc.grid.n = *o.nodes;
    if (o.tol) rc.tol = *o.tol;
    if (o.max_iter) rc.max_iter = *o.max_iter;
    if (!o.out.empty()) rc.out = o.out;
    if (o.seed) rc.seed = *o.seed;
    if (!rc.spec_path.empty() && command != "selftest") rc.spec_text = io::read_text(rc.spec_path);
    return rc;
}

// All files are written only after the command succeeded; the manifest lists each with its hash.
void write_outputs(const io::RunConfig& rc, commands::Output& out) {
    json files = json::array();
    for (const auto& [name, data] : out.files)
        files.push_back({{"name", name}, {"bytes", data.size()}, {"sha256", sha256_hex(data)}});
    out.manifest["files"] = files;
    out.manifest["seed"] = rc.seed;
    if (!rc.spec_text.empty()) out.manifest["spec_sha256"] = sha256_hex(rc.spec_text);
    std::error_code ec;
    fs::create_directories(rc.out, ec);
    if (ec) fail(ErrorKind::config, "cannot create " + rc.out.string() + ": " + ec.message());
    auto put = [&](const std::string& name, const std::string& data) {
        std::ofstream f(rc.out / name, std::ios::binary);
        f << data;
        if (!f) fail(ErrorKind::config, "cannot write " + (rc.out / name).string());
    };
    for (const auto& [name, data] : out.files) put(name, data);
    put("manifest.json", out.manifest.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unfolded Borel-Laplace solver"};
    app.require_subcommand(1);
    Overrides o;
    std::vector<std::pair<std::string, std::string>> cmds{
        {"borel-sum", "classical Borel sum at ε = 0 (spec or raw series)"},
        {"unfold-solve", "fixed point on Ω(√ε), line samples and a Z(√ε) point cloud"},
        {"confluence", "|y(x, ν s₀) - y(x, 0)| table"},
        {"normalize", "Riccati reduction and normalizing transformation report"},
        {"selftest", "run the acceptance suite"}};
    for (const auto& [name, help] : cmds) add_common(app.add_subcommand(name, help), o);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    std::string command = app.get_subcommands().front()->get_name();
    try {
        io::RunConfig rc = build_config(command, o);
        commands::Output out = commands::run(rc);
        for (const auto& line : out.log) std::cout << line << "\n";
        if (command != "selftest" || !o.out.empty() || !o.config.empty()) write_outputs(rc, out);
        return out.exit_code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return commands::exit_code(e.kind());
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

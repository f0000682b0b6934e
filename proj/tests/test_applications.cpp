#include "unfold/commands.hpp"
#include "unfold/systems.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace unfold;
using io::json;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::numeric;
}

const std::filesystem::path src_dir = UNFOLD_SOURCE_DIR;

io::RunConfig load_config(const std::string& name) {
    auto p = src_dir / "configs" / name;
    return io::parse_run_config(io::parse_json_text(io::read_text(p), name), p.parent_path());
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

const std::string& file_of(const commands::Output& out, const std::string& name) {
    for (const auto& [n, d] : out.files)
        if (n == name) return d;
    throw std::runtime_error("missing output " + name);
}

}  // namespace

// ------------------------------------------------------------------ Riccati reduction

TEST(Riccati, DeskSystemStructure) {
    auto sp = riccati_reduce(systems::desk_linear());
    EXPECT_EQ(sp.m, 2);
    EXPECT_LT(std::abs(sp.M[0](0, 0) - 2.0), 1e-15);
    EXPECT_LT(std::abs(sp.M[0](1, 1) + 2.0), 1e-15);
    EXPECT_EQ(sp.M[0](0, 1), cx(0.0));
}

// M u + f(x, u, ε) must equal the off-diagonal part of [Λ, U] + (x²-ε)(R(I+U) - U diag(R(I+U))).
TEST(Riccati, RightHandSideMatchesMatrixForm) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> d(-1, 1);
    auto rc = [&] { return cx(d(rng), d(rng)); };
    LinearSystemSpec lin;
    lin.n = 3;
    lin.lambda0 = {{1.0, rc()}, {cx(-0.5, 1.0)}, {cx(-0.5, -1.0), rc()}};
    lin.lambda1 = {{rc()}, {rc()}, {0.0}};
    lin.R.resize(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) lin.R[i].push_back(Poly2{1, 1, {rc(), rc(), rc(), rc()}});
    auto sp = riccati_reduce(lin);
    ASSERT_EQ(sp.m, 6);
    cx x = rc() * 0.3, eps = rc() * 0.01;
    Vec u(6);
    for (int i = 0; i < 6; ++i) u(i) = rc() * 0.2;
    Vec lhs = sp.M_at(eps) * u + system_f(sp, x, u, eps);
    Mat U = unpack_U(3, u);
    Mat RU = lin.R_at(x, eps) * (Mat::Identity(3, 3) + U);
    Mat D = RU.diagonal().asDiagonal();
    Mat L = lin.Lambda_at(x, eps);
    Mat rhs = L * U - U * L + (x * x - eps) * (RU - U * D);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) EXPECT_LT(std::abs(lhs(pair_index(3, i, j)) - rhs(i, j)), 1e-13) << i << j;
}

TEST(Riccati, CoalescingEigenvaluesRejected) {
    auto lin = systems::desk_linear();
    lin.lambda0 = {{1.0}, {1.0}};
    EXPECT_EQ(kind_of([&] { riccati_reduce(lin); }), ErrorKind::config);
}

// ------------------------------------------------------------------ synthesis

class Synthesis : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        s_ = 0.07 * std::exp(cx(0, pi / 4));
        DirectionRange dr{pi / 4, 3 * pi / 4, pi / 12, 0.5};
        GridOptions g;
        g.directions = 3;
        g.T = 8;
        g.n = 1025;
        auto lin = systems::unfolding_linear();
        auto non = systems::unfolding_nonlinear();
        lin_ = new OmegaSolution(solve_fixed_point(lin, build_omega_grid(lin, s_, dr, 0.5, g)));
        non_ = new OmegaSolution(solve_fixed_point(non, build_omega_grid(non, s_, dr, 0.5, g)));
    }
    static void TearDownTestSuite() {
        delete lin_;
        delete non_;
    }
    static inline cx s_;
    static inline OmegaSolution* lin_ = nullptr;
    static inline OmegaSolution* non_ = nullptr;
};

// The nonlinear example is solved by (x²-ε) times the linear one.
TEST_F(Synthesis, NonlinearIsScaledLinear) {
    int checked = 0;
    for (cx x : {cx(0.05, 0.2), cx(-0.1, 0.15), cx(0.2, -0.05), cx(0.0, -0.25)}) {
        Vec u = center_manifold_eval(*lin_, {x, 0});
        Vec y = center_manifold_eval(*non_, {x, 0});
        EXPECT_LT(std::abs(y(0) - (x * x - s_ * s_) * u(0)), 1e-9) << x;
        ++checked;
    }
    EXPECT_EQ(checked, 4);
}

TEST_F(Synthesis, OdeResidualIsSmall) {
    auto sp = systems::unfolding_linear();
    cx x(0.05, 0.2);
    EvalChoice c = choose_evaluation(*lin_, {x, 0});
    EXPECT_GT(c.margin, 0.0);
    EXPECT_LT(ode_residual(sp, fixed_branch_evaluator(*lin_, c), x, s_, 1e-3), 1e-8);
}

TEST_F(Synthesis, FixedPointsAreOutsideZ) {
    EXPECT_EQ(kind_of([&] { center_manifold_eval(*lin_, {s_, 0}); }), ErrorKind::domain);
}

TEST(Normalization, IdentityAtSqrtEps) {
    auto lin = systems::desk_linear();
    auto spec = riccati_reduce(lin);
    const cx s = 0.1 * std::exp(cx(0, pi / 6));
    DirectionRange dr{pi / 4, 3 * pi / 4, pi / 12, 0.15};
    GridOptions g;
    g.directions = 1;
    g.T = 8;
    g.n = 513;
    auto sol = solve_fixed_point(spec, build_omega_grid(spec, s, dr, 2.0, g));
    EXPECT_EQ((assemble_T(lin, sol, {s, 0}) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Normalization, ZeroCouplingHasZeroResidual) {
    auto lin = systems::desk_linear();
    MatEval T = [](cx) { return Mat(Mat::Identity(2, 2)); };
    EXPECT_GT(normalization_residual(lin, T, cx(0.1, 0.2), 0.05, 1e-3), 0.0);
    lin.R = {{systems::constant(0.0), systems::constant(0.0)}, {systems::constant(0.0), systems::constant(0.0)}};
    EXPECT_LT(normalization_residual(lin, T, cx(0.1, 0.2), 0.05, 1e-3), 1e-15);
}

// ------------------------------------------------------------------ input parsing

TEST(Io, PolynomialRowsArePadded) {
    auto p = io::parse_poly(json::parse("[[1, 2, 3], [[0, 1]]]"), "p");
    EXPECT_EQ(p.eps_degree, 1);
    EXPECT_EQ(p.x_degree, 2);
    EXPECT_EQ(p.at(2, 0), cx(3.0));
    EXPECT_EQ(p.at(0, 1), cx(0.0, 1.0));
    EXPECT_EQ(p.at(1, 1), cx(0.0));
    auto c = io::parse_poly(json::parse("[2, -1]"), "c");
    EXPECT_EQ(c.eval(5.0, 7.0), cx(2.0, -1.0));
}

TEST(Io, SystemSpecRoundTrip) {
    auto sp = io::parse_system(json::parse(io::read_text(src_dir / "configs/specs/unfolding_nonlinear.json")));
    auto ref = systems::unfolding_nonlinear();
    cx x(0.3, 0.1), eps(0.01, 0.002), y(0.2, -0.4);
    EXPECT_LT(std::abs(system_f(sp, x, Vec::Constant(1, y), eps)(0) - system_f(ref, x, Vec::Constant(1, y), eps)(0)),
              1e-15);
    EXPECT_TRUE(commands::is_unfolding_linear(
        io::parse_system(json::parse(io::read_text(src_dir / "configs/specs/unfolding_linear.json")))));
    EXPECT_FALSE(commands::is_unfolding_linear(sp));
}

TEST(Io, MalformedSpecsAreConfigErrors) {
    for (const char* text : {R"({"m": 1})", R"({"m": 2, "M": [[[1]]]})",
                             R"({"m": 1, "M": [[[1]]], "terms": [{"kind": "q", "l": [0], "poly": 1}]})",
                             R"({"m": 1, "M": [[[1]]], "terms": [{"kind": "g", "l": [0.5], "poly": 1}]})",
                             R"({"m": 1, "M": [[[0]]]})", R"([1, 2])"})
        EXPECT_EQ(kind_of([&] { io::parse_system(json::parse(text)); }), ErrorKind::config) << text;
    EXPECT_EQ(kind_of([&] { io::parse_json_text("{ m: 1", "x"); }), ErrorKind::config);
}

TEST(Io, RunConfigResolvesPathsAndSection) {
    auto rc = load_config("unfold_nonlinear.json");
    EXPECT_EQ(rc.command, "unfold-solve");
    EXPECT_TRUE(std::filesystem::exists(rc.spec_path));
    EXPECT_TRUE(rc.section.contains("cloud"));
    EXPECT_NO_THROW(rc.validate());
    rc.grid.n = 1024;
    EXPECT_EQ(kind_of([&] { rc.validate(); }), ErrorKind::config);
}

TEST(Io, NumbersRoundTrip) {
    for (double v : {0.1, -1.0 / 3, 1e-300, 6.02214076e23}) EXPECT_EQ(std::stod(io::num(v)), v);
    EXPECT_EQ(io::num(std::nan("")), "nan");
    io::Csv csv({"a", "b"});
    EXPECT_THROW(csv.row({"1"}), Error);
}

// ------------------------------------------------------------------ commands

TEST(Commands, RawSeriesSumMatchesGeometricSeries) {
    auto out = commands::run(load_config("borel_sum_series.json"));
    auto rows = csv_rows(file_of(out, "sum.csv"));
    ASSERT_EQ(rows.size(), 10u);
    EXPECT_EQ(rows[0][0], "re_x");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        double x = std::stod(rows[i][0]);
        EXPECT_NEAR(std::stod(rows[i][2]), (x / 2) / (1 - x / 2), 1e-12) << x;
        EXPECT_EQ(rows[i][4], "nan");
    }
}

TEST(Commands, EulerSumSatisfiesEquation) {
    auto out = commands::run(load_config("borel_sum_euler.json"));
    EXPECT_LT(out.manifest["max_residual"].get<double>(), 1e-8);
}

TEST(Commands, BorelSumNeedsZeroEps) {
    auto rc = load_config("borel_sum_euler.json");
    rc.s = 0.1;
    EXPECT_EQ(kind_of([&] { commands::run(rc); }), ErrorKind::config);
}

TEST(Commands, UnfoldSolveExactCheckAndDeterminism) {
    auto rc = load_config("unfold_linear.json");
    auto a = commands::run(rc);
    EXPECT_EQ(a.manifest["exact_check"], "pass");
    EXPECT_EQ(a.exit_code, 0);
    auto b = commands::run(rc);
    ASSERT_EQ(a.files.size(), b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) EXPECT_EQ(a.files[i].second, b.files[i].second) << a.files[i].first;
    auto cloud = csv_rows(file_of(a, "cloud.csv"));
    EXPECT_EQ(cloud[0].back(), "residual");
}

TEST(Commands, SpectrumOnDirectionIsDomainError) {
    EXPECT_EQ(kind_of([&] { commands::run(load_config("unfold_spectrum.json")); }), ErrorKind::domain);
}

TEST(Commands, UnknownCommandIsConfigError) {
    io::RunConfig rc;
    rc.command = "frobnicate";
    EXPECT_EQ(kind_of([&] { commands::run(rc); }), ErrorKind::config);
    EXPECT_EQ(commands::exit_code(ErrorKind::domain), 3);
    EXPECT_EQ(commands::exit_code(ErrorKind::convergence), 4);
}

// Along the + strip centre line x → x₀ = ±s, and u(x)/(x²-ε) → u'(x₀)/(2x₀) = 1/(2x₀-1) from the ODE.
// The constant is stable: the error shrinks in proportion to |x-x₀|.
TEST_F(Synthesis, VanishesLikeXSquaredMinusEps) {
    const auto& d = lin_->dirs[1];
    const double W = strip_width(d.alpha, s_);
    const cx e = std::exp(cx(0, -d.alpha));
    for (double sign : {1.0, -1.0}) {
        const cx x0 = sign * s_;
        const cx limit = 1.0 / (2.0 * x0 - 1.0);
        double prev_dist = 1e300;
        for (double u : {10.0, 20.0, 30.0, 40.0}) {
            cx t = e * cx(W / 2, sign * u);
            cx x = inverse_time(t, s_).x;
            double dist = std::abs(x - x0);
            EXPECT_LT(dist, prev_dist) << sign << " " << u;
            prev_dist = dist;
            cx ratio = solution_at_time(*lin_, 1, Side::plus, t)(0) / (x * x - s_ * s_);
            EXPECT_LT(std::abs(ratio - limit), 4.0 * dist) << sign << " " << u;
        }
        EXPECT_LT(prev_dist, 1e-2);
    }
}

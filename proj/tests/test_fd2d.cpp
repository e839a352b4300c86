#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "helmdd/fd2d.hpp"

using namespace helmdd;
using Catch::Approx;

namespace {

const PhysicalSetup ref = PhysicalSetup::from_aspect(9.5);

ExperimentConfig base_config(SymbolSpec spec, Scenario scenario, int ppw = 16) {
    ExperimentConfig cfg;
    cfg.spec = spec;
    cfg.scenario = scenario;
    cfg.setup = ref;
    cfg.points_per_wavelength = ppw;
    return cfg;
}

Eigen::VectorXcd random_trace(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(gauss(rng), gauss(rng));
    return v;
}

// coefficient of the given discrete sine mode in a trace block
Complex mode_component(const Eigen::VectorXcd& u, int m, const Grid2D& g) {
    const Eigen::VectorXcd mode = mode_vector(m, g);
    return mode.dot(u) / mode.squaredNorm();
}

// independent 1-D oracle for one transverse mode of the right subdomain:
// dense solve of the tridiagonal recurrence with the same boundary rows
// (ghost-closed interface Robin row, one-sided outer Robin row)
Eigen::VectorXcd oracle_mode_profile(Complex lam, Complex d, double st2, const Grid2D& g,
                                     bool outer_robin) {
    const int J = g.interface_index();
    const double dx = g.dx, k = g.setup.k;
    const double mu = k * k - st2;
    const int n = outer_robin ? J + 1 : J;  // unknowns f_0 .. f_{J or J-1}
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    M(0, 0) = 1.0 / dx - dx / 2.0 * mu + lam;
    M(0, 1) = -1.0 / dx;
    rhs(0) = d;
    for (int j = 1; j <= J - 1; ++j) {
        if (j - 1 < n) M(j, j - 1) += 1.0 / (dx * dx);
        M(j, j) += -2.0 / (dx * dx) + mu;
        if (j + 1 < n) M(j, j + 1) += 1.0 / (dx * dx);
    }
    if (outer_robin) {
        M(J, J) = 3.0 / (2.0 * dx) - jj * k;
        M(J, J - 1) = -4.0 / (2.0 * dx);
        M(J, J - 2) = 1.0 / (2.0 * dx);
    }
    return M.partialPivLu().solve(rhs);
}

}  // namespace

TEST_CASE("reference grid has the expected shape") {
    const Grid2D g = base_config(SymbolSpec::oo0(), Scenario::cavity).make_grid();
    REQUIRE(g.nx_half == 75);
    REQUIRE(g.ny == 75);
    REQUIRE(g.dx == Approx(ref.lambda_w / 16.0).epsilon(1e-15));
    REQUIRE(g.dy == Approx(ref.lambda_w / 16.0).epsilon(1e-15));
    REQUIRE_THROWS_AS(Grid2D::make(ref, 4), ConfigError);
}

TEST_CASE("waveguide cut-off count for the reference setup") {
    REQUIRE(propagating_mode_count(ref) == 9);
}

TEST_CASE("transmission action diagonalizes in the discrete sine basis") {
    const Grid2D g = base_config(SymbolSpec::oo0(), Scenario::cavity).make_grid();

    SECTION("tangential second difference has the closed-form eigenvalues") {
        for (int m : {1, 5, 33, 75}) {
            const Eigen::VectorXcd u = mode_vector(m, g);
            const Eigen::VectorXcd su = apply_tangential_laplacian(u, g);
            REQUIRE((su - g.stilde2(m) * u).norm() < 1e-10 * su.norm());
        }
    }
    SECTION("constant symbol") {
        const Eigen::VectorXcd u = mode_vector(3, g);
        const Eigen::VectorXcd tu = apply_transmission(u, SymbolSpec::oo0(), g);
        REQUIRE((tu - (-jj * ref.k) * u).norm() < 1e-12 * ref.k * u.norm());
    }
    SECTION("second-order symbol") {
        const SymbolSpec spec = SymbolSpec::oo2(Complex(0.77, -2.70), Complex(0.028, 0.021));
        for (int m : {1, 9, 40}) {
            const Eigen::VectorXcd u = mode_vector(m, g);
            const Complex expected = spec.a + spec.b * g.stilde2(m);
            const Eigen::VectorXcd tu = apply_transmission(u, spec, g);
            REQUIRE((tu - expected * u).norm() < 1e-12 * std::abs(expected) * u.norm());
        }
    }
    SECTION("rational square-root symbol matches the analytic evaluation") {
        const SymbolSpec spec = SymbolSpec::pade(4);
        for (int m : {1, 9, 10, 26, 60}) {
            const Eigen::VectorXcd u = mode_vector(m, g);
            const Complex expected = lambda_symbol(spec, std::sqrt(g.stilde2(m)), ref);
            const Eigen::VectorXcd tu = apply_transmission(u, spec, g);
            REQUIRE((tu - expected * u).norm() < 1e-10 * std::abs(expected) * u.norm());
        }
    }
    SECTION("transparent symbols act diagonally with their discrete values") {
        for (const auto& spec : {SymbolSpec::opt_open(), SymbolSpec::opt_close()}) {
            for (int m : {2, 11}) {
                const Eigen::VectorXcd u = mode_vector(m, g);
                const Complex expected = discrete_symbol_value(spec, g.stilde2(m), g);
                const Eigen::VectorXcd tu = apply_transmission(u, spec, g);
                REQUIRE((tu - expected * u).norm() < 1e-9 * std::abs(expected) * u.norm());
                if (spec.kind == SymbolKind::opt_open) {
                    // the half-space symbol tracks the analytic square root
                    // (the closed-cavity cotangent is pole-sensitive and has
                    // no such uniform bound at this resolution)
                    const Complex analytic =
                        lambda_symbol(spec, std::sqrt(g.stilde2(m)), ref);
                    REQUIRE(std::abs(expected - analytic) < 0.05 * std::abs(analytic));
                }
            }
        }
    }
    SECTION("subdomain-exact transmission annihilates cavity modes in one sweep") {
        const auto cfg = base_config(SymbolSpec::opt_close(), Scenario::cavity);
        const SchwarzSystem sys(cfg);
        Eigen::VectorXcd d = Eigen::VectorXcd::Zero(sys.dim());
        d.head(g.ny) = mode_vector(3, g) + 0.5 * mode_vector(12, g);
        REQUIRE(sys.apply_A(d).norm() < 1e-9 * d.norm());
    }
}

TEST_CASE("subdomain solves") {
    SECTION("fully homogeneous cavity subdomain is zero") {
        const auto cfg = base_config(SymbolSpec::oo0(), Scenario::cavity);
        const SubdomainProblem sub(Side::right, cfg);
        const Eigen::VectorXcd u = sub.solve(Eigen::VectorXcd::Zero(sub.grid().ny));
        REQUIRE(u.norm() == 0.0);
    }
    SECTION("single-mode injection matches the 1-D oracle, waveguide side") {
        const auto cfg = base_config(SymbolSpec::pade(4), Scenario::waveguide);
        const SubdomainProblem sub(Side::right, cfg);
        const Grid2D& g = sub.grid();
        const int m = 2;
        const Complex lam = lambda_symbol(cfg.spec, std::sqrt(g.stilde2(m)), ref);
        const Complex data(0.3, -1.1);
        const Eigen::VectorXcd u = sub.solve(data * mode_vector(m, g));
        const Eigen::VectorXcd f = oracle_mode_profile(lam, data, g.stilde2(m), g, true);
        double worst = 0.0;
        for (int j = 0; j <= g.interface_index(); ++j)
            for (int q = 1; q <= g.ny; ++q) {
                const Complex expected = f(j) * std::sin(m * pi * q / (g.ny + 1.0));
                worst = std::max(worst, std::abs(sub.value_at(u, j, q, false) - expected));
            }
        REQUIRE(worst < 1e-10 * f.cwiseAbs().maxCoeff());
    }
    SECTION("evanescent mode decays cell by cell at the analytic rate") {
        const auto cfg = base_config(SymbolSpec::oo0(), Scenario::cavity);
        const SubdomainProblem sub(Side::left, cfg);
        const Grid2D& g = sub.grid();
        const int m = 14;
        const double s = m * pi / ref.h;
        const double rate = std::exp(-std::sqrt(s * s - ref.k * ref.k) * g.dx);
        const Eigen::VectorXcd u = sub.solve(mode_vector(m, g));
        const int J = g.interface_index();
        const int q_mid = g.ny / 2;
        for (int j = J; j >= J - 20; --j) {
            const Complex a = sub.value_at(u, j, q_mid, false);
            const Complex b = sub.value_at(u, j - 1, q_mid, false);
            REQUIRE(std::abs(b / a) == Approx(rate).epsilon(0.05));
        }
    }
}

TEST_CASE("fixed-point operator") {
    SECTION("zero trace maps to zero") {
        const SchwarzSystem sys(base_config(SymbolSpec::emda(0.25), Scenario::cavity));
        REQUIRE(sys.apply_A(Eigen::VectorXcd::Zero(sys.dim())).norm() == 0.0);
    }
    SECTION("linearity under random complex combinations") {
        const SchwarzSystem sys(base_config(SymbolSpec::pade(4), Scenario::waveguide));
        const Eigen::VectorXcd d1 = random_trace(sys.dim(), 11);
        const Eigen::VectorXcd d2 = random_trace(sys.dim(), 22);
        std::mt19937 rng(33);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const Complex al(gauss(rng), gauss(rng)), be(gauss(rng), gauss(rng));
        const Eigen::VectorXcd lhs = sys.apply_A(al * d1 + be * d2);
        const Eigen::VectorXcd rhs = al * sys.apply_A(d1) + be * sys.apply_A(d2);
        REQUIRE((lhs - rhs).norm() <= 1e-12 * std::max(lhs.norm(), rhs.norm()));
    }
    SECTION("two applications scale a mode impulse by the discrete radius product") {
        struct Case { SymbolSpec spec; Scenario scenario; };
        const Case cases[] = {
            {SymbolSpec::oo0(), Scenario::cavity},
            {SymbolSpec::pade(4), Scenario::cavity},
            {SymbolSpec::pade(4), Scenario::waveguide},
            {SymbolSpec::emda(0.25), Scenario::waveguide},
        };
        for (const auto& c : cases) {
            const auto cfg = base_config(c.spec, c.scenario);
            const SchwarzSystem sys(cfg);
            const Grid2D& g = sys.left().grid();
            for (int m : {1, 4, 9, 10, 25}) {
                Eigen::VectorXcd d = Eigen::VectorXcd::Zero(sys.dim());
                d.head(g.ny) = mode_vector(m, g);
                const Eigen::VectorXcd d2 = sys.apply_A(sys.apply_A(d));
                const Complex measured = mode_component(d2.head(g.ny), m, g);
                const auto [r0, r1] = discrete_mode_radius(m, cfg);
                const Complex predicted = r0 * r1;
                REQUIRE(std::abs(measured - predicted)
                        <= 1e-8 * std::max(1.0, std::abs(predicted)));
                // the off-mode leakage stays at rounding level
                Eigen::VectorXcd residual = d2.head(g.ny) - measured * mode_vector(m, g);
                REQUIRE(residual.norm() < 1e-9 * std::max(1.0, std::abs(measured)));
            }
        }
    }
    SECTION("stagnating operator keeps unit modulus on cavity modes") {
        const auto cfg = base_config(SymbolSpec::oo0(), Scenario::cavity);
        const SchwarzSystem sys(cfg);
        const Grid2D& g = sys.left().grid();
        for (int m : {1, 5, 9}) {
            Eigen::VectorXcd d = Eigen::VectorXcd::Zero(sys.dim());
            d.head(g.ny) = mode_vector(m, g);
            const Eigen::VectorXcd d2 = sys.apply_A(sys.apply_A(d));
            const double ratio = std::abs(mode_component(d2.head(g.ny), m, g));
            REQUIRE(std::sqrt(ratio) == Approx(1.0).margin(3e-2));
        }
    }
    SECTION("square-root operator reproduces the evanescent decay law, waveguide") {
        // one application: the side-1 block receives rho~_0 * mode, and for
        // the exact square-root symbol |rho~_0| is the subdomain decay
        // factor.  (The two-application signal of any strongly evanescent
        // mode sits below the roundoff floor of the direct solves.)
        const auto cfg = base_config(SymbolSpec::opt_open(), Scenario::waveguide);
        const SchwarzSystem sys(cfg);
        const Grid2D& g = sys.left().grid();
        const int m = 10;  // first evanescent mode: decay still representable
        Eigen::VectorXcd d = Eigen::VectorXcd::Zero(sys.dim());
        d.head(g.ny) = mode_vector(m, g);
        const Eigen::VectorXcd ad = sys.apply_A(d);
        const double per_app = std::abs(mode_component(ad.tail(g.ny), m, g));
        const double law = std::exp(-ref.ell * std::sqrt(g.stilde2(m) - ref.k * ref.k));
        REQUIRE(per_app == Approx(law).epsilon(0.10));
    }
}

TEST_CASE("right-hand side construction") {
    SECTION("no source modes gives a zero right-hand side") {
        auto cfg = base_config(SymbolSpec::oo0(), Scenario::cavity);
        cfg.n_source_modes = 0;
        const SchwarzSystem sys(cfg);
        REQUIRE(sys.rhs().norm() == 0.0);
    }
    SECTION("source energy lands in exactly the driven modes") {
        const auto cfg = base_config(SymbolSpec::pade(4), Scenario::cavity);
        const SchwarzSystem sys(cfg);
        const Grid2D& g = sys.left().grid();
        // the block fed by the left (source-wall) subdomain solve
        const Eigen::VectorXcd from_left = sys.rhs().tail(g.ny);
        const Eigen::VectorXcd coef = dst_coefficients(from_left, g);
        double driven_floor = std::numeric_limits<double>::infinity();
        double leak_ceiling = 0.0;
        for (int m = 1; m <= g.ny; ++m) {
            const double mag = std::abs(coef(m - 1));
            if (m <= cfg.n_source_modes) driven_floor = std::min(driven_floor, mag);
            else leak_ceiling = std::max(leak_ceiling, mag);
        }
        REQUIRE(driven_floor > 0.0);
        REQUIRE(leak_ceiling < 1e-8 * driven_floor);
    }
    SECTION("single-mode source is collinear with the mode profile") {
        auto cfg = base_config(SymbolSpec::oo0(), Scenario::waveguide);
        cfg.n_source_modes = 1;
        const SchwarzSystem sys(cfg);
        const Grid2D& g = sys.left().grid();
        const Eigen::VectorXcd from_left = sys.rhs().tail(g.ny);
        const Complex c = mode_component(from_left, 1, g);
        REQUIRE((from_left - c * mode_vector(1, g)).norm() < 1e-6 * from_left.norm());
    }
    SECTION("literal outer data only changes the right-hand side") {
        auto cfg = base_config(SymbolSpec::oo0(), Scenario::waveguide);
        const SchwarzSystem plain(cfg);
        cfg.gamma_inf_literal = true;
        const SchwarzSystem literal(cfg);
        const Eigen::VectorXcd d = random_trace(plain.dim(), 5);
        REQUIRE((plain.apply_A(d) - literal.apply_A(d)).norm() == 0.0);
        REQUIRE((plain.rhs() - literal.rhs()).norm() > 0.0);
    }
}

TEST_CASE("solution reconstruction and the single-domain reference") {
    SECTION("zero source reconstructs the zero field") {
        auto cfg = base_config(SymbolSpec::oo0(), Scenario::cavity);
        cfg.n_source_modes = 0;
        const SchwarzSystem sys(cfg);
        const auto field = reconstruct_solution(Eigen::VectorXcd::Zero(sys.dim()), sys);
        REQUIRE(field.values.norm() == 0.0);
    }
    SECTION("converged interface data reproduces the direct solve, cavity") {
        auto cfg = base_config(SymbolSpec::pade(4), Scenario::cavity);
        cfg.n_source_modes = 1;
        cfg.gmres_tol = 1e-9;
        const SchwarzSystem sys(cfg);
        const auto trace = sys.solve();
        REQUIRE(trace.converged);
        const auto ddm = reconstruct_solution(trace.solution, sys);
        const auto mono = monodomain_solve(cfg);
        REQUIRE(relative_l2_error(ddm, mono) < 1e-8);
        REQUIRE(ddm.interface_jump_p < 1e-7);
    }
    SECTION("converged interface data reproduces the direct solve, waveguide") {
        auto cfg = base_config(SymbolSpec::pade(4), Scenario::waveguide);
        cfg.gmres_tol = 1e-8;
        const SchwarzSystem sys(cfg);
        const auto trace = sys.solve();
        REQUIRE(trace.converged);
        const auto ddm = reconstruct_solution(trace.solution, sys);
        const auto mono = monodomain_solve(cfg);
        REQUIRE(relative_l2_error(ddm, mono) < 1e-7);
    }
}

TEST_CASE("direct solve converges to the continuous waveguide solution") {
    // mode-1 waveguide with the zeroth-order absorbing wall: closed form
    // f(x) = A exp(+j w x) + B exp(-j w x) with f(-ell/2) = 1 and
    // f' = j k f at +ell/2
    const double w = std::sqrt(ref.k * ref.k - std::pow(pi / ref.h, 2));
    const Complex eL = std::exp(jj * w * ref.ell / 2.0);
    const Complex ratio = (w - ref.k) / (w + ref.k) * eL * eL;
    const Complex A = 1.0 / (1.0 / eL + ratio * eL);
    auto continuous = [&](double x, double y) {
        const Complex f = A * (std::exp(jj * w * x) + ratio * std::exp(-jj * w * x));
        return f * std::sin(pi * y / ref.h);
    };
    double err[2];
    int idx = 0;
    for (int ppw : {16, 32}) {
        auto cfg = base_config(SymbolSpec::oo0(), Scenario::waveguide, ppw);
        cfg.n_source_modes = 1;
        const auto mono = monodomain_solve(cfg);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < mono.x.size(); ++i)
            for (std::size_t q = 0; q < mono.y.size(); ++q) {
                const Complex exact = continuous(mono.x[i], mono.y[q]);
                num += std::norm(mono.values(static_cast<int>(i), static_cast<int>(q)) - exact);
                den += std::norm(exact);
            }
        err[idx++] = std::sqrt(num / den);
    }
    REQUIRE(err[1] < err[0]);
    REQUIRE(err[0] / err[1] == Approx(4.0).margin(1.0));  // second-order scheme
}

TEST_CASE("discrete transparent symbol closed form") {
    const Grid2D g = base_config(SymbolSpec::oo0(), Scenario::cavity).make_grid();
    for (int m : {1, 3, 9, 10, 30}) {
        const double st2 = g.stilde2(m);
        for (auto outer : {OuterCondition::dirichlet, OuterCondition::robin}) {
            // independent oracle: pin the interface value of the homogeneous
            // recurrence to one by a dense solve, then form the ghost-row
            // response (1 - f_adjacent)/dx - (dx/2)*mu
            const int J = g.interface_index();
            const double mu = ref.k * ref.k - st2;
            const int n = outer == OuterCondition::robin ? J + 1 : J;
            Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
            Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
            M(0, 0) = 1.0;
            rhs(0) = 1.0;
            for (int j = 1; j <= J - 1; ++j) {
                if (j - 1 < n) M(j, j - 1) += 1.0 / (g.dx * g.dx);
                M(j, j) += -2.0 / (g.dx * g.dx) + mu;
                if (j + 1 < n) M(j, j + 1) += 1.0 / (g.dx * g.dx);
            }
            if (outer == OuterCondition::robin) {
                M(J, J) = 3.0 / (2.0 * g.dx) - jj * ref.k;
                M(J, J - 1) = -4.0 / (2.0 * g.dx);
                M(J, J - 2) = 1.0 / (2.0 * g.dx);
            }
            const Eigen::VectorXcd f = M.partialPivLu().solve(rhs);
            const Complex oracle = (1.0 - f(1)) / g.dx - g.dx / 2.0 * mu;
            const Complex closed = discrete_lambda_opt(st2, g, outer);
            REQUIRE(std::abs(closed - oracle) < 1e-8 * std::max(1.0, std::abs(oracle)));
        }
    }
}

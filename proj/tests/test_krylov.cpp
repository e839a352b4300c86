#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "helmdd/modal.hpp"

using namespace helmdd;
using Catch::Approx;

namespace {

const PhysicalSetup ref = PhysicalSetup::from_aspect(9.5);

Eigen::VectorXcd random_vector(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(gauss(rng), gauss(rng));
    return v;
}

Eigen::MatrixXcd random_matrix(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = Complex(gauss(rng), gauss(rng));
    // push the spectrum away from zero so plain GMRES has an easy time
    M += 4.0 * std::sqrt(static_cast<double>(n)) * Eigen::MatrixXcd::Identity(n, n);
    return M;
}

std::vector<Complex> reference_radii(const SymbolSpec& spec, int n_modes) {
    std::vector<FourierMode> modes;
    for (int m = 1; m <= n_modes; ++m) modes.push_back(make_mode(m, ref));
    return modal_radii(spec, modes, ref);
}

}  // namespace

TEST_CASE("gmres on the identity") {
    const Eigen::VectorXcd b = random_vector(12, 7);
    const auto trace = gmres([](const Eigen::VectorXcd& v) { return v; }, b, 1e-10);
    REQUIRE(trace.converged);
    REQUIRE(trace.iterations == 1);
    REQUIRE((trace.solution - b).norm() < 1e-12 * b.norm());
}

TEST_CASE("gmres with a zero right-hand side") {
    const Eigen::VectorXcd b = Eigen::VectorXcd::Zero(8);
    const auto trace = gmres([](const Eigen::VectorXcd& v) { return v; }, b);
    REQUIRE(trace.converged);
    REQUIRE(trace.iterations == 0);
    REQUIRE(trace.solution.norm() == 0.0);
}

TEST_CASE("gmres stagnates on the stagnating cavity operator") {
    const auto rhos = reference_radii(SymbolSpec::oo0(), 50);
    const auto apply = [&](const Eigen::VectorXcd& v) {
        return (v - modal_apply_A(rhos, v)).eval();
    };
    const Eigen::VectorXcd b = random_vector(100, 12345);
    const auto trace = gmres(apply, b, 1e-10, 100);
    const int n_prop = propagating_mode_count(ref);
    for (int it = 0; it <= 2 * n_prop; ++it)
        REQUIRE(trace.residuals[it] > 1e-2);
}

TEST_CASE("gmres agrees with a dense direct solve") {
    const int n = 40;
    const Eigen::MatrixXcd M = random_matrix(n, 99);
    const Eigen::VectorXcd b = random_vector(n, 100);
    const auto trace = gmres([&](const Eigen::VectorXcd& v) { return (M * v).eval(); },
                             b, 1e-14, n);
    const Eigen::VectorXcd direct = M.partialPivLu().solve(b);
    REQUIRE((trace.solution - direct).norm() < 1e-10 * direct.norm());

    SECTION("reported residual certifies the solution") {
        const double true_resid = (M * trace.solution - b).norm() / b.norm();
        REQUIRE(true_resid <= trace.residuals.back() * (1.0 + 1e-10) + 1e-14);
    }
    SECTION("residual history is monotone") {
        for (std::size_t i = 1; i < trace.residuals.size(); ++i)
            REQUIRE(trace.residuals[i] <= trace.residuals[i - 1] + 1e-14);
    }
}

TEST_CASE("dense assembly of matrix-free operators") {
    SECTION("identity") {
        const auto M = assemble_dense([](const Eigen::VectorXcd& v) { return v; }, 6);
        REQUIRE((M - Eigen::MatrixXcd::Identity(6, 6)).norm() == 0.0);
    }
    SECTION("two-mode fixed-point operator is block-antidiagonal") {
        const auto rhos = reference_radii(SymbolSpec::emda(0.25), 2);
        const auto M = assemble_dense(
            [&](const Eigen::VectorXcd& v) { return modal_apply_A(rhos, v); }, 4);
        REQUIRE(M(0, 2) == rhos[0]);
        REQUIRE(M(1, 3) == rhos[1]);
        REQUIRE(M(2, 0) == rhos[0]);
        REQUIRE(M(3, 1) == rhos[1]);
        REQUIRE(std::abs(M(0, 0)) + std::abs(M(1, 1)) + std::abs(M(0, 1)) == 0.0);
    }
    SECTION("assembled matrix reproduces the operator on random probes") {
        const auto rhos = reference_radii(SymbolSpec::pade(4), 20);
        const auto apply = [&](const Eigen::VectorXcd& v) {
            return (v - modal_apply_A(rhos, v)).eval();
        };
        const auto M = assemble_dense(apply, 40);
        for (unsigned seed = 1; seed <= 5; ++seed) {
            const Eigen::VectorXcd v = random_vector(40, seed);
            REQUIRE((M * v - apply(v)).norm() < 1e-12 * v.norm());
        }
    }
    SECTION("dimension guard") {
        REQUIRE_THROWS_AS(
            assemble_dense([](const Eigen::VectorXcd& v) { return v; }, 5001),
            DimensionGuardError);
    }
}

TEST_CASE("dense spectra") {
    SECTION("identity matrix") {
        const auto rep = spectrum(Eigen::MatrixXcd::Identity(5, 5));
        for (const Complex mu : rep.eigenvalues) REQUIRE(std::abs(mu - 1.0) < 1e-14);
    }
    SECTION("stagnating cavity operator: everything on the circle") {
        const auto rhos = reference_radii(SymbolSpec::oo0(), 30);
        const auto M = assemble_dense(
            [&](const Eigen::VectorXcd& v) { return (v - modal_apply_A(rhos, v)).eval(); }, 60);
        const auto rep = spectrum(M);
        for (double d : rep.unit_circle_distances) REQUIRE(d < 1e-10);
    }
    SECTION("damped operator pushes eigenvalues off the circle") {
        const auto rhos = reference_radii(SymbolSpec::emda(0.25), 50);
        const auto M = assemble_dense(
            [&](const Eigen::VectorXcd& v) { return (v - modal_apply_A(rhos, v)).eval(); }, 100);
        const auto rep = spectrum(M);
        int outside = 0;
        for (const Complex mu : rep.eigenvalues) outside += std::abs(1.0 - mu) > 1.0 + 1e-8;
        REQUIRE(outside >= 1);
    }
    SECTION("backward error of sampled eigenpairs under inverse iteration") {
        const Eigen::MatrixXcd M = random_matrix(30, 4242);
        const auto rep = spectrum(M);
        const double mnorm = M.norm();
        for (int pick = 0; pick < 10; ++pick) {
            const Complex mu = rep.eigenvalues[pick * 3 % rep.dim];
            // a couple of inverse-iteration sweeps recover the eigenvector
            const Complex shift = mu + Complex(1e-9, 1e-9);
            const Eigen::MatrixXcd S =
                M - shift * Eigen::MatrixXcd::Identity(rep.dim, rep.dim);
            const auto lu = S.partialPivLu();
            Eigen::VectorXcd v = random_vector(rep.dim, 777 + pick);
            v.normalize();
            for (int sweep = 0; sweep < 3; ++sweep) {
                v = lu.solve(v);
                v.normalize();
            }
            REQUIRE((M * v - mu * v).norm() / mnorm < 1e-8);
        }
    }
}

TEST_CASE("spectrum of the assembled modal operator matches the analytic pairs") {
    for (const auto& spec : {SymbolSpec::oo0(), SymbolSpec::emda(0.25), SymbolSpec::pade(4)}) {
        const int n_modes = 30;
        const auto rhos = reference_radii(spec, n_modes);
        const auto M = assemble_dense(
            [&](const Eigen::VectorXcd& v) { return (v - modal_apply_A(rhos, v)).eval(); },
            2 * n_modes);
        const auto dense = spectrum(M);

        std::vector<Complex> expected;
        for (const Complex r : rhos) {
            expected.push_back(1.0 - r);
            expected.push_back(1.0 + r);
        }
        std::vector<bool> used(expected.size(), false);
        double worst = 0.0;
        for (const Complex mu : dense.eigenvalues) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_i = 0;
            for (std::size_t i = 0; i < expected.size(); ++i) {
                if (used[i]) continue;
                const double d = std::abs(mu - expected[i]);
                if (d < best) { best = d; best_i = i; }
            }
            used[best_i] = true;
            worst = std::max(worst, best);
        }
        REQUIRE(worst < 1e-9);
    }
}

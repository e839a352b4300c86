#ifndef HELMDD_KRYLOV_HPP
#define HELMDD_KRYLOV_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <functional>
#include <vector>

#include "helmdd/core.hpp"

namespace helmdd {

/**
 * Result of a GMRES run: relative residual per iteration (residuals[0] = 1,
 * nonincreasing), iteration count, convergence flag and the solution.
 */
struct GmresTrace {
    std::vector<double> residuals;
    int iterations = 0;
    bool converged = false;
    Eigen::VectorXcd solution;
};

/**
 * Full (no restart) GMRES on a matrix-free operator.  Arnoldi with modified
 * Gram-Schmidt plus one reorthogonalization pass when the loss of
 * orthogonality exceeds 1e-8, Givens-rotation least squares.  Stops when the
 * relative residual drops below `tol` or after `maxit` iterations; `maxit`
 * of zero (or anything above the operator dimension) means the dimension.
 */
template <class Op>
GmresTrace gmres(Op&& apply, const Eigen::VectorXcd& b, double tol = 1e-6, int maxit = 0) {
    if (!(tol > 0.0)) throw ConfigError("gmres: tolerance must be positive");
    const int dim = static_cast<int>(b.size());
    if (maxit <= 0 || maxit > dim) maxit = dim;

    GmresTrace trace;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        trace.residuals = {0.0};
        trace.converged = true;
        trace.solution = Eigen::VectorXcd::Zero(dim);
        return trace;
    }
    trace.residuals.push_back(1.0);

    Eigen::MatrixXcd V(dim, maxit + 1);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(maxit + 1, maxit);
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(maxit + 1);
    std::vector<double> cs(maxit);
    std::vector<Complex> sn(maxit);

    V.col(0) = b / bnorm;
    g(0) = bnorm;

    int j = 0;
    bool happy = false;
    for (; j < maxit; ++j) {
        Eigen::VectorXcd w = apply(V.col(j));
        const double wnorm_before = w.norm();
        for (int i = 0; i <= j; ++i) {
            H(i, j) = V.col(i).dot(w);  // conjugated dot
            w -= H(i, j) * V.col(i);
        }
        // selective reorthogonalization
        double drift = 0.0;
        Eigen::VectorXcd corr(j + 1);
        for (int i = 0; i <= j; ++i) {
            corr(i) = V.col(i).dot(w);
            drift = std::max(drift, std::abs(corr(i)));
        }
        if (drift > 1e-8 * wnorm_before) {
            for (int i = 0; i <= j; ++i) {
                H(i, j) += corr(i);
                w -= corr(i) * V.col(i);
            }
        }
        const double hlast = w.norm();
        H(j + 1, j) = hlast;

        for (int i = 0; i < j; ++i) {
            const Complex t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
            H(i + 1, j) = -std::conj(sn[i]) * H(i, j) + cs[i] * H(i + 1, j);
            H(i, j) = t;
        }
        const double h1 = std::abs(H(j, j)), h2 = std::abs(H(j + 1, j));
        const double r = std::hypot(h1, h2);
        if (r == 0.0) { cs[j] = 1.0; sn[j] = Complex(0.0, 0.0); }
        else if (h1 == 0.0) { cs[j] = 0.0; sn[j] = std::conj(H(j + 1, j)) / r; }
        else {
            cs[j] = h1 / r;
            sn[j] = (H(j, j) / h1) * std::conj(H(j + 1, j)) / r;
        }
        const Complex t = cs[j] * H(j, j) + sn[j] * H(j + 1, j);
        H(j, j) = t;
        H(j + 1, j) = Complex(0.0, 0.0);
        g(j + 1) = -std::conj(sn[j]) * g(j);
        g(j) *= cs[j];

        const double rel = std::abs(g(j + 1)) / bnorm;
        trace.residuals.push_back(rel);

        if (hlast <= 1e-14 * bnorm) {
            // happy breakdown: the Krylov space is invariant, the residual
            // must be (numerically) zero as well
            if (rel > 1e-11)
                throw BreakdownError("gmres: invariant subspace reached with nonzero residual");
            happy = true;
            ++j;
            break;
        }
        V.col(j + 1) = w / hlast;
        if (rel < tol) { ++j; break; }
    }

    trace.iterations = j;
    trace.converged = happy || trace.residuals.back() < tol;

    // back substitution on the rotated Hessenberg system
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(j);
    for (int i = j - 1; i >= 0; --i) {
        Complex acc = g(i);
        for (int l = i + 1; l < j; ++l) acc -= H(i, l) * y(l);
        y(i) = acc / H(i, i);
    }
    trace.solution = V.leftCols(j) * y;
    return trace;
}

/**
 * Materializes a matrix-free operator column by column.  Guarded against
 * accidental large dimensions; desk-scale spectra only.
 */
template <class Op>
Eigen::MatrixXcd assemble_dense(Op&& apply, int dim) {
    if (dim > 5000)
        throw DimensionGuardError("assemble_dense: dimension exceeds the 5000 guard");
    Eigen::MatrixXcd M(dim, dim);
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    for (int c = 0; c < dim; ++c) {
        e(c) = Complex(1.0, 0.0);
        M.col(c) = apply(e);
        e(c) = Complex(0.0, 0.0);
    }
    return M;
}

/**
 * Eigenvalues of an iteration operator I - A together with the distance of
 * each eigenvalue from the circle of radius 1 centred at 1 (equivalently,
 * how far the corresponding eigenvalue of A sits from the unit circle).
 * `mode_index` is filled by the per-mode analytic construction and left
 * empty by the dense path.
 */
struct SpectrumReport {
    std::vector<Complex> eigenvalues;
    int dim = 0;
    std::vector<double> unit_circle_distances;
    std::vector<int> mode_index;

    int count_on_circle(double tol) const {
        int n = 0;
        for (double d : unit_circle_distances) n += d <= tol;
        return n;
    }
    int count_outside_circle(double tol) const {
        int n = 0;
        for (std::size_t i = 0; i < eigenvalues.size(); ++i)
            n += unit_circle_distances[i] > tol && std::abs(1.0 - eigenvalues[i]) > 1.0;
        return n;
    }
    int count_inside_circle(double tol) const {
        return dim - count_on_circle(tol) - count_outside_circle(tol);
    }
};

/// Dense nonsymmetric eigensolve (Schur-based) of a square complex matrix.
inline SpectrumReport spectrum(const Eigen::MatrixXcd& matrix) {
    if (matrix.rows() != matrix.cols())
        throw ConfigError("spectrum: matrix must be square");
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(matrix, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw NonConvergenceError("spectrum: eigensolver did not converge");
    SpectrumReport rep;
    rep.dim = static_cast<int>(matrix.rows());
    for (int i = 0; i < rep.dim; ++i) {
        const Complex mu = solver.eigenvalues()(i);
        rep.eigenvalues.push_back(mu);
        rep.unit_circle_distances.push_back(std::abs(std::abs(1.0 - mu) - 1.0));
    }
    return rep;
}

/// Eigenvectors variant of `spectrum` for exporting interface eigenmodes.
inline std::pair<SpectrumReport, Eigen::MatrixXcd> spectrum_with_vectors(
    const Eigen::MatrixXcd& matrix) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(matrix, true);
    if (solver.info() != Eigen::Success)
        throw NonConvergenceError("spectrum: eigensolver did not converge");
    SpectrumReport rep;
    rep.dim = static_cast<int>(matrix.rows());
    for (int i = 0; i < rep.dim; ++i) {
        const Complex mu = solver.eigenvalues()(i);
        rep.eigenvalues.push_back(mu);
        rep.unit_circle_distances.push_back(std::abs(std::abs(1.0 - mu) - 1.0));
    }
    return {rep, solver.eigenvectors()};
}

}  // namespace helmdd

#endif

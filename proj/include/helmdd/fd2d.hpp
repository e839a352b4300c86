#ifndef HELMDD_FD2D_HPP
#define HELMDD_FD2D_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>
#include <vector>

#include "helmdd/krylov.hpp"
#include "helmdd/symbols.hpp"

namespace helmdd {

enum class Scenario { cavity, waveguide };

inline const char* to_string(Scenario s) {
    return s == Scenario::cavity ? "cavity" : "waveguide";
}

/**
 * Tensor grid of one half-domain: nx_half interior points per subdomain in
 * x (the interface column is an extra unknown column), ny interior points
 * in y, dx = (ell/2)/(nx_half+1) and dy = h/(ny+1).
 */
struct Grid2D {
    int nx_half = 0;
    int ny = 0;
    double dx = 0.0;
    double dy = 0.0;
    PhysicalSetup setup;

    static Grid2D make(const PhysicalSetup& setup, int points_per_wavelength) {
        if (points_per_wavelength < 8)
            throw ConfigError("Grid2D: need at least 8 points per wavelength");
        Grid2D g;
        g.setup = setup;
        const double target = setup.lambda_w / points_per_wavelength;
        g.nx_half = static_cast<int>(std::round(setup.ell / 2.0 / target)) - 1;
        g.ny = static_cast<int>(std::round(setup.h / target)) - 1;
        if (g.nx_half < 3 || g.ny < 3) throw ConfigError("Grid2D: grid too coarse");
        g.dx = setup.ell / 2.0 / (g.nx_half + 1);
        g.dy = setup.h / (g.ny + 1);
        if (setup.lambda_w / g.dx < 8.0 || setup.lambda_w / g.dy < 8.0)
            throw ConfigError("Grid2D: resolution below 8 points per wavelength");
        return g;
    }

    /// Number of x-intervals per subdomain; the interface column index.
    int interface_index() const { return nx_half + 1; }

    /// Eigenvalue of the positive tangential second difference on discrete
    /// sine mode m: (2/dy^2) * (1 - cos(m*pi*dy/h)).
    double stilde2(int m) const {
        return 2.0 / (dy * dy) * (1.0 - std::cos(m * pi * dy / setup.h));
    }
};

/// Discrete sine mode m sampled on the interface nodes y_q = q*dy.
inline Eigen::VectorXcd mode_vector(int m, const Grid2D& grid) {
    Eigen::VectorXcd v(grid.ny);
    for (int q = 1; q <= grid.ny; ++q)
        v(q - 1) = std::sin(m * pi * q / (grid.ny + 1.0));
    return v;
}

/// Coefficients of u in the discrete sine basis (orthogonal on the grid).
inline Eigen::VectorXcd dst_coefficients(const Eigen::VectorXcd& u, const Grid2D& grid) {
    const int n = grid.ny;
    Eigen::VectorXcd c(n);
    for (int m = 1; m <= n; ++m) {
        Complex acc(0.0, 0.0);
        for (int q = 1; q <= n; ++q)
            acc += u(q - 1) * std::sin(m * pi * q / (n + 1.0));
        c(m - 1) = 2.0 / (n + 1.0) * acc;
    }
    return c;
}

/// Thomas solve of a tridiagonal system; `lower`/`upper` have size n-1.
inline Eigen::VectorXcd solve_tridiagonal(Eigen::VectorXcd diag,
                                          const Eigen::VectorXcd& lower,
                                          const Eigen::VectorXcd& upper,
                                          Eigen::VectorXcd rhs) {
    const int n = static_cast<int>(diag.size());
    for (int i = 1; i < n; ++i) {
        if (std::abs(diag(i - 1)) < 1e-14)
            throw TridiagonalSingular("solve_tridiagonal: pivot below 1e-14");
        const Complex w = lower(i - 1) / diag(i - 1);
        diag(i) -= w * upper(i - 1);
        rhs(i) -= w * rhs(i - 1);
    }
    if (std::abs(diag(n - 1)) < 1e-14)
        throw TridiagonalSingular("solve_tridiagonal: pivot below 1e-14");
    Eigen::VectorXcd x(n);
    x(n - 1) = rhs(n - 1) / diag(n - 1);
    for (int i = n - 2; i >= 0; --i)
        x(i) = (rhs(i) - upper(i) * x(i + 1)) / diag(i);
    return x;
}

/**
 * Transparent symbol of the discrete half-space: the ghost-row response of
 * the outgoing/decaying characteristic root of the interior recurrence,
 *   lambda~_inf(s~) = (1 - q)/dx - (dx/2)*(k^2 - s~^2),
 * the discrete counterpart of lambda_opt_open (it tends to -j*sqrt(k^2-s^2)
 * and +sqrt(s^2-k^2) as the grid refines).
 */
inline Complex discrete_lambda_half_space(double stilde2, const Grid2D& grid) {
    const double dx = grid.dx;
    const double mu = grid.setup.k * grid.setup.k - stilde2;
    const Complex c(2.0 - dx * dx * mu, 0.0);
    const Complex root = std::sqrt(c * c - 4.0);
    Complex q = (c - root) / 2.0;
    if (std::abs(q) > 1.0 + 1e-14) q = (c + root) / 2.0;
    if (std::abs(std::abs(q) - 1.0) < 1e-14 && q.imag() < 0.0)
        q = std::conj(q);  // propagating: pick the outgoing branch
    return (1.0 - q) / dx - dx / 2.0 * mu;
}

enum class OuterCondition { dirichlet, robin };

/**
 * Exact transparent symbol of the discrete subdomain: with the ghost-cell
 * interface row, the response of a unit interface value of the homogeneous
 * per-mode recurrence (decaying towards the outer condition) is
 *   lambda~(s~) = (1 - p_adjacent/p_interface)/dx - (dx/2)*(k^2 - s~^2),
 * the discrete analogue of lambda_opt_close (Dirichlet outer) and of the
 * half-guide response (Robin outer).
 */
inline Complex discrete_lambda_opt(double stilde2, const Grid2D& grid, OuterCondition outer) {
    const double k = grid.setup.k, dx = grid.dx;
    const int J = grid.interface_index();
    const double mu = k * k - stilde2;
    const Complex c(2.0 - dx * dx * mu, 0.0);
    Complex r = (c + std::sqrt(c * c - 4.0)) / 2.0;
    if (std::abs(r) < 1.0) r = (c - std::sqrt(c * c - 4.0)) / 2.0;
    const Complex q = 1.0 / r;

    auto ipow = [](Complex base, int e) {
        Complex acc(1.0, 0.0);
        for (int i = 0; i < e; ++i) acc *= base;
        return acc;
    };
    Complex ratio;  // adjacent over interface value of the homogeneous solution
    if (outer == OuterCondition::dirichlet) {
        const Complex den = 1.0 - ipow(q, 2 * J);
        if (std::abs(den) < 1e-300)
            throw DegenerateError("discrete_lambda_opt: interface value vanished");
        ratio = q * (1.0 - ipow(q, 2 * (J - 1))) / den;
    } else {
        // outer one-sided Robin row d/dx p - j*k*p = 0 fixes the mix of the
        // two characteristic branches
        const Complex gcoef = 3.0 / (2.0 * dx) - jj * k;
        const Complex b1 = gcoef * q * q - (2.0 / dx) * q + 1.0 / (2.0 * dx);
        const Complex b2 = gcoef - (2.0 / dx) * q + (1.0 / (2.0 * dx)) * q * q;
        const Complex c2 = -b1 / (b2 * q * q);
        const Complex den = 1.0 + c2 * ipow(q, 2 * J);
        if (std::abs(den) < 1e-300)
            throw DegenerateError("discrete_lambda_opt: interface value vanished");
        ratio = (q + c2 * ipow(q, 2 * J - 1)) / den;
    }
    return (1.0 - ratio) / dx - dx / 2.0 * mu;
}

/// Positive tangential second difference with homogeneous Dirichlet ends
/// (the interface endpoints sit on the p = 0 wall).
inline Eigen::VectorXcd apply_tangential_laplacian(const Eigen::VectorXcd& u,
                                                   const Grid2D& grid) {
    const int n = grid.ny;
    const double c = 1.0 / (grid.dy * grid.dy);
    Eigen::VectorXcd out(n);
    for (int q = 0; q < n; ++q) {
        Complex acc = 2.0 * u(q);
        if (q > 0) acc -= u(q - 1);
        if (q + 1 < n) acc -= u(q + 1);
        out(q) = c * acc;
    }
    return out;
}

/**
 * Action of the transmission operator on an interface trace block.
 *
 * oo0/emda multiply by the constant symbol; oo2 acts as a + b*(tangential
 * second difference); the rational square-root family eliminates one
 * auxiliary field per term through a tridiagonal solve,
 *   (I - B_p S / k_eps^2) phi_p = (S / k_eps^2) u,
 *   T u = -j*k*C0*u + j*k * sum_p A_p phi_p,
 * with S the positive tangential difference.  The local families multiply
 * discrete sine mode m by lambda_symbol at s~_m; opt_open and opt_close
 * act diagonally in the sine basis with the transparent symbols of the
 * discrete operator itself (see discrete_symbol_value).
 */
inline Eigen::VectorXcd apply_transmission(const Eigen::VectorXcd& u, const SymbolSpec& spec,
                                           const Grid2D& grid) {
    const PhysicalSetup& setup = grid.setup;
    const int n = grid.ny;
    if (u.size() != n) throw ConfigError("apply_transmission: trace block size mismatch");
    switch (spec.kind) {
        case SymbolKind::oo0:
        case SymbolKind::emda:
            return lambda_symbol(spec, 0.0, setup) * u;
        case SymbolKind::oo2:
            return spec.a * u + spec.b * apply_tangential_laplacian(u, grid);
        case SymbolKind::pade: {
            const double k = setup.k;
            const PadeCoefficients c = pade_coefficients(spec.n_terms, spec.xi);
            const Complex keps = (1.0 + jj * spec.epsilon) * k;
            const Complex k2inv = 1.0 / (keps * keps);
            const Eigen::VectorXcd su = k2inv * apply_tangential_laplacian(u, grid);
            const Complex sd = 2.0 / (grid.dy * grid.dy) * k2inv;   // S diagonal / k_eps^2
            const Complex so = -1.0 / (grid.dy * grid.dy) * k2inv;  // S off-diagonal / k_eps^2
            Eigen::VectorXcd acc = -jj * k * c.c0 * u;
            for (int p = 0; p < c.n_terms; ++p) {
                Eigen::VectorXcd diag = Eigen::VectorXcd::Constant(n, 1.0 - c.B[p] * sd);
                Eigen::VectorXcd off = Eigen::VectorXcd::Constant(n - 1, -c.B[p] * so);
                const Eigen::VectorXcd phi = solve_tridiagonal(diag, off, off, su);
                acc += jj * k * c.A[p] * phi;
            }
            return acc;
        }
        default: {
            // transparent symbols of the DISCRETE operator, diagonal in the
            // sine basis: the half-space symbol for opt_open (outgoing
            // closure, reproduces the evanescent decay law on the grid) and
            // the subdomain-exact Dirichlet symbol for opt_close (one
            // operator application annihilates every cavity mode)
            Eigen::VectorXcd coef = dst_coefficients(u, grid);
            for (int m = 1; m <= n; ++m) {
                const double st2 = grid.stilde2(m);
                coef(m - 1) *= spec.kind == SymbolKind::opt_open
                    ? discrete_lambda_half_space(st2, grid)
                    : discrete_lambda_opt(st2, grid, OuterCondition::dirichlet);
            }
            Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
            for (int q = 1; q <= n; ++q) {
                Complex acc(0.0, 0.0);
                for (int m = 1; m <= n; ++m)
                    acc += coef(m - 1) * std::sin(m * pi * q / (n + 1.0));
                out(q - 1) = acc;
            }
            return out;
        }
    }
}

/// Dense matrix of the transmission action (columns are images of unit traces).
inline Eigen::MatrixXcd transmission_matrix(const SymbolSpec& spec, const Grid2D& grid) {
    const int n = grid.ny;
    Eigen::MatrixXcd T(n, n);
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    for (int c = 0; c < n; ++c) {
        e(c) = Complex(1.0, 0.0);
        T.col(c) = apply_transmission(e, spec, grid);
        e(c) = Complex(0.0, 0.0);
    }
    return T;
}

/// Parameters of one discrete experiment.
struct ExperimentConfig {
    SymbolSpec spec;
    Scenario scenario = Scenario::cavity;
    PhysicalSetup setup;
    int n_source_modes = 9;
    int points_per_wavelength = 16;
    double gmres_tol = 1e-6;
    int gmres_maxit = 0;            // 0 means the interface dimension
    bool gamma_inf_literal = false; // Robin data j*k instead of homogeneous

    Grid2D make_grid() const { return Grid2D::make(setup, points_per_wavelength); }

    void validate() const {
        setup.validate();
        spec.validate();
        const Grid2D g = make_grid();
        if (n_source_modes < 0 || n_source_modes > g.ny)
            throw ConfigError("ExperimentConfig: source modes must be representable on the grid");
        if (!(gmres_tol > 0.0)) throw ConfigError("ExperimentConfig: gmres_tol must be positive");
    }
};

/**
 * One factorized subdomain of the two-domain Schwarz splitting: the 5-point
 * Helmholtz operator with homogeneous Dirichlet walls, the scenario's outer
 * condition (Dirichlet for the cavity, one-sided second-order Robin
 * d/dn p - j*k*p = 0 for the waveguide) and the interface Robin row
 * d/dn p + T(p) = d closed with a ghost cell.  The factorization is
 * immutable after construction and can be shared read-only across threads.
 */
class SubdomainProblem {
public:
    SubdomainProblem(Side side, const ExperimentConfig& config)
        : side_(side), config_(config), grid_(config.make_grid()),
          tmat_(transmission_matrix(config.spec, grid_)) {
        assemble();
        lu_.compute(mat_);
        if (lu_.info() != Eigen::Success)
            throw SingularMatrixError("SubdomainProblem: factorization failed; "
                                      "wavenumber may hit a discrete eigenvalue");
    }

    const Grid2D& grid() const { return grid_; }
    Side side() const { return side_; }
    int n_unknowns() const { return ncols_ * grid_.ny; }

    /**
     * Solves the subdomain with the given interface Robin data.  When
     * `with_source` is set, the nonhomogeneous boundary data of the
     * experiment is active: the transverse mode sum on the source wall of
     * the left subdomain, and (in the literal-waveguide variant) the j*k
     * Robin data on the outer wall of the right one.
     */
    Eigen::VectorXcd solve(const Eigen::VectorXcd& interface_data, bool with_source = false) const {
        const int ny = grid_.ny;
        if (interface_data.size() != ny)
            throw ConfigError("SubdomainProblem::solve: interface data size mismatch");
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n_unknowns());
        for (int q = 1; q <= ny; ++q)
            rhs(index(interface_col_, q)) = interface_data(q - 1);
        if (with_source && side_ == Side::left) {
            const double inv_dx2 = 1.0 / (grid_.dx * grid_.dx);
            for (int q = 1; q <= ny; ++q)
                rhs(index(1, q)) -= source_value(q * grid_.dy) * inv_dx2;
        }
        if (with_source && side_ == Side::right && config_.scenario == Scenario::waveguide &&
            config_.gamma_inf_literal) {
            for (int q = 1; q <= ny; ++q)
                rhs(index(grid_.interface_index(), q)) += jj * grid_.setup.k;
        }
        Eigen::VectorXcd u = lu_.solve(rhs);
        if (lu_.info() != Eigen::Success)
            throw SingularMatrixError("SubdomainProblem::solve: backsolve failed");
        return u;
    }

    /// Trace of a subdomain field on the interface column.
    Eigen::VectorXcd trace(const Eigen::VectorXcd& field) const {
        Eigen::VectorXcd t(grid_.ny);
        for (int q = 1; q <= grid_.ny; ++q) t(q - 1) = field(index(interface_col_, q));
        return t;
    }

    /// Transmission action via the cached dense block.
    Eigen::VectorXcd apply_T(const Eigen::VectorXcd& u) const { return tmat_ * u; }

    /// Field value at local column j (0..interface_index), transverse index
    /// q (0..ny+1), including Dirichlet boundary values.
    Complex value_at(const Eigen::VectorXcd& field, int j, int q, bool with_source) const {
        const int ny = grid_.ny;
        if (q == 0 || q == ny + 1) return Complex(0.0, 0.0);
        const int c = col_of_j_[j];
        if (c >= 0) return field(c * ny + (q - 1));
        if (side_ == Side::left && j == 0 && with_source)
            return Complex(source_value(q * grid_.dy), 0.0);
        return Complex(0.0, 0.0);
    }

    double source_value(double y) const {
        double g = 0.0;
        for (int m = 1; m <= config_.n_source_modes; ++m)
            g += std::sin(m * pi * y / grid_.setup.h);
        return g;
    }

private:
    int index(int j, int q) const { return col_of_j_[j] * grid_.ny + (q - 1); }

    void assemble() {
        const int J = grid_.interface_index();
        const int ny = grid_.ny;
        const double dx = grid_.dx, dy = grid_.dy, k = grid_.setup.k;
        const bool outer_robin =
            side_ == Side::right && config_.scenario == Scenario::waveguide;

        // unknown columns: left j = 1..J; right j = 0..J-1 (cavity) or 0..J
        col_of_j_.assign(J + 1, -1);
        interface_col_ = side_ == Side::left ? J : 0;
        int pos = 0;
        if (side_ == Side::left)
            for (int j = 1; j <= J; ++j) col_of_j_[j] = pos++;
        else
            for (int j = 0; j <= (outer_robin ? J : J - 1); ++j) col_of_j_[j] = pos++;
        ncols_ = pos;

        std::vector<Eigen::Triplet<Complex>> trip;
        trip.reserve(static_cast<std::size_t>(ncols_) * ny * 5 + static_cast<std::size_t>(ny) * ny);
        auto add = [&](int r, int c, Complex v) { trip.emplace_back(r, c, v); };

        const Complex diag(-2.0 / (dx * dx) - 2.0 / (dy * dy) + k * k, 0.0);
        for (int j = 1; j <= J - 1; ++j) {
            if (col_of_j_[j] < 0) continue;
            for (int q = 1; q <= ny; ++q) {
                const int r = index(j, q);
                add(r, r, diag);
                if (q > 1) add(r, index(j, q - 1), 1.0 / (dy * dy));
                if (q < ny) add(r, index(j, q + 1), 1.0 / (dy * dy));
                if (col_of_j_[j - 1] >= 0) add(r, index(j - 1, q), 1.0 / (dx * dx));
                if (col_of_j_[j + 1] >= 0) add(r, index(j + 1, q), 1.0 / (dx * dx));
            }
        }

        // interface Robin row by ghost elimination: the centered normal
        // derivative (ghost - adjacent)/(2 dx) is substituted into the
        // 5-point equation of the interface column, scaled by -dx/2, so
        // that the Robin rows of the two sides sum to the interior
        // equation of the undecomposed grid (the fixed point of the
        // Schwarz map solves exactly the single-domain system)
        const int i0 = interface_col_;
        const int iadj = side_ == Side::left ? J - 1 : 1;
        for (int q = 1; q <= ny; ++q) {
            const int r = index(i0, q);
            add(r, index(iadj, q), -1.0 / dx);
            add(r, index(i0, q), 1.0 / dx - dx / 2.0 * (k * k - 2.0 / (dy * dy)));
            if (q > 1) add(r, index(i0, q - 1), -dx / 2.0 / (dy * dy));
            if (q < ny) add(r, index(i0, q + 1), -dx / 2.0 / (dy * dy));
            for (int qq = 1; qq <= ny; ++qq) {
                const Complex t = tmat_(q - 1, qq - 1);
                if (t != Complex(0.0, 0.0)) add(r, index(i0, qq), t);
            }
        }

        if (outer_robin) {
            for (int q = 1; q <= ny; ++q) {
                const int r = index(J, q);
                add(r, index(J, q), 3.0 / (2.0 * dx) - jj * k);
                add(r, index(J - 1, q), -4.0 / (2.0 * dx));
                add(r, index(J - 2, q), 1.0 / (2.0 * dx));
            }
        }

        mat_.resize(n_unknowns(), n_unknowns());
        mat_.setFromTriplets(trip.begin(), trip.end());
        mat_.makeCompressed();
    }

    Side side_;
    ExperimentConfig config_;
    Grid2D grid_;
    Eigen::MatrixXcd tmat_;
    int interface_col_ = 0;
    int ncols_ = 0;
    std::vector<int> col_of_j_;
    Eigen::SparseMatrix<Complex> mat_;
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu_;
};

inline SubdomainProblem build_subdomain(Side side, const ExperimentConfig& config) {
    return SubdomainProblem(side, config);
}

/// Layout of the stacked interface unknown: side-0 block then side-1 block.
struct TraceLayout {
    int ny = 0;
    int offset(Side s) const { return s == Side::left ? 0 : ny; }
};

/// The interface unknown d of the fixed-point recast (I - A) d = b.
struct InterfaceTrace {
    Eigen::VectorXcd values;
    TraceLayout layout;
};

/**
 * The two factorized subdomains together with the fixed-point operator A:
 * one application solves both subdomains with the incoming Robin data and
 * homogeneous physical boundaries, then forms the outgoing Robin data for
 * the opposite side.  Since the interface row enforces
 * (+/-) dn p + T(p) = d, the outgoing quantity is 2 T(p|_interface) - d.
 */
class SchwarzSystem {
public:
    explicit SchwarzSystem(const ExperimentConfig& config)
        : config_(config),
          left_(Side::left, config),
          right_(Side::right, config) {}

    const ExperimentConfig& config() const { return config_; }
    const SubdomainProblem& left() const { return left_; }
    const SubdomainProblem& right() const { return right_; }
    int interface_size() const { return left_.grid().ny; }
    int dim() const { return 2 * interface_size(); }

    Eigen::VectorXcd apply_A(const Eigen::VectorXcd& d) const {
        const int ny = interface_size();
        if (d.size() != 2 * ny) throw ConfigError("apply_A: trace dimension mismatch");
        const Eigen::VectorXcd d0 = d.head(ny), d1 = d.tail(ny);
        const Eigen::VectorXcd u0 = left_.solve(d0);
        const Eigen::VectorXcd u1 = right_.solve(d1);
        Eigen::VectorXcd out(2 * ny);
        out.head(ny) = 2.0 * right_.apply_T(right_.trace(u1)) - d1;
        out.tail(ny) = 2.0 * left_.apply_T(left_.trace(u0)) - d0;
        return out;
    }

    Eigen::VectorXcd apply_ImA(const Eigen::VectorXcd& d) const { return d - apply_A(d); }

    /// Right-hand side b: one fixed-point application with zero incoming
    /// traces and the physical sources switched on.
    Eigen::VectorXcd rhs() const {
        const int ny = interface_size();
        const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(ny);
        const Eigen::VectorXcd u0 = left_.solve(zero, true);
        const Eigen::VectorXcd u1 = right_.solve(zero, true);
        Eigen::VectorXcd b(2 * ny);
        b.head(ny) = 2.0 * right_.apply_T(right_.trace(u1));
        b.tail(ny) = 2.0 * left_.apply_T(left_.trace(u0));
        return b;
    }

    GmresTrace solve() const {
        return gmres([this](const Eigen::VectorXcd& v) { return apply_ImA(v); }, rhs(),
                     config_.gmres_tol, config_.gmres_maxit);
    }

private:
    ExperimentConfig config_;
    SubdomainProblem left_;
    SubdomainProblem right_;
};

inline InterfaceTrace apply_fixed_point_operator(const InterfaceTrace& d,
                                                 const SchwarzSystem& system) {
    return {system.apply_A(d.values), d.layout};
}

inline InterfaceTrace build_rhs(const SchwarzSystem& system) {
    return {system.rhs(), TraceLayout{system.interface_size()}};
}

/// Discrete field on the full rectangle, with the interface consistency
/// residuals of a reconstructed Schwarz solution (reported, not asserted).
struct FieldSolution {
    std::vector<double> x;   // node abscissae, size 2*J+1
    std::vector<double> y;   // node ordinates, size ny+2
    Eigen::MatrixXcd values; // (2*J+1) x (ny+2)
    double interface_jump_p = 0.0;
    double interface_jump_robin = 0.0;
};

/// Concatenates the two subdomain solves for a converged interface vector d.
inline FieldSolution reconstruct_solution(const Eigen::VectorXcd& d,
                                          const SchwarzSystem& system) {
    const Grid2D& g = system.left().grid();
    const int J = g.interface_index(), ny = g.ny;
    const Eigen::VectorXcd d0 = d.head(ny), d1 = d.tail(ny);
    const Eigen::VectorXcd u0 = system.left().solve(d0, true);
    const Eigen::VectorXcd u1 = system.right().solve(d1, true);

    FieldSolution f;
    for (int i = 0; i <= 2 * J; ++i) f.x.push_back(-g.setup.ell / 2.0 + i * g.dx);
    for (int q = 0; q <= ny + 1; ++q) f.y.push_back(q * g.dy);
    f.values.resize(2 * J + 1, ny + 2);
    for (int i = 0; i <= 2 * J; ++i)
        for (int q = 0; q <= ny + 1; ++q) {
            if (i < J) f.values(i, q) = system.left().value_at(u0, i, q, true);
            else if (i > J) f.values(i, q) = system.right().value_at(u1, i - J, q, true);
            else f.values(i, q) = 0.5 * (system.left().value_at(u0, J, q, true) +
                                         system.right().value_at(u1, 0, q, true));
        }

    const Eigen::VectorXcd t0 = system.left().trace(u0), t1 = system.right().trace(u1);
    const double scale = std::max({t0.norm(), t1.norm(), 1e-300});
    f.interface_jump_p = (t0 - t1).norm() / scale;
    const Eigen::VectorXcd resid = system.apply_ImA(d) - system.rhs();
    f.interface_jump_robin = resid.norm() / std::max(system.rhs().norm(), 1e-300);
    return f;
}

/// Direct solve on the undecomposed rectangle (reference for the DDM).
inline FieldSolution monodomain_solve(const ExperimentConfig& config) {
    const Grid2D g = config.make_grid();
    const int J = g.interface_index(), ny = g.ny;
    const int nx = 2 * J;  // columns 0..2J; col 0 Dirichlet source wall
    const bool outer_robin = config.scenario == Scenario::waveguide;
    const int last_col = outer_robin ? nx : nx - 1;
    const int ncols = last_col;  // unknown columns 1..last_col
    const double dx = g.dx, dy = g.dy, k = g.setup.k;

    auto index = [&](int i, int q) { return (i - 1) * ny + (q - 1); };
    std::vector<Eigen::Triplet<Complex>> trip;
    const Complex diag(-2.0 / (dx * dx) - 2.0 / (dy * dy) + k * k, 0.0);
    for (int i = 1; i <= nx - 1; ++i)
        for (int q = 1; q <= ny; ++q) {
            const int r = index(i, q);
            trip.emplace_back(r, r, diag);
            if (q > 1) trip.emplace_back(r, index(i, q - 1), 1.0 / (dy * dy));
            if (q < ny) trip.emplace_back(r, index(i, q + 1), 1.0 / (dy * dy));
            if (i > 1) trip.emplace_back(r, index(i - 1, q), 1.0 / (dx * dx));
            if (i + 1 <= last_col) trip.emplace_back(r, index(i + 1, q), 1.0 / (dx * dx));
        }
    if (outer_robin)
        for (int q = 1; q <= ny; ++q) {
            const int r = index(nx, q);
            trip.emplace_back(r, index(nx, q), 3.0 / (2.0 * dx) - jj * k);
            trip.emplace_back(r, index(nx - 1, q), -4.0 / (2.0 * dx));
            trip.emplace_back(r, index(nx - 2, q), 1.0 / (2.0 * dx));
        }

    Eigen::SparseMatrix<Complex> M(ncols * ny, ncols * ny);
    M.setFromTriplets(trip.begin(), trip.end());
    M.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success)
        throw SingularMatrixError("monodomain_solve: factorization failed");

    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(ncols * ny);
    SubdomainProblem probe(Side::left, config);  // reuse the source profile
    for (int q = 1; q <= ny; ++q)
        rhs(index(1, q)) -= probe.source_value(q * dy) / (dx * dx);
    if (outer_robin && config.gamma_inf_literal)
        for (int q = 1; q <= ny; ++q) rhs(index(nx, q)) += jj * k;
    const Eigen::VectorXcd u = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw SingularMatrixError("monodomain_solve: backsolve failed");

    FieldSolution f;
    for (int i = 0; i <= nx; ++i) f.x.push_back(-g.setup.ell / 2.0 + i * dx);
    for (int q = 0; q <= ny + 1; ++q) f.y.push_back(q * dy);
    f.values = Eigen::MatrixXcd::Zero(nx + 1, ny + 2);
    for (int i = 1; i <= last_col; ++i)
        for (int q = 1; q <= ny; ++q) f.values(i, q) = u(index(i, q));
    for (int q = 1; q <= ny; ++q) f.values(0, q) = probe.source_value(q * dy);
    return f;
}

/// Relative discrete L2 distance between two fields on the same grid.
inline double relative_l2_error(const FieldSolution& a, const FieldSolution& b) {
    if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols())
        throw ConfigError("relative_l2_error: incompatible grids");
    return (a.values - b.values).norm() / std::max(b.values.norm(), 1e-300);
}

/// Value by which the transmission action multiplies discrete sine mode m:
/// the analytic symbol at s~ for the local families, the discrete
/// transparent symbols for opt_open / opt_close.
inline Complex discrete_symbol_value(const SymbolSpec& spec, double stilde2,
                                     const Grid2D& grid) {
    switch (spec.kind) {
        case SymbolKind::opt_open:
            return discrete_lambda_half_space(stilde2, grid);
        case SymbolKind::opt_close:
            return discrete_lambda_opt(stilde2, grid, OuterCondition::dirichlet);
        default:
            return lambda_symbol(spec, std::sqrt(stilde2), grid.setup);
    }
}

/**
 * Per-application contraction factors of discrete sine mode m, one per
 * subdomain solve: rho~_i = (lambda(s~) - lambda~_i) / (lambda(s~) + lambda~_i)
 * with lambda~_i the discrete transparent symbol of side i.  A mode-m
 * impulse returns scaled by rho~_0 * rho~_1 after two operator applications.
 */
inline std::pair<Complex, Complex> discrete_mode_radius(int m, const ExperimentConfig& config) {
    const Grid2D g = config.make_grid();
    const double st2 = g.stilde2(m);
    const Complex lam = discrete_symbol_value(config.spec, st2, g);
    const Complex L0 = discrete_lambda_opt(st2, g, OuterCondition::dirichlet);
    const Complex L1 = config.scenario == Scenario::cavity
        ? L0
        : discrete_lambda_opt(st2, g, OuterCondition::robin);
    if (std::abs(lam + L0) < 1e-14 || std::abs(lam + L1) < 1e-14)
        throw DegenerateError("discrete_mode_radius: degenerate transmission response");
    return {(lam - L0) / (lam + L0), (lam - L1) / (lam + L1)};
}

}  // namespace helmdd

#endif

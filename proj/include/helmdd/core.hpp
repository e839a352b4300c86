#ifndef HELMDD_CORE_HPP
#define HELMDD_CORE_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace helmdd {

using Complex = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr Complex jj{0.0, 1.0};

/// Base class for all failures raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error { using Error::Error; };
/// Cotangent pole of the closed-domain optimal symbol.
struct PoleError : Error { using Error::Error; };
/// Symbol hits the exact resonance of the radius denominator.
struct DegenerateError : Error { using Error::Error; };
/// A rational-term denominator collapsed (should not happen for xi in (0, pi/2]).
struct DivergentTermError : Error { using Error::Error; };
/// Fourier mode resonant with the subdomain length.
struct ResonantModeError : Error { using Error::Error; };
/// Interface traces exceeded the floating-point range during iteration.
struct DivergenceOverflow : Error { using Error::Error; };
struct SingularMatrixError : Error { using Error::Error; };
struct TridiagonalSingular : Error { using Error::Error; };
struct BreakdownError : Error { using Error::Error; };
struct DimensionGuardError : Error { using Error::Error; };
struct NonConvergenceError : Error { using Error::Error; };
struct OptimizationFailure : Error { using Error::Error; };

/// The two subdomains: left is x in [-ell/2, 0], right is x in [0, +ell/2].
enum class Side { left, right };

enum class Regime { propagating, cut_on, evanescent };

inline Regime regime_of(double s, double k) {
    if (s * s < k * k) return Regime::propagating;
    if (s * s > k * k) return Regime::evanescent;
    return Regime::cut_on;
}

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::propagating: return "propagating";
        case Regime::cut_on:      return "cut-on";
        default:                  return "evanescent";
    }
}

/**
 * Geometry and physics of the rectangular two-subdomain experiment:
 * a domain of length `ell` and height `h`, split at x = 0, driven at
 * wavenumber `k` with wavelength `lambda_w` (k * lambda_w = 2*pi).
 */
struct PhysicalSetup {
    double k = 2.0 * pi;
    double ell = 9.5;
    double h = 4.75;
    double lambda_w = 1.0;

    /// Builds the setup from the aspect parameters used by the experiments:
    /// ell = ell_over_lambda * lambda_w, h = h_over_ell * ell.
    static PhysicalSetup from_aspect(double ell_over_lambda,
                                     double h_over_ell = 0.5,
                                     double lambda_w = 1.0) {
        PhysicalSetup s;
        s.lambda_w = lambda_w;
        s.k = 2.0 * pi / lambda_w;
        s.ell = ell_over_lambda * lambda_w;
        s.h = h_over_ell * s.ell;
        s.validate();
        return s;
    }

    /**
     * Checks positivity, k * lambda_w = 2*pi, and that k^2 stays away from
     * every rectangle eigenvalue (m*pi/h)^2 + (q*pi/ell)^2 by at least
     * `eigen_guard * k^2`.  Throws ConfigError otherwise.
     */
    void validate(double eigen_guard = 1e-8) const {
        if (!(k > 0.0) || !(ell > 0.0) || !(h > 0.0) || !(lambda_w > 0.0))
            throw ConfigError("PhysicalSetup: k, ell, h, lambda_w must be positive");
        if (std::abs(k * lambda_w - 2.0 * pi) > 1e-12 * 2.0 * pi)
            throw ConfigError("PhysicalSetup: k * lambda_w != 2*pi");
        const double guard = eigen_guard * k * k;
        const int m_max = static_cast<int>(k * h / pi) + 1;
        const int q_max = static_cast<int>(k * ell / pi) + 1;
        for (int m = 1; m <= m_max; ++m) {
            const double sy = m * pi / h;
            if (sy * sy > k * k) break;
            for (int q = 1; q <= q_max; ++q) {
                const double sx = q * pi / ell;
                const double gap = std::abs(k * k - sy * sy - sx * sx);
                if (gap <= guard)
                    throw ConfigError("PhysicalSetup: k is within the eigenvalue guard of mode ("
                                      + std::to_string(m) + "," + std::to_string(q) + ")");
            }
        }
    }
};

/**
 * Decay/propagation rate of a transverse Fourier mode:
 *   alpha(s) = -j*sqrt(k^2 - s^2)  for s^2 <= k^2,
 *   alpha(s) =    sqrt(s^2 - k^2)  for s^2 >= k^2.
 * Both branches vanish at s = k.
 */
inline Complex alpha(double s, double k) {
    const double d = k * k - s * s;
    if (d > 0.0) return Complex(0.0, -std::sqrt(d));
    if (d < 0.0) return Complex(std::sqrt(-d), 0.0);
    return Complex(0.0, 0.0);
}

/// One transverse sine mode: index m, Fourier variable s = m*pi/h, rate alpha(s).
struct FourierMode {
    int m = 1;
    double s = 0.0;
    Complex alpha{0.0, 0.0};
};

inline FourierMode make_mode(int m, const PhysicalSetup& setup) {
    if (m < 1) throw ConfigError("FourierMode: index must be >= 1");
    FourierMode mode;
    mode.m = m;
    mode.s = m * pi / setup.h;
    mode.alpha = alpha(mode.s, setup.k);
    return mode;
}

/// Number of transverse modes with s^2 < k^2 (cut-off count of the guide).
inline int propagating_mode_count(const PhysicalSetup& setup) {
    int n = 0;
    for (int m = 1; m * pi / setup.h < setup.k; ++m) ++n;
    return n;
}

}  // namespace helmdd

#endif

#include "gmmlor/quartic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

namespace gmmlor {
namespace {

using cplx = std::complex<double>;

constexpr double kLeadingTol = 1e-14;
constexpr int kPolishSteps = 8;

// Highest degree first.
cplx horner(std::span<const double> c, cplx x) {
    cplx v = 0.0;
    for (double ci : c) v = v * x + ci;
    return v;
}

cplx horner_derivative(std::span<const double> c, cplx x) {
    const std::size_t n = c.size() - 1;
    cplx v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v = v * x + c[i] * static_cast<double>(n - i);
    return v;
}

// Newton steps that never increase |p|; safe near multiple roots.
cplx polish(std::span<const double> c, cplx x) {
    cplx fx = horner(c, x);
    for (int i = 0; i < kPolishSteps && std::abs(fx) > 0.0; ++i) {
        const cplx d = horner_derivative(c, x);
        if (std::abs(d) == 0.0) break;
        const cplx candidate = x - fx / d;
        const cplx fc = horner(c, candidate);
        if (!(std::abs(fc) < std::abs(fx))) break;
        x = candidate;
        fx = fc;
    }
    return x;
}

// Snap imaginary parts that are pure rounding noise.
cplx clean(cplx z) {
    if (std::abs(z.imag()) <= 1e-14 * std::max(1.0, std::abs(z.real()))) return {z.real(), 0.0};
    return z;
}

cplx principal_cbrt(cplx z) {
    if (z == cplx(0.0)) return 0.0;
    if (z.imag() == 0.0) return std::cbrt(z.real());
    return std::pow(z, 1.0 / 3.0);
}

std::vector<cplx> solve_quadratic(double a, double b, double c) {
    if (a == 0.0) {
        if (b == 0.0) return {};
        return {cplx(-c / b)};
    }
    const cplx disc = std::sqrt(cplx(b * b - 4.0 * a * c));
    // Avoid cancellation: q = -(b + sign(b) sqrt(disc)) / 2.
    const cplx q = -0.5 * (b >= 0.0 ? cplx(b) + disc : cplx(b) - disc);
    if (q == cplx(0.0)) return {cplx(0.0), cplx(0.0)};
    return {q / a, c / q};
}

// Roots of the monic depressed cubic t^3 + p t + q.
std::array<cplx, 3> depressed_cubic(cplx p, cplx q) {
    const cplx omega(-0.5, std::sqrt(3.0) / 2.0);
    const cplx disc = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
    cplx u3 = -q / 2.0 + disc;
    const cplx alt = -q / 2.0 - disc;
    if (std::abs(alt) > std::abs(u3)) u3 = alt;
    const cplx u = principal_cbrt(u3);
    if (u == cplx(0.0)) return {cplx(0.0), cplx(0.0), cplx(0.0)};
    std::array<cplx, 3> t;
    cplx w = 1.0;
    for (auto& ti : t) {
        const cplx uk = u * w;
        ti = uk - p / (3.0 * uk);
        w *= omega;
    }
    return t;
}

double coefficient_scale(std::initializer_list<double> c) {
    double m = 0.0;
    for (double ci : c) m = std::max(m, std::abs(ci));
    return m;
}

}  // namespace

std::vector<std::complex<double>> solve_cubic(double c3, double c2, double c1, double c0) {
    const double scale = coefficient_scale({c3, c2, c1, c0});
    if (scale == 0.0) return {};
    if (std::abs(c3) < kLeadingTol * scale) {
        auto roots = solve_quadratic(c2, c1, c0);
        const std::array<double, 3> c{c2, c1, c0};
        for (auto& r : roots) r = clean(polish(c, r));
        return roots;
    }
    const double a = c2 / c3;
    const double b = c1 / c3;
    const double c = c0 / c3;
    const double shift = a / 3.0;
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const auto t = depressed_cubic(p, q);
    const std::array<double, 4> coeffs{c3, c2, c1, c0};
    std::vector<cplx> roots;
    for (const auto& ti : t) roots.push_back(clean(polish(coeffs, ti - shift)));
    return roots;
}

std::vector<std::complex<double>> solve_quartic(double c4, double c3, double c2, double c1, double c0) {
    const double scale = coefficient_scale({c4, c3, c2, c1, c0});
    if (scale == 0.0) return {};
    if (std::abs(c4) < kLeadingTol * scale) return solve_cubic(c3, c2, c1, c0);

    const std::array<double, 5> coeffs{c4, c3, c2, c1, c0};
    const double a = c3 / c4;
    const double b = c2 / c4;
    const double c = c1 / c4;
    const double d = c0 / c4;

    // x = y - a/4 gives y^4 + p y^2 + q y + r.
    const double shift = a / 4.0;
    const double a2 = a * a;
    const double p = b - 3.0 * a2 / 8.0;
    const double q = c - a * b / 2.0 + a2 * a / 8.0;
    const double r = d - a * c / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;

    std::vector<cplx> roots;
    roots.reserve(4);
    auto biquadratic = [&] {
        // y^2 = z with z^2 + p z + r = 0.
        for (const cplx& z : solve_quadratic(1.0, p, r)) {
            const cplx y = std::sqrt(z);
            roots.push_back(y - shift);
            roots.push_back(-y - shift);
        }
    };

    if (q == 0.0) {
        biquadratic();
    } else {
        // (y^2 + p/2 + m)^2 = 2m y^2 - q y + m^2 + m p + p^2/4 - r; the right
        // side is a perfect square when m solves the resolvent cubic
        //   m^3 + p m^2 + (p^2/4 - r) m - q^2/8 = 0.
        const double ra = p;
        const double rb = p * p / 4.0 - r;
        const double rc = -q * q / 8.0;
        const double rshift = ra / 3.0;
        const auto t = depressed_cubic(rb - ra * ra / 3.0, 2.0 * ra * ra * ra / 27.0 - ra * rb / 3.0 + rc);
        // Largest-modulus root keeps sqrt(2m) away from zero.
        cplx m = t[0] - rshift;
        for (const auto& ti : t) {
            if (std::abs(ti - rshift) > std::abs(m)) m = ti - rshift;
        }
        const std::array<double, 4> resolvent{1.0, ra, rb, rc};
        m = polish(resolvent, m);

        if (std::abs(m) < 1e-300) {
            biquadratic();
        } else {
            const cplx root2m = std::sqrt(2.0 * m);
            const cplx offset = q / (2.0 * root2m);
            // y^2 + p/2 + m = +/- (root2m y - offset)
            for (double sign : {1.0, -1.0}) {
                const cplx bb = -sign * root2m;
                const cplx cc = p / 2.0 + m + sign * offset;
                const cplx disc = std::sqrt(bb * bb - 4.0 * cc);
                const cplx qq = -0.5 * (std::real(std::conj(bb) * disc) >= 0.0 ? bb + disc : bb - disc);
                if (qq == cplx(0.0)) {
                    roots.push_back(-shift);
                    roots.push_back(-shift);
                } else {
                    roots.push_back(qq - shift);
                    roots.push_back(cc / qq - shift);
                }
            }
        }
    }
    for (auto& x : roots) x = clean(polish(coeffs, x));
    return roots;
}

}  // namespace gmmlor

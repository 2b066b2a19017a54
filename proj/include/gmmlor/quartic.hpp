#pragma once

#include <complex>
#include <vector>

namespace gmmlor {

/// Roots of c4 x^4 + c3 x^3 + c2 x^2 + c1 x + c0 by Ferrari's method with
/// Newton polishing.
///
/// Returns four roots counted with multiplicity. When |c4| is below
/// 1e-14 * max|c_i| the polynomial is treated as lower degree and fewer
/// roots are returned (none for a constant). Each root r satisfies
/// |p(r)| <= 1e-8 * sum|c_i| * max(1, |r|)^4 in practice.
std::vector<std::complex<double>> solve_quartic(double c4, double c3, double c2, double c1, double c0);

/// All roots of c3 x^3 + c2 x^2 + c1 x + c0 (Cardano), with the same
/// lower-degree fallback.
std::vector<std::complex<double>> solve_cubic(double c3, double c2, double c1, double c0);

}  // namespace gmmlor

#include "gmmlor/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "gmmlor/error.hpp"
#include "gmmlor/quartic.hpp"

namespace gmmlor {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMaxCondition = 1e12;
constexpr double kIsotropyTol = 1e-12;
constexpr double kRootResidualTol = 1e-8;
constexpr double kRootImagTol = 1e-6;
constexpr int kGridPoints = 720;

void check_sizes(std::size_t n, std::size_t m) {
    if (n != m) throw std::invalid_argument("weights must have one entry per line of response");
}

/// Condition number of a symmetric PSD 2x2 matrix [[a, b], [b, d]];
/// infinity when it is singular.
double condition_2x2(double a, double b, double d) {
    const double half_trace = 0.5 * (a + d);
    const double radius = std::hypot(0.5 * (a - d), b);
    const double hi = half_trace + radius;
    const double lo = half_trace - radius;
    if (!(lo > 0.0) || !(hi > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

/// Solves [[a, b], [b, d]] x = r by Cramer's rule after a condition check.
Vec2 solve_symmetric_2x2(double a, double b, double d, const Vec2& r, const char* what) {
    if (!(condition_2x2(a, b, d) <= kMaxCondition)) {
        throw DegenerateGeometryError(std::string(what) + ": normal matrix is ill-conditioned");
    }
    const double det = a * d - b * b;
    return {(d * r.x() - b * r.y()) / det, (a * r.y() - b * r.x()) / det};
}

/// Orientation objective as a function of alpha = 2 phi0.
///
/// With a = (sigma2^2 - sigma1^2)/2 and b_i = (sigma1^2 + sigma2^2)/2 - s_c,i^2
/// the projection law gives residual_i = a cos(alpha - alpha_i) + b_i, so the
/// objective is a quadratic form in (cos alpha, sin alpha) whose coefficients
/// are weighted sums over the data. The stationarity condition
///     sum_i (M_i cos(alpha - alpha_i) + N_i) sin(alpha - alpha_i) = 0,
/// M_i = w_i (sigma2^2 - sigma1^2), N_i = w_i (sigma1^2 + sigma2^2 - 2 s_c,i^2),
/// is kept in the expanded form
///     A_s2 (y^2 - x^2) + A_sc x y + A_s y + A_c x = 0,  x = cos alpha, y = sin alpha.
struct OrientationProblem {
    double a = 0.0;
    double s_cc = 0.0, s_cs = 0.0, s_ss = 0.0;
    double s_bc = 0.0, s_bs = 0.0, s_bb = 0.0;
    double a_s2 = 0.0, a_sc = 0.0, a_s = 0.0, a_c = 0.0;

    OrientationProblem(std::span<const CenteredLoR> offsets, std::span<const double> weights,
                       double sigma1_sq, double sigma2_sq) {
        a = 0.5 * (sigma2_sq - sigma1_sq);
        const double mid = 0.5 * (sigma1_sq + sigma2_sq);
        for (std::size_t i = 0; i < offsets.size(); ++i) {
            const double w = weights[i];
            if (w == 0.0) continue;
            const double alpha = 2.0 * offsets[i].phi;
            const double c = std::cos(alpha);
            const double s = std::sin(alpha);
            const double b = mid - offsets[i].s_c * offsets[i].s_c;
            s_cc += w * c * c;
            s_cs += w * c * s;
            s_ss += w * s * s;
            s_bc += w * b * c;
            s_bs += w * b * s;
            s_bb += w * b * b;
        }
        const double m = 2.0 * a;  // M_i / w_i
        a_s2 = m * s_cs;
        a_sc = m * (s_cc - s_ss);
        a_s = 2.0 * s_bc;   // sum N_i cos(alpha_i)
        a_c = -2.0 * s_bs;  // -sum N_i sin(alpha_i)
    }

    double objective(double alpha) const {
        const double x = std::cos(alpha);
        const double y = std::sin(alpha);
        return a * a * (x * x * s_cc + 2.0 * x * y * s_cs + y * y * s_ss) + 2.0 * a * (x * s_bc + y * s_bs) + s_bb;
    }

    double stationarity(double x, double y) const {
        return a_s2 * (y * y - x * x) + a_sc * x * y + a_s * y + a_c * x;
    }

    double stationarity_derivative(double x, double y) const {
        return 4.0 * a_s2 * x * y + a_sc * (x * x - y * y) + a_s * x - a_c * y;
    }

    double coefficient_scale() const {
        return std::abs(a_s2) + std::abs(a_sc) + std::abs(a_s) + std::abs(a_c);
    }

    /// Newton on the stationarity condition in alpha; keeps the start if a
    /// step does not improve the residual.
    double polish(double alpha) const {
        for (int i = 0; i < 6; ++i) {
            const double x = std::cos(alpha);
            const double y = std::sin(alpha);
            const double f = stationarity(x, y);
            const double df = stationarity_derivative(x, y);
            if (f == 0.0 || df == 0.0) break;
            const double next = alpha - f / df;
            if (!(std::abs(stationarity(std::cos(next), std::sin(next))) < std::abs(f))) break;
            alpha = next;
        }
        return alpha;
    }

    std::vector<double> closed_form_candidates() const {
        // Substituting y = +/- sqrt(1 - x^2) and squaring
        //   (A_sc x + A_s) y = 2 A_s2 x^2 - A_c x - A_s2
        // gives a quartic in x.
        const double c4 = 4.0 * a_s2 * a_s2 + a_sc * a_sc;
        const double c3 = 2.0 * a_sc * a_s - 4.0 * a_s2 * a_c;
        const double c2 = a_c * a_c + a_s * a_s - a_sc * a_sc - 4.0 * a_s2 * a_s2;
        const double c1 = 2.0 * a_s2 * a_c - 2.0 * a_sc * a_s;
        const double c0 = a_s2 * a_s2 - a_s * a_s;

        const double tol = kRootResidualTol * coefficient_scale();
        std::vector<double> out;
        for (const auto& root : solve_quartic(c4, c3, c2, c1, c0)) {
            if (std::abs(root.imag()) > kRootImagTol) continue;
            if (std::abs(root.real()) > 1.0 + kRootImagTol) continue;
            const double x = std::clamp(root.real(), -1.0, 1.0);
            const double y_abs = std::sqrt(std::max(0.0, 1.0 - x * x));
            for (double y : {y_abs, -y_abs}) {
                if (std::abs(stationarity(x, y)) <= tol) out.push_back(std::atan2(y, x));
            }
        }
        return out;
    }

    double grid_search() const {
        const double step = 2.0 * kPi / kGridPoints;
        double best = -kPi;
        double best_value = objective(best);
        for (int j = 1; j < kGridPoints; ++j) {
            const double alpha = -kPi + j * step;
            const double v = objective(alpha);
            if (v < best_value) {
                best_value = v;
                best = alpha;
            }
        }
        // Golden-section search on the bracketing cell pair.
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double lo = best - step;
        double hi = best + step;
        double x1 = hi - inv_phi * (hi - lo);
        double x2 = lo + inv_phi * (hi - lo);
        double f1 = objective(x1);
        double f2 = objective(x2);
        for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = objective(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = objective(x2);
            }
        }
        return 0.5 * (lo + hi);
    }
};

}  // namespace

Vec2 fit_mean(std::span<const LineOfResponse> lors, std::span<const double> weights) {
    check_sizes(lors.size(), weights.size());
    double ss = 0.0, sc = 0.0, cc = 0.0, bs = 0.0, bc = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < lors.size(); ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        const double s = std::sin(lors[i].phi());
        const double c = std::cos(lors[i].phi());
        ss += w * s * s;
        sc += w * s * c;
        cc += w * c * c;
        bs += w * lors[i].s() * s;
        bc += w * lors[i].s() * c;
        mass += w;
    }
    if (!(mass > 0.0)) {
        throw DegenerateGeometryError("fit_mean: weights sum to zero");
    }
    return solve_symmetric_2x2(ss, -sc, cc, Vec2(-bs, bc), "fit_mean");
}

std::vector<CenteredLoR> center_offsets(std::span<const LineOfResponse> lors, const Vec2& mean) {
    std::vector<CenteredLoR> out;
    out.reserve(lors.size());
    for (const auto& lor : lors) out.push_back({lor.s() - sinusoid(mean, lor.phi()), lor.phi()});
    return out;
}

WeightedMoments moments_from_offsets(std::span<const CenteredLoR> offsets, std::span<const double> weights) {
    check_sizes(offsets.size(), weights.size());
    WeightedMoments m;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        const double s2 = offsets[i].s_c * offsets[i].s_c;
        m.mass += weights[i];
        m.m2w += weights[i] * s2;
        m.m4w += weights[i] * s2 * s2;
    }
    if (!(m.mass > 0.0)) {
        throw std::invalid_argument("moments_from_offsets: weights sum to zero");
    }
    m.m2w /= m.mass;
    m.m4w /= m.mass;
    m.m4w = std::max(m.m4w, m.m2w * m.m2w);
    return m;
}

PrincipalVariances invert_moments(const WeightedMoments& m, double variance_floor) {
    const double discriminant = std::max(0.0, m.m4w / 3.0 - m.m2w * m.m2w);
    const double spread = std::sqrt(2.0) * std::sqrt(discriminant);
    return {std::max(m.m2w + spread, variance_floor), std::max(m.m2w - spread, variance_floor)};
}

double solve_orientation(std::span<const CenteredLoR> offsets, std::span<const double> weights,
                         double sigma1_sq, double sigma2_sq) {
    check_sizes(offsets.size(), weights.size());
    if (std::abs(sigma1_sq - sigma2_sq) <= kIsotropyTol) return 0.0;

    const OrientationProblem problem(offsets, weights, sigma1_sq, sigma2_sq);
    double best_alpha = 0.0;
    double best_value = std::numeric_limits<double>::infinity();
    for (double alpha : problem.closed_form_candidates()) {
        alpha = problem.polish(alpha);
        const double v = problem.objective(alpha);
        if (v < best_value) {
            best_value = v;
            best_alpha = alpha;
        }
    }
    if (!std::isfinite(best_value)) best_alpha = problem.grid_search();
    return canonical_orientation(0.5 * best_alpha);
}

EigenDecomposition2D refine_sigmas(std::span<const CenteredLoR> offsets, std::span<const double> weights,
                                   double phi0, double variance_floor) {
    check_sizes(offsets.size(), weights.size());
    double m11 = 0.0, m12 = 0.0, m22 = 0.0;
    Vec2 b = Vec2::Zero();
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        const double s = std::sin(phi0 - offsets[i].phi);
        const double c = std::cos(phi0 - offsets[i].phi);
        const double s2 = s * s;
        const double c2 = c * c;
        const double sc2 = offsets[i].s_c * offsets[i].s_c;
        m11 += w * s2 * s2;
        m12 += w * s2 * c2;
        m22 += w * c2 * c2;
        b.x() += w * sc2 * s2;
        b.y() += w * sc2 * c2;
    }
    const Vec2 sol = solve_symmetric_2x2(m11, m12, m22, b, "refine_sigmas");

    EigenDecomposition2D e{std::max(sol.x(), variance_floor), std::max(sol.y(), variance_floor), phi0};
    if (e.sigma2_sq > e.sigma1_sq) {
        std::swap(e.sigma1_sq, e.sigma2_sq);
        e.phi0 += kPi / 2;
    }
    e.phi0 = canonical_orientation(e.phi0);
    return e;
}

EigenDecomposition2D estimate_principal_axes(std::span<const CenteredLoR> offsets, std::span<const double> weights,
                                             double variance_floor) {
    const auto moments = moments_from_offsets(offsets, weights);
    const auto initial = invert_moments(moments, variance_floor);
    const double phi0 = solve_orientation(offsets, weights, initial.sigma1_sq, initial.sigma2_sq);
    auto refined = refine_sigmas(offsets, weights, phi0, variance_floor);
    refined.phi0 = solve_orientation(offsets, weights, refined.sigma1_sq, refined.sigma2_sq);
    return refined;
}

Mat2 estimate_covariance(std::span<const CenteredLoR> offsets, std::span<const double> weights,
                         double variance_floor) {
    return covariance_from_eigen(estimate_principal_axes(offsets, weights, variance_floor));
}

MembershipUpdate compute_memberships(const MixtureModel2D& model, std::span<const LineOfResponse> lors) {
    const std::size_t n = lors.size();
    const std::size_t k_count = model.size();
    Eigen::MatrixXd p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k_count));
    std::vector<double> log_weight(k_count);
    for (std::size_t k = 0; k < k_count; ++k) log_weight[k] = std::log(model[k].weight);

    double loglik = 0.0;
    std::vector<double> logs(k_count);
    for (std::size_t i = 0; i < n; ++i) {
        double max_log = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < k_count; ++k) {
            logs[k] = log_weight[k] + log_line_integral_density(model[k], lors[i]);
            max_log = std::max(max_log, logs[k]);
        }
        const auto row = static_cast<Eigen::Index>(i);
        if (!std::isfinite(max_log)) {
            for (std::size_t k = 0; k < k_count; ++k) p(row, static_cast<Eigen::Index>(k)) = 1.0 / static_cast<double>(k_count);
            continue;
        }
        double total = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            logs[k] = std::exp(logs[k] - max_log);
            total += logs[k];
        }
        for (std::size_t k = 0; k < k_count; ++k) p(row, static_cast<Eigen::Index>(k)) = logs[k] / total;
        loglik += max_log + std::log(total);
    }
    return {MembershipMatrix(std::move(p)), loglik};
}

}  // namespace gmmlor

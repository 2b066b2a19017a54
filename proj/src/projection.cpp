#include "gmmlor/projection.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "gmmlor/error.hpp"

namespace gmmlor {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinProjectedVariance = 1e-15;
constexpr std::size_t kMarginalQuadratureOrder = 201;

const detail::GaussLegendreRule& marginal_rule() {
    static const detail::GaussLegendreRule rule = detail::gauss_legendre(kMarginalQuadratureOrder);
    return rule;
}

}  // namespace

double projection_variance(const ProjectionVarianceParams& p, double phi) {
    const double s = std::sin(phi - p.phi0);
    const double c = std::cos(phi - p.phi0);
    return p.sigma1_sq * s * s + p.sigma2_sq * c * c;
}

double projection_variance(const Mat2& covariance, double phi) {
    const double nx = -std::sin(phi);
    const double ny = std::cos(phi);
    return covariance(0, 0) * nx * nx + 2.0 * covariance(0, 1) * nx * ny + covariance(1, 1) * ny * ny;
}

double log_line_integral_density(const GaussianComponent2D& component, const LineOfResponse& lor) {
    const double var = projection_variance(component.covariance, lor.phi());
    if (!(var >= kMinProjectedVariance)) {
        throw SingularCovarianceError("projected variance collapsed to zero");
    }
    const double s_c = lor.s() - sinusoid(component.mean, lor.phi());
    return -0.5 * std::log(2.0 * kPi * var) - 0.5 * s_c * s_c / var;
}

double line_integral_density(const GaussianComponent2D& component, const LineOfResponse& lor) {
    return std::exp(log_line_integral_density(component, lor));
}

double marginal_pdf_sc(const ProjectionVarianceParams& p, double s_c) {
    if (!(p.sigma2_sq > 0.0)) {
        throw std::invalid_argument("marginal_pdf_sc requires sigma2_sq > 0");
    }
    const auto& rule = marginal_rule();
    // Map [-1, 1] onto [-pi/2, pi/2]; the 1/pi prefactor cancels the pi/2
    // Jacobian down to 1/2.
    double sum = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const double phi = 0.5 * kPi * rule.nodes[j];
        const double var = projection_variance(p, phi);
        sum += rule.weights[j] * std::exp(-0.5 * s_c * s_c / var) / std::sqrt(2.0 * kPi * var);
    }
    return 0.5 * sum;
}

ProjectionMoments theoretical_moments(const ProjectionVarianceParams& p) {
    const double a = p.sigma1_sq;
    const double b = p.sigma2_sq;
    return {0.5 * (a + b), (9.0 * a * a + 6.0 * a * b + 9.0 * b * b) / 8.0};
}

namespace detail {

GaussLegendreRule gauss_legendre(std::size_t order) {
    if (order == 0) throw std::invalid_argument("gauss_legendre: order must be positive");
    GaussLegendreRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const double n = static_cast<double>(order);
    const std::size_t half = (order + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= order; ++k) {
                const double kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

}  // namespace detail
}  // namespace gmmlor

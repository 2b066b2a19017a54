#pragma once

#include <span>
#include <vector>

#include "gmmlor/model.hpp"

namespace gmmlor {

/// Principal variances and orientation that drive the projection law.
/// Same convention as EigenDecomposition2D: sigma1_sq lies along the
/// direction at angle phi0.
struct ProjectionVarianceParams {
    double sigma1_sq = 0.0;
    double sigma2_sq = 0.0;
    double phi0 = 0.0;

    ProjectionVarianceParams() = default;
    ProjectionVarianceParams(double s1, double s2, double angle) : sigma1_sq(s1), sigma2_sq(s2), phi0(angle) {}
    explicit ProjectionVarianceParams(const EigenDecomposition2D& e)
        : sigma1_sq(e.sigma1_sq), sigma2_sq(e.sigma2_sq), phi0(e.phi0) {}
};

/// A line of response re-expressed relative to a component mean.
struct CenteredLoR {
    double s_c = 0.0;
    double phi = 0.0;
};

/// Second and fourth moments of the angle-averaged centered offset.
struct ProjectionMoments {
    double m2 = 0.0;
    double m4 = 0.0;
};

/// Variance of the 1D Gaussian obtained by integrating along every line at
/// angle phi: n^T Sigma n with normal n = (-sin phi, cos phi), which for the
/// principal-axis form reads
///
///     sigma1^2 sin^2(phi - phi0) + sigma2^2 cos^2(phi - phi0).
///
/// A line parallel to the major axis (phi == phi0) sees only the minor
/// variance.
double projection_variance(const ProjectionVarianceParams& p, double phi);

/// n^T Sigma n for an explicit covariance.
double projection_variance(const Mat2& covariance, double phi);

/// Closed-form line integral of a component density (weight not applied)
/// along a line of response. Throws SingularCovarianceError when the
/// projected variance is below 1e-15.
double line_integral_density(const GaussianComponent2D& component, const LineOfResponse& lor);

/// Natural log of line_integral_density; finite for arbitrarily far lines.
double log_line_integral_density(const GaussianComponent2D& component, const LineOfResponse& lor);

/// Marginal density of the centered offset s_c when phi ~ U[-pi/2, pi/2],
/// evaluated with 201-node Gauss-Legendre quadrature over phi.
double marginal_pdf_sc(const ProjectionVarianceParams& p, double s_c);

/// m2 = (s1 + s2) / 2 and m4 = (9 s1^2 + 6 s1 s2 + 9 s2^2) / 8 where s1, s2
/// are the principal variances. Independent of phi0.
ProjectionMoments theoretical_moments(const ProjectionVarianceParams& p);

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussLegendreRule gauss_legendre(std::size_t order);

}  // namespace detail
}  // namespace gmmlor

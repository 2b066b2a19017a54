#pragma once

#include <span>
#include <vector>

#include "gmmlor/model.hpp"
#include "gmmlor/projection.hpp"

namespace gmmlor {

inline constexpr double kDefaultVarianceFloor = 1e-8;

/// Weighted second and fourth sample moments of centered offsets.
struct WeightedMoments {
    double m2w = 0.0;
    double m4w = 0.0;
    double mass = 0.0;  // sum of weights
};

struct PrincipalVariances {
    double sigma1_sq = 0.0;
    double sigma2_sq = 0.0;
};

/// Weighted least-squares sinusoid fit: the mean minimizing
/// sum_i w_i (-mu_x sin phi_i + mu_y cos phi_i - s_i)^2.
///
/// Throws DegenerateGeometryError if the weights sum to zero or the normal
/// matrix has condition number above 1e12.
Vec2 fit_mean(std::span<const LineOfResponse> lors, std::span<const double> weights);

/// s_c = s - m(phi; mean) for every line.
std::vector<CenteredLoR> center_offsets(std::span<const LineOfResponse> lors, const Vec2& mean);

WeightedMoments moments_from_offsets(std::span<const CenteredLoR> offsets, std::span<const double> weights);

/// Method-of-moments principal variances. The discriminant m4w/3 - m2w^2 is
/// clamped at zero and both variances at `variance_floor`.
PrincipalVariances invert_moments(const WeightedMoments& m, double variance_floor = kDefaultVarianceFloor);

/// Orientation phi0 in (-pi/2, pi/2] minimizing
///
///     sum_i w_i (sigma1^2 sin^2(phi_i - phi0) + sigma2^2 cos^2(phi_i - phi0) - s_c,i^2)^2
///
/// for fixed principal variances. Stationary points come from the closed-form
/// quartic in cos(2 phi0); a 720-point grid with golden-section refinement
/// takes over only if no root survives the residual filter. Returns 0 when
/// the variances are equal within 1e-12.
double solve_orientation(std::span<const CenteredLoR> offsets, std::span<const double> weights,
                         double sigma1_sq, double sigma2_sq);

/// Least-squares principal variances for a fixed orientation, clamped at the
/// floor and reordered (phi0 rotated by pi/2) so that sigma1_sq >= sigma2_sq.
EigenDecomposition2D refine_sigmas(std::span<const CenteredLoR> offsets, std::span<const double> weights,
                                   double phi0, double variance_floor = kDefaultVarianceFloor);

/// Moments -> orientation -> refined variances -> updated orientation, then
/// U D U^T. Eigenvalues of the result are >= variance_floor.
EigenDecomposition2D estimate_principal_axes(std::span<const CenteredLoR> offsets, std::span<const double> weights,
                                             double variance_floor = kDefaultVarianceFloor);

Mat2 estimate_covariance(std::span<const CenteredLoR> offsets, std::span<const double> weights,
                         double variance_floor = kDefaultVarianceFloor);

struct MembershipUpdate {
    MembershipMatrix memberships;
    double loglik_proxy = 0.0;  // sum_i log sum_k tau_k * line integral
};

/// Soft memberships p_ik proportional to tau_k times the line integral of
/// component k along line i, normalized per row in log space. A row whose
/// every term is non-finite falls back to 1/K.
MembershipUpdate compute_memberships(const MixtureModel2D& model, std::span<const LineOfResponse> lors);

inline MembershipMatrix update_memberships(const MixtureModel2D& model, std::span<const LineOfResponse> lors) {
    return compute_memberships(model, lors).memberships;
}

}  // namespace gmmlor

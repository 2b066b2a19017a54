#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gmmlor {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix<double, 2, 2, Eigen::RowMajor>;

/// One bivariate normal component of a mixture.
struct GaussianComponent2D {
    Vec2 mean = Vec2::Zero();
    Mat2 covariance = Mat2::Identity();
    double weight = 1.0;
};

/// A K-component bivariate Gaussian mixture. Weights sum to one.
///
/// The constructor validates the invariants (K >= 1, positive weights that
/// sum to one within 1e-9, symmetric positive semidefinite covariances) and
/// throws std::invalid_argument when one is violated. Use normalized() to
/// build a model from unnormalized weights.
class MixtureModel2D {
public:
    explicit MixtureModel2D(std::vector<GaussianComponent2D> components);

    /// Rescales the weights to sum to one before validating.
    static MixtureModel2D normalized(std::vector<GaussianComponent2D> components);

    std::size_t size() const noexcept { return components_.size(); }
    const GaussianComponent2D& operator[](std::size_t k) const { return components_[k]; }
    const std::vector<GaussianComponent2D>& components() const noexcept { return components_; }

    auto begin() const noexcept { return components_.begin(); }
    auto end() const noexcept { return components_.end(); }

private:
    std::vector<GaussianComponent2D> components_;
};

/// A line of response as a sinogram point: oriented distance `s` from the
/// origin and the angle `phi` between the line and the x-axis.
///
/// The line is {x : -x1 sin(phi) + x2 cos(phi) = s}. Angles outside
/// [-pi/2, pi/2] are folded back by (s, phi) -> (-s, phi -/+ pi), which names
/// the same undirected line.
class LineOfResponse {
public:
    LineOfResponse() = default;
    LineOfResponse(double s, double phi);

    double s() const noexcept { return s_; }
    double phi() const noexcept { return phi_; }

    friend bool operator==(const LineOfResponse&, const LineOfResponse&) = default;

private:
    double s_ = 0.0;
    double phi_ = 0.0;
};

/// N x K responsibilities p_ik; every row is a probability vector.
///
/// Stored column-major so each component's column is a contiguous span.
class MembershipMatrix {
public:
    MembershipMatrix() = default;

    /// Validates entries in [0, 1] and row sums of 1 within 1e-9.
    explicit MembershipMatrix(Eigen::MatrixXd entries);

    static MembershipMatrix one_hot(std::span<const std::size_t> labels, std::size_t num_components);
    static MembershipMatrix uniform(std::size_t num_events, std::size_t num_components);

    std::size_t rows() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
    double operator()(std::size_t i, std::size_t k) const { return entries_(i, k); }

    std::span<const double> column(std::size_t k) const {
        return {entries_.col(static_cast<Eigen::Index>(k)).data(), rows()};
    }

    /// Column masses L_k = sum_i p_ik.
    std::vector<double> masses() const;

    const Eigen::MatrixXd& entries() const noexcept { return entries_; }

private:
    Eigen::MatrixXd entries_;
};

/// Principal variances and major-axis angle of a 2x2 covariance.
///
/// sigma1_sq is the variance along u1 = (cos phi0, sin phi0), sigma2_sq the
/// variance along u2 = (-sin phi0, cos phi0). sigma1_sq >= sigma2_sq and
/// phi0 lies in (-pi/2, pi/2].
struct EigenDecomposition2D {
    double sigma1_sq = 0.0;
    double sigma2_sq = 0.0;
    double phi0 = 0.0;
};

/// Maps any angle onto the canonical orientation range (-pi/2, pi/2].
double canonical_orientation(double phi0) noexcept;

/// Bivariate normal density of a single component (weight not applied).
double component_density(const GaussianComponent2D& component, const Vec2& point);

/// Mixture density sum_k tau_k f(x; mu_k, Sigma_k).
/// Throws SingularCovarianceError if a covariance determinant is <= 1e-300.
double density(const MixtureModel2D& model, const Vec2& point);

/// U D U^T with U = [u1 u2] built from phi0.
Mat2 covariance_from_eigen(const EigenDecomposition2D& e);

/// Closed-form symmetric 2x2 eigendecomposition. Isotropic input
/// (eigenvalue gap <= 1e-12) gets phi0 = 0. Rejects non-symmetric input
/// with std::invalid_argument.
EigenDecomposition2D eigen_from_covariance(const Mat2& c);

/// Sinusoid traced in the sinogram by a point: -x sin(phi) + y cos(phi).
inline double sinusoid(const Vec2& point, double phi) {
    return -point.x() * std::sin(phi) + point.y() * std::cos(phi);
}

}  // namespace gmmlor

#include "gmmlor/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gmmlor/error.hpp"

namespace gmmlor {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSymmetryTol = 1e-12;
constexpr double kWeightSumTol = 1e-9;
constexpr double kMinDeterminant = 1e-300;

void validate_component(const GaussianComponent2D& c, std::size_t k) {
    const Mat2& s = c.covariance;
    if (!s.allFinite() || !c.mean.allFinite() || !std::isfinite(c.weight)) {
        throw std::invalid_argument("component " + std::to_string(k) + " has non-finite parameters");
    }
    if (std::abs(s(0, 1) - s(1, 0)) > kSymmetryTol) {
        throw std::invalid_argument("component " + std::to_string(k) + " covariance is not symmetric");
    }
    // PSD for a symmetric 2x2: non-negative diagonal and determinant.
    const double scale = std::max(1.0, std::abs(s(0, 0)) + std::abs(s(1, 1)));
    if (s(0, 0) < 0.0 || s(1, 1) < 0.0 || s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0) < -1e-15 * scale * scale) {
        throw std::invalid_argument("component " + std::to_string(k) + " covariance is not positive semidefinite");
    }
    if (!(c.weight > 0.0)) {
        throw std::invalid_argument("component " + std::to_string(k) + " weight must be positive");
    }
}

}  // namespace

MixtureModel2D::MixtureModel2D(std::vector<GaussianComponent2D> components)
    : components_(std::move(components)) {
    if (components_.empty()) {
        throw std::invalid_argument("mixture needs at least one component");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        validate_component(components_[k], k);
        total += components_[k].weight;
    }
    if (std::abs(total - 1.0) > kWeightSumTol) {
        throw std::invalid_argument("mixture weights must sum to one");
    }
}

MixtureModel2D MixtureModel2D::normalized(std::vector<GaussianComponent2D> components) {
    double total = 0.0;
    for (const auto& c : components) total += c.weight;
    if (!(total > 0.0)) {
        throw std::invalid_argument("mixture weights must have a positive sum");
    }
    for (auto& c : components) c.weight /= total;
    return MixtureModel2D(std::move(components));
}

LineOfResponse::LineOfResponse(double s, double phi) : s_(s), phi_(phi) {
    if (!std::isfinite(s) || !std::isfinite(phi)) {
        throw std::invalid_argument("line of response must be finite");
    }
    if (phi_ > kPi / 2 || phi_ < -kPi / 2) {
        // Shift by a whole number of half-turns; each one flips the s axis.
        const double turns = std::round(phi_ / kPi);
        phi_ -= turns * kPi;
        if (std::fmod(std::abs(turns), 2.0) == 1.0) s_ = -s_;
        if (phi_ > kPi / 2) {
            phi_ -= kPi;
            s_ = -s_;
        } else if (phi_ < -kPi / 2) {
            phi_ += kPi;
            s_ = -s_;
        }
    }
}

MembershipMatrix::MembershipMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    if (entries_.cols() < 1) {
        throw std::invalid_argument("membership matrix needs at least one component");
    }
    for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
        double row = 0.0;
        for (Eigen::Index k = 0; k < entries_.cols(); ++k) {
            const double p = entries_(i, k);
            if (!(p >= 0.0 && p <= 1.0)) {
                throw std::invalid_argument("membership probabilities must lie in [0, 1]");
            }
            row += p;
        }
        if (std::abs(row - 1.0) > 1e-9) {
            throw std::invalid_argument("membership row " + std::to_string(i) + " does not sum to one");
        }
    }
}

MembershipMatrix MembershipMatrix::one_hot(std::span<const std::size_t> labels, std::size_t num_components) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                                              static_cast<Eigen::Index>(num_components));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_components) {
            throw std::invalid_argument("label out of range");
        }
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
    }
    return MembershipMatrix(std::move(m));
}

MembershipMatrix MembershipMatrix::uniform(std::size_t num_events, std::size_t num_components) {
    if (num_components == 0) {
        throw std::invalid_argument("membership matrix needs at least one component");
    }
    return MembershipMatrix(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(num_events),
                                                      static_cast<Eigen::Index>(num_components),
                                                      1.0 / static_cast<double>(num_components)));
}

std::vector<double> MembershipMatrix::masses() const {
    std::vector<double> out(cols(), 0.0);
    for (std::size_t k = 0; k < cols(); ++k) {
        for (double p : column(k)) out[k] += p;
    }
    return out;
}

double canonical_orientation(double phi0) noexcept {
    double r = std::remainder(phi0, kPi);  // [-pi/2, pi/2]
    if (r <= -kPi / 2) r += kPi;
    return r;
}

double component_density(const GaussianComponent2D& component, const Vec2& point) {
    const Mat2& s = component.covariance;
    const double det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    if (!(det > kMinDeterminant)) {
        throw SingularCovarianceError("covariance determinant underflows");
    }
    const Vec2 d = point - component.mean;
    // Quadratic form with the adjugate inverse.
    const double q = (s(1, 1) * d.x() * d.x() - 2.0 * s(0, 1) * d.x() * d.y() + s(0, 0) * d.y() * d.y()) / det;
    return std::exp(-0.5 * q) / (2.0 * kPi * std::sqrt(det));
}

double density(const MixtureModel2D& model, const Vec2& point) {
    double sum = 0.0;
    for (const auto& c : model) sum += c.weight * component_density(c, point);
    return sum;
}

Mat2 covariance_from_eigen(const EigenDecomposition2D& e) {
    const double c = std::cos(e.phi0);
    const double s = std::sin(e.phi0);
    Mat2 u;
    u << c, -s,
         s, c;
    const Eigen::DiagonalMatrix<double, 2> d(e.sigma1_sq, e.sigma2_sq);
    Mat2 out = u * d * u.transpose();
    out(1, 0) = out(0, 1);
    return out;
}

EigenDecomposition2D eigen_from_covariance(const Mat2& c) {
    if (!c.allFinite() || std::abs(c(0, 1) - c(1, 0)) > kSymmetryTol) {
        throw std::invalid_argument("eigen_from_covariance: matrix is not symmetric");
    }
    const double b = 0.5 * (c(0, 1) + c(1, 0));
    const double half_trace = 0.5 * (c(0, 0) + c(1, 1));
    const double half_diff = 0.5 * (c(0, 0) - c(1, 1));
    const double radius = std::hypot(half_diff, b);

    EigenDecomposition2D e;
    e.sigma1_sq = half_trace + radius;
    e.sigma2_sq = std::max(0.0, half_trace - radius);
    if (2.0 * radius <= kSymmetryTol) {
        e.phi0 = 0.0;
    } else {
        e.phi0 = canonical_orientation(0.5 * std::atan2(b, half_diff));
    }
    return e;
}

}  // namespace gmmlor

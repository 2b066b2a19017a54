#include "gmmlor/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gmmlor {
namespace {

constexpr std::size_t kMaxMatchComponents = 8;
constexpr double kDensityFloor = 1e-300;

}  // namespace

Permutation match_components(const MixtureModel2D& estimated, const MixtureModel2D& truth) {
    const std::size_t k_count = truth.size();
    if (estimated.size() != k_count) {
        throw std::invalid_argument("match_components: component counts differ");
    }
    if (k_count > kMaxMatchComponents) {
        throw std::invalid_argument("match_components: at most 8 components are supported");
    }
    Permutation perm(k_count);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Permutation best = perm;
    double best_mean = std::numeric_limits<double>::infinity();
    double best_cov = std::numeric_limits<double>::infinity();
    do {
        double mean_total = 0.0;
        double cov_total = 0.0;
        for (std::size_t t = 0; t < k_count; ++t) {
            mean_total += (estimated[perm[t]].mean - truth[t].mean).norm();
            cov_total += (estimated[perm[t]].covariance - truth[t].covariance).norm();
        }
        if (mean_total < best_mean || (mean_total == best_mean && cov_total < best_cov)) {
            best_mean = mean_total;
            best_cov = cov_total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::vector<ComponentErrors> parameter_errors(const MixtureModel2D& estimated, const MixtureModel2D& truth,
                                              const Permutation& matching) {
    if (estimated.size() != truth.size() || matching.size() != truth.size()) {
        throw std::invalid_argument("parameter_errors: sizes differ");
    }
    std::vector<ComponentErrors> out(truth.size());
    for (std::size_t t = 0; t < truth.size(); ++t) {
        const auto& e = estimated[matching.at(t)];
        out[t].mean_error = (e.mean - truth[t].mean).norm();
        out[t].covariance_error = (e.covariance - truth[t].covariance).norm();  // Frobenius
        out[t].weight_error = std::abs(e.weight - truth[t].weight);
    }
    return out;
}

BoundingBox bounding_box(const std::vector<const MixtureModel2D*>& models, double sigmas) {
    BoundingBox box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    double max_sd = 0.0;
    for (const auto* m : models) {
        for (const auto& c : *m) {
            box.x_min = std::min(box.x_min, c.mean.x());
            box.x_max = std::max(box.x_max, c.mean.x());
            box.y_min = std::min(box.y_min, c.mean.y());
            box.y_max = std::max(box.y_max, c.mean.y());
            max_sd = std::max(max_sd, std::sqrt(eigen_from_covariance(c.covariance).sigma1_sq));
        }
    }
    const double pad = sigmas * max_sd;
    box.x_min -= pad;
    box.x_max += pad;
    box.y_min -= pad;
    box.y_max += pad;
    return box;
}

double kl_divergence(const MixtureModel2D& estimated, const MixtureModel2D& truth, std::size_t grid) {
    if (grid == 0) throw std::invalid_argument("kl_divergence: grid must be positive");
    const auto box = bounding_box({&estimated, &truth}, 6.0);
    const double hx = (box.x_max - box.x_min) / static_cast<double>(grid);
    const double hy = (box.y_max - box.y_min) / static_cast<double>(grid);
    double total = 0.0;
    for (std::size_t j = 0; j < grid; ++j) {
        const double y = box.y_min + (static_cast<double>(j) + 0.5) * hy;
        double row = 0.0;
        for (std::size_t i = 0; i < grid; ++i) {
            const Vec2 x(box.x_min + (static_cast<double>(i) + 0.5) * hx, y);
            const double p = density(estimated, x);
            if (p <= 0.0) continue;
            const double q = density(truth, x);
            row += p * std::log(std::max(p, kDensityFloor) / std::max(q, kDensityFloor));
        }
        total += row;
    }
    return total * hx * hy;
}

FitReport evaluate(const MixtureModel2D& estimated, const MixtureModel2D& truth, std::size_t grid) {
    FitReport report;
    report.matching = match_components(estimated, truth);
    report.components = parameter_errors(estimated, truth, report.matching);
    report.kl_divergence = kl_divergence(estimated, truth, grid);
    return report;
}

}  // namespace gmmlor

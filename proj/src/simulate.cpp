#include "gmmlor/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace gmmlor {
namespace {

constexpr std::uint64_t kShuffleStream = 0x53485546464c45ULL;  // "SHUFFLE"

}  // namespace

Mat2 cholesky_2x2(const Mat2& covariance) {
    const double a = std::max(0.0, covariance(0, 0));
    const double l00 = std::sqrt(a);
    const double l10 = l00 > 0.0 ? covariance(1, 0) / l00 : 0.0;
    const double l11 = std::sqrt(std::max(0.0, covariance(1, 1) - l10 * l10));
    Mat2 l;
    l << l00, 0.0,
         l10, l11;
    return l;
}

LineOfResponse sample_event(const GaussianComponent2D& component, Rng& rng) {
    const auto [z0, z1] = rng.normal_pair();
    const Vec2 x = component.mean + cholesky_2x2(component.covariance) * Vec2(z0, z1);
    const double phi = rng.uniform(-std::numbers::pi / 2, std::numbers::pi / 2);
    return {sinusoid(x, phi), phi};
}

LoRDataset generate(const SimulationConfig& config) {
    const auto& truth = config.truth;
    if (config.counts.size() != truth.size()) {
        throw std::invalid_argument("one event count per component is required");
    }
    const std::size_t total = std::accumulate(config.counts.begin(), config.counts.end(), std::size_t{0});
    if (total == 0) {
        throw std::invalid_argument("at least one event count must be positive");
    }

    LoRDataset out;
    out.lors.reserve(total);
    std::vector<std::size_t> labels;
    labels.reserve(total);

    Rng rng(config.seed);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        for (std::size_t i = 0; i < config.counts[k]; ++i) {
            out.lors.push_back(sample_event(truth[k], rng));
            labels.push_back(k);
        }
    }

    if (config.shuffle) {
        std::vector<std::size_t> order(total);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
        gmmlor::shuffle(order.begin(), order.end(), shuffle_rng);
        std::vector<LineOfResponse> lors(total);
        std::vector<std::size_t> shuffled_labels(total);
        for (std::size_t i = 0; i < total; ++i) {
            lors[i] = out.lors[order[i]];
            shuffled_labels[i] = labels[order[i]];
        }
        out.lors = std::move(lors);
        labels = std::move(shuffled_labels);
    }
    out.labels = std::move(labels);
    return out;
}

std::vector<std::size_t> apportion(const MixtureModel2D& model, std::size_t total) {
    const std::size_t k = model.size();
    std::vector<std::size_t> counts(k);
    std::vector<double> remainders(k);
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < k; ++j) {
        const double exact = model[j].weight * static_cast<double>(total);
        counts[j] = static_cast<std::size_t>(std::floor(exact));
        remainders[j] = exact - static_cast<double>(counts[j]);
        assigned += counts[j];
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t j = 0; assigned < total; j = (j + 1) % k, ++assigned) {
        ++counts[order[j]];
    }
    // Floating-point floor can overshoot by one when weights round up.
    for (std::size_t j = k; assigned > total && j-- > 0;) {
        if (counts[order[j]] > 0) {
            --counts[order[j]];
            --assigned;
        }
    }
    return counts;
}

}  // namespace gmmlor

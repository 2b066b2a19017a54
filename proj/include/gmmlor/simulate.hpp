#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gmmlor/model.hpp"
#include "gmmlor/random.hpp"

namespace gmmlor {

struct SimulationConfig {
    MixtureModel2D truth;
    std::vector<std::size_t> counts;  // events per component
    std::uint64_t seed = 0;
    bool shuffle = false;
};

struct LoRDataset {
    std::vector<LineOfResponse> lors;
    std::optional<std::vector<std::size_t>> labels;
};

/// Draws one annihilation point x ~ N(mu, Sigma) and one angle
/// phi ~ U[-pi/2, pi/2] and returns the line through x at that angle.
///
/// Consumes exactly three uniforms per call: two for Box-Muller, then one
/// for the angle.
LineOfResponse sample_event(const GaussianComponent2D& component, Rng& rng);

/// Exactly counts[k] events per component, component-blocked, with labels.
/// With config.shuffle the order is permuted by a sub-stream derived from
/// the seed, so the set of events does not depend on the flag.
LoRDataset generate(const SimulationConfig& config);

/// Splits a total event count across components in proportion to their
/// weights (largest-remainder rounding; ties go to the lower index).
std::vector<std::size_t> apportion(const MixtureModel2D& model, std::size_t total);

/// Lower Cholesky factor of a 2x2 PSD matrix.
Mat2 cholesky_2x2(const Mat2& covariance);

}  // namespace gmmlor

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gmmlor/estimate.hpp"
#include "gmmlor/model.hpp"

namespace gmmlor {

struct FitState;

struct FitConfig {
    std::size_t num_components = 1;
    int max_iters_phase1 = 50;
    int max_iters_phase2 = 200;
    double weight_tol = 1e-3;    // on max_k |delta tau_k|
    double mean_tol = 1e-6;      // on max_k |delta mu_k| during hard assignment
    double variance_floor = kDefaultVarianceFloor;
    std::uint64_t seed = 0;
    int restarts = 1;

    /// Called with the state after every phase-2 iteration. Not serialized.
    std::function<void(const FitState&)> on_iteration;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

struct IterationRecord {
    int iteration = 0;
    int phase = 1;
    std::vector<double> weights;
    std::optional<double> loglik_proxy;  // absent while assignments are hard
};

struct FitState {
    MixtureModel2D model;
    MembershipMatrix memberships;
    int iteration = 0;
    int phase = 1;
    bool converged = false;
};

struct FitResult {
    FitState state;
    std::vector<IterationRecord> trace;
    std::size_t restart = 0;  // index of the restart that won

    const MixtureModel2D& model() const noexcept { return state.model; }
};

/// Two-phase estimation of a K-component mixture from lines of response.
///
/// Phase 1 starts from a seeded, balanced random hard assignment and
/// alternates per-component sinusoid fits with reassignment of every line to
/// the component whose sinusoid is closest, then estimates covariances from
/// the hard memberships. Phase 2 iterates soft memberships, means, and
/// covariances until the largest weight change drops below weight_tol.
///
/// Restart 0 is seeded with `seed`; restart r > 0 uses derive_seed(seed, r).
/// The result with the largest final log-likelihood proxy is kept.
///
/// Requires N >= 5K. Throws ComponentCollapseError if a component's mass
/// stays below N / K * 1e-3 for three consecutive iterations.
FitResult fit(std::span<const LineOfResponse> lors, const FitConfig& config);

/// Same as fit() with an explicit initial hard assignment; restarts are
/// ignored.
FitResult fit(std::span<const LineOfResponse> lors, const FitConfig& config,
              std::span<const std::size_t> initial_labels);

/// Balanced random labels: a seeded permutation dealt round-robin.
std::vector<std::size_t> balanced_random_labels(std::size_t num_events, std::size_t num_components,
                                                std::uint64_t seed);

}  // namespace gmmlor

#include "gmmlor/fit.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gmmlor/error.hpp"
#include "gmmlor/random.hpp"

namespace gmmlor {
namespace {

constexpr int kCollapsePatience = 3;
constexpr double kCollapseFraction = 1e-3;
constexpr std::size_t kMinEventsPerComponent = 5;

class MassMonitor {
public:
    MassMonitor(std::size_t num_events, std::size_t num_components)
        : threshold_(static_cast<double>(num_events) / static_cast<double>(num_components) * kCollapseFraction),
          streak_(num_components, 0) {}

    void observe(const std::vector<double>& masses) {
        for (std::size_t k = 0; k < masses.size(); ++k) {
            if (masses[k] < threshold_) {
                if (++streak_[k] >= kCollapsePatience || masses[k] <= 0.0) {
                    throw ComponentCollapseError(k, "component " + std::to_string(k) + " collapsed (mass " +
                                                        std::to_string(masses[k]) + ")");
                }
            } else {
                streak_[k] = 0;
            }
        }
    }

private:
    double threshold_;
    std::vector<int> streak_;
};

std::vector<double> weights_from_masses(const std::vector<double>& masses) {
    const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
    std::vector<double> w(masses.size());
    for (std::size_t k = 0; k < masses.size(); ++k) w[k] = masses[k] / total;
    return w;
}

std::size_t closest_sinusoid(const LineOfResponse& lor, const std::vector<Vec2>& means) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < means.size(); ++k) {
        const double d = std::abs(lor.s() - sinusoid(means[k], lor.phi()));
        if (d < best_dist) {
            best_dist = d;
            best = k;
        }
    }
    return best;
}

MixtureModel2D assemble(std::span<const LineOfResponse> lors, const MembershipMatrix& memberships,
                        const std::vector<Vec2>& means, double variance_floor) {
    const auto weights = weights_from_masses(memberships.masses());
    std::vector<GaussianComponent2D> components(means.size());
    for (std::size_t k = 0; k < means.size(); ++k) {
        const auto column = memberships.column(k);
        components[k].mean = means[k];
        components[k].covariance = estimate_covariance(center_offsets(lors, means[k]), column, variance_floor);
        components[k].weight = weights[k];
    }
    return MixtureModel2D::normalized(std::move(components));
}

FitResult run_fit(std::span<const LineOfResponse> lors, const FitConfig& config,
                  std::vector<std::size_t> labels) {
    const std::size_t n = lors.size();
    const std::size_t k_count = config.num_components;
    MassMonitor monitor(n, k_count);
    std::vector<IterationRecord> trace;
    int iteration = 0;

    // Phase 1: hard assignment.
    std::vector<Vec2> means(k_count, Vec2::Zero());
    std::vector<bool> fitted(k_count, false);
    MembershipMatrix hard;
    for (int it = 1; it <= config.max_iters_phase1; ++it) {
        ++iteration;
        hard = MembershipMatrix::one_hot(labels, k_count);
        const auto masses = hard.masses();
        monitor.observe(masses);

        double max_change = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            Vec2 mu;
            try {
                mu = fit_mean(lors, hard.column(k));
            } catch (const DegenerateGeometryError&) {
                if (!fitted[k]) throw;
                continue;  // too few lines this round; keep the previous mean
            }
            max_change = std::max(max_change, fitted[k] ? (mu - means[k]).norm()
                                                        : std::numeric_limits<double>::infinity());
            means[k] = mu;
            fitted[k] = true;
        }
        trace.push_back({iteration, 1, weights_from_masses(masses), std::nullopt});
        if (max_change < config.mean_tol || it == config.max_iters_phase1) break;

        for (std::size_t i = 0; i < n; ++i) labels[i] = closest_sinusoid(lors[i], means);
    }

    FitState state{assemble(lors, hard, means, config.variance_floor), hard, iteration, 1, false};

    // Phase 2: soft memberships.
    for (int it = 1; it <= config.max_iters_phase2; ++it) {
        ++iteration;
        auto update = compute_memberships(state.model, lors);
        monitor.observe(update.memberships.masses());
        for (std::size_t k = 0; k < k_count; ++k) means[k] = fit_mean(lors, update.memberships.column(k));
        MixtureModel2D next = assemble(lors, update.memberships, means, config.variance_floor);

        double max_delta = 0.0;
        std::vector<double> weights(k_count);
        for (std::size_t k = 0; k < k_count; ++k) {
            weights[k] = next[k].weight;
            max_delta = std::max(max_delta, std::abs(next[k].weight - state.model[k].weight));
        }
        trace.push_back({iteration, 2, std::move(weights), update.loglik_proxy});
        state = FitState{std::move(next), std::move(update.memberships), iteration, 2, max_delta < config.weight_tol};
        if (config.on_iteration) config.on_iteration(state);
        if (state.converged) break;
    }
    return {std::move(state), std::move(trace), 0};
}

void check_input(std::span<const LineOfResponse> lors, const FitConfig& config) {
    config.validate();
    if (lors.size() < kMinEventsPerComponent * config.num_components) {
        throw std::invalid_argument("fit needs at least 5 lines of response per component");
    }
}

}  // namespace

void FitConfig::validate() const {
    if (num_components < 1) throw std::invalid_argument("K must be at least 1");
    if (max_iters_phase1 < 1 || max_iters_phase2 < 1) throw std::invalid_argument("iteration limits must be positive");
    if (!(weight_tol > 0.0) || !(mean_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
    if (!(variance_floor > 0.0)) throw std::invalid_argument("variance_floor must be positive");
    if (restarts < 1) throw std::invalid_argument("restarts must be at least 1");
}

std::vector<std::size_t> balanced_random_labels(std::size_t num_events, std::size_t num_components,
                                                std::uint64_t seed) {
    std::vector<std::size_t> order(num_events);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> labels(num_events);
    for (std::size_t i = 0; i < num_events; ++i) labels[order[i]] = i % num_components;
    return labels;
}

FitResult fit(std::span<const LineOfResponse> lors, const FitConfig& config,
              std::span<const std::size_t> initial_labels) {
    check_input(lors, config);
    if (initial_labels.size() != lors.size()) {
        throw std::invalid_argument("one initial label per line of response is required");
    }
    return run_fit(lors, config, {initial_labels.begin(), initial_labels.end()});
}

FitResult fit(std::span<const LineOfResponse> lors, const FitConfig& config) {
    check_input(lors, config);
    std::optional<FitResult> best;
    std::exception_ptr first_error;
    for (int r = 0; r < config.restarts; ++r) {
        const std::uint64_t seed = r == 0 ? config.seed : derive_seed(config.seed, static_cast<std::uint64_t>(r));
        try {
            auto result = run_fit(lors, config, balanced_random_labels(lors.size(), config.num_components, seed));
            result.restart = static_cast<std::size_t>(r);
            const double score = result.trace.back().loglik_proxy.value_or(-std::numeric_limits<double>::infinity());
            const double best_score = best ? best->trace.back().loglik_proxy.value_or(
                                                 -std::numeric_limits<double>::infinity())
                                           : -std::numeric_limits<double>::infinity();
            if (!best || score > best_score) best = std::move(result);
        } catch (const Error&) {
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (!best) std::rethrow_exception(first_error);
    return std::move(*best);
}

}  // namespace gmmlor

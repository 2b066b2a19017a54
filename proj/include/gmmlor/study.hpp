#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gmmlor/fit.hpp"
#include "gmmlor/metrics.hpp"
#include "gmmlor/model.hpp"

namespace gmmlor {

/// A replicated simulate -> fit -> evaluate experiment.
struct StudySpec {
    MixtureModel2D truth;
    std::vector<std::size_t> counts;
    FitConfig fit;  // num_components is taken from the truth model
    std::size_t replicates = 100;
    std::uint64_t master_seed = 0;
    std::size_t jobs = 1;
    std::size_t kl_grid = kDefaultKlGrid;
};

enum class ReplicateStatus { ok, max_iterations, collapsed, numeric_failure };

const char* to_string(ReplicateStatus status) noexcept;

struct ReplicateOutcome {
    std::size_t index = 0;
    std::uint64_t seed = 0;  // derive_seed(master_seed, index)
    ReplicateStatus status = ReplicateStatus::ok;
    int iterations = 0;
    FitReport report;  // empty unless a model was produced
    std::vector<GaussianComponent2D> estimate;

    bool succeeded() const noexcept {
        return status == ReplicateStatus::ok || status == ReplicateStatus::max_iterations;
    }
};

struct StudySummary {
    std::size_t replicates = 0;
    std::size_t succeeded = 0;
    std::vector<ComponentErrors> average_errors;  // over successful replicates, per truth component
    double kl_mean = 0.0;
    double kl_max = 0.0;
};

/// Replicate r simulates with seed derive_seed(master_seed, r) and fits with
/// derive_seed(that seed, 0). Replicates run on `jobs` threads; outcomes are
/// returned in replicate order and do not depend on the thread count.
std::vector<ReplicateOutcome> run_study(const StudySpec& spec);

ReplicateOutcome run_replicate(const StudySpec& spec, std::size_t index);

StudySummary summarize(const std::vector<ReplicateOutcome>& outcomes, std::size_t num_components);

/// replicate,seed,status,iterations,mean_err_1..K,cov_err_1..K,weight_err_1..K,kl
std::string study_csv(const std::vector<ReplicateOutcome>& outcomes, std::size_t num_components);

std::string summary_json(const StudySummary& summary);

}  // namespace gmmlor

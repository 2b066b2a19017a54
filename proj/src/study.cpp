#include "gmmlor/study.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "gmmlor/error.hpp"
#include "gmmlor/io.hpp"
#include "gmmlor/random.hpp"
#include "gmmlor/simulate.hpp"

namespace gmmlor {

const char* to_string(ReplicateStatus status) noexcept {
    switch (status) {
        case ReplicateStatus::ok: return "ok";
        case ReplicateStatus::max_iterations: return "max_iterations";
        case ReplicateStatus::collapsed: return "collapsed";
        case ReplicateStatus::numeric_failure: return "numeric_failure";
    }
    return "unknown";
}

ReplicateOutcome run_replicate(const StudySpec& spec, std::size_t index) {
    ReplicateOutcome out;
    out.index = index;
    out.seed = derive_seed(spec.master_seed, index);

    const auto data = generate({spec.truth, spec.counts, out.seed, false});
    FitConfig config = spec.fit;
    config.num_components = spec.truth.size();
    config.seed = derive_seed(out.seed, 0);
    try {
        const auto result = fit(data.lors, config);
        out.iterations = result.state.iteration;
        out.status = result.state.converged ? ReplicateStatus::ok : ReplicateStatus::max_iterations;
        out.report = evaluate(result.model(), spec.truth, spec.kl_grid);
        out.estimate = result.model().components();
    } catch (const ComponentCollapseError&) {
        out.status = ReplicateStatus::collapsed;
    } catch (const Error&) {
        out.status = ReplicateStatus::numeric_failure;
    } catch (const std::invalid_argument&) {
        out.status = ReplicateStatus::numeric_failure;
    }
    return out;
}

std::vector<ReplicateOutcome> run_study(const StudySpec& spec) {
    std::vector<ReplicateOutcome> outcomes(spec.replicates);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < spec.replicates; r = next++) outcomes[r] = run_replicate(spec, r);
    };
    const std::size_t jobs = std::clamp<std::size_t>(spec.jobs, 1, std::max<std::size_t>(spec.replicates, 1));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    return outcomes;
}

StudySummary summarize(const std::vector<ReplicateOutcome>& outcomes, std::size_t num_components) {
    StudySummary s;
    s.replicates = outcomes.size();
    s.average_errors.assign(num_components, {});
    for (const auto& o : outcomes) {
        if (!o.succeeded()) continue;
        ++s.succeeded;
        for (std::size_t k = 0; k < num_components; ++k) {
            s.average_errors[k].mean_error += o.report.components[k].mean_error;
            s.average_errors[k].covariance_error += o.report.components[k].covariance_error;
            s.average_errors[k].weight_error += o.report.components[k].weight_error;
        }
        s.kl_mean += o.report.kl_divergence;
        s.kl_max = std::max(s.kl_max, o.report.kl_divergence);
    }
    if (s.succeeded > 0) {
        const double n = static_cast<double>(s.succeeded);
        for (auto& e : s.average_errors) {
            e.mean_error /= n;
            e.covariance_error /= n;
            e.weight_error /= n;
        }
        s.kl_mean /= n;
    }
    return s;
}

std::string study_csv(const std::vector<ReplicateOutcome>& outcomes, std::size_t num_components) {
    std::ostringstream out;
    out << "replicate,seed,status,iterations";
    for (const char* name : {"mean_err", "cov_err", "weight_err"}) {
        for (std::size_t k = 1; k <= num_components; ++k) out << ',' << name << '_' << k;
    }
    out << ",kl\n";
    for (const auto& o : outcomes) {
        out << o.index << ',' << o.seed << ',' << to_string(o.status) << ',' << o.iterations;
        const bool ok = o.succeeded();
        for (int field = 0; field < 3; ++field) {
            for (std::size_t k = 0; k < num_components; ++k) {
                out << ',';
                if (!ok) continue;
                const auto& e = o.report.components[k];
                out << io::format_double(field == 0 ? e.mean_error : field == 1 ? e.covariance_error : e.weight_error);
            }
        }
        out << ',';
        if (ok) out << io::format_double(o.report.kl_divergence);
        out << '\n';
    }
    return out.str();
}

std::string summary_json(const StudySummary& s) {
    nlohmann::ordered_json j;
    j["replicates"] = s.replicates;
    j["succeeded"] = s.succeeded;
    j["average_errors"] = nlohmann::ordered_json::array();
    for (const auto& e : s.average_errors) {
        j["average_errors"].push_back(
            {{"mean_error", e.mean_error}, {"cov_error", e.covariance_error}, {"weight_error", e.weight_error}});
    }
    j["kl_mean"] = s.kl_mean;
    j["kl_max"] = s.kl_max;
    j["format"] = io::kStudyFormat;
    return j.dump(2) + "\n";
}

}  // namespace gmmlor

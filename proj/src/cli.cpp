#include "gmmlor/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "gmmlor/error.hpp"
#include "gmmlor/fit.hpp"
#include "gmmlor/io.hpp"
#include "gmmlor/metrics.hpp"
#include "gmmlor/simulate.hpp"
#include "gmmlor/study.hpp"

namespace gmmlor::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr double kSuccessFraction = 0.95;
constexpr std::size_t kDefaultRasterSize = 256;
constexpr double kRasterSigmas = 4.0;

struct GenerateArgs {
    std::string model;
    std::string config;
    std::vector<std::size_t> counts;
    std::optional<std::size_t> total;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool labels = false;
    bool shuffle = false;
};

struct FitArgs {
    std::string input;
    std::string config;
    std::optional<std::size_t> k;
    std::optional<std::uint64_t> seed;
    std::optional<int> restarts;
    std::string out;
    std::string trace;
};

struct EvaluateArgs {
    std::string model;
    std::string truth;
    std::string out;
    std::string plot_data;
    std::size_t raster = kDefaultRasterSize;
    std::size_t kl_grid = kDefaultKlGrid;
};

struct ReplicateArgs {
    std::string model;
    std::string config;
    std::vector<std::size_t> counts;
    std::optional<std::size_t> total;
    std::size_t replicates = 100;
    std::uint64_t seed = 0;
    std::optional<int> restarts;
    std::size_t jobs = 1;
    std::string out;
    bool plot_data = false;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("gmmlor");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("GMMLOR_LOG")) {
        spdlog::set_level(spdlog::level::from_str(env));
    }
}

std::string manifest_json(std::string_view artifact_format, ordered_json fields) {
    ordered_json j;
    j["format"] = io::kManifestFormat;
    j["artifact_format"] = artifact_format;
    for (auto& [key, value] : fields.items()) j[key] = value;
    return j.dump(2) + "\n";
}

fs::path sibling(const fs::path& path, std::string_view suffix) {
    fs::path out = path;
    out += suffix;
    return out;
}

std::vector<std::size_t> resolve_counts(const MixtureModel2D& truth, const std::vector<std::size_t>& counts,
                                        const std::optional<std::size_t>& total) {
    if (!counts.empty() && total) throw UsageError("--counts and --n are mutually exclusive");
    if (!counts.empty()) {
        if (counts.size() != truth.size()) {
            throw UsageError(fmt::format("--counts has {} entries but the model has {} components", counts.size(),
                                         truth.size()));
        }
        return counts;
    }
    if (!total) throw UsageError("one of --counts or --n is required");
    return apportion(truth, *total);
}

int cmd_generate(const GenerateArgs& args) {
    SimulationConfig config = [&] {
        if (!args.config.empty()) {
            auto c = io::simulation_config_from_json(io::read_text_file(args.config));
            if (!args.counts.empty() || args.total) c.counts = resolve_counts(c.truth, args.counts, args.total);
            return c;
        }
        if (args.model.empty()) throw UsageError("--model or --config is required");
        auto truth = io::read_model(args.model);
        auto counts = resolve_counts(truth, args.counts, args.total);
        return SimulationConfig{std::move(truth), std::move(counts), 0, false};
    }();
    if (args.seed) config.seed = *args.seed;
    if (args.shuffle) config.shuffle = true;
    if (config.counts.size() != config.truth.size()) throw UsageError("one count per component is required");

    const auto data = generate(config);
    std::ostringstream csv;
    io::write_lors_csv(csv, data, args.labels);
    io::write_text_file(args.out, csv.str());

    ordered_json fields;
    fields["artifact"] = fs::path(args.out).filename().string();
    fields["seed"] = config.seed;
    fields["counts"] = config.counts;
    fields["truth"] = args.config.empty() ? args.model : args.config;
    fields["shuffle"] = config.shuffle;
    fields["labels"] = args.labels;
    fields["rng"] = "mt19937_64";
    io::write_text_file(sibling(args.out, ".manifest.json"), manifest_json(io::kLorCsvFormat, fields));
    spdlog::info("wrote {} lines of response to {}", data.lors.size(), args.out);
    return kOk;
}

int cmd_fit(const FitArgs& args) {
    FitConfig config;
    if (!args.config.empty()) config = io::fit_config_from_json(io::read_text_file(args.config));
    if (args.k) config.num_components = *args.k;
    if (args.seed) config.seed = *args.seed;
    if (args.restarts) config.restarts = *args.restarts;
    if (!args.k && args.config.empty()) throw UsageError("--k (or a config with K) is required");

    const auto data = io::read_lors(args.input);
    if (data.lors.empty()) throw FormatError(fmt::format("{} has no lines of response", args.input));
    const fs::path trace_path = args.trace.empty() ? sibling(args.out, ".trace.jsonl") : fs::path(args.trace);

    FitResult result = [&] {
        try {
            return fit(data.lors, config);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();
    io::write_text_file(args.out, io::model_to_json(result.model()));
    std::ostringstream trace;
    io::write_trace_jsonl(trace, result.trace);
    io::write_text_file(trace_path, trace.str());

    ordered_json fields;
    fields["artifact"] = fs::path(args.out).filename().string();
    fields["trace"] = trace_path.filename().string();
    fields["trace_format"] = io::kTraceFormat;
    fields["input"] = args.input;
    fields["config"] = ordered_json::parse(io::fit_config_to_json(config));
    fields["iterations"] = result.state.iteration;
    fields["converged"] = result.state.converged;
    fields["restart"] = result.restart;
    io::write_text_file(sibling(args.out, ".manifest.json"), manifest_json(io::kModelFormat, fields));

    if (!result.state.converged) {
        spdlog::warn("stopped at the iteration limit without converging");
        return kMaxIterations;
    }
    return kOk;
}

void write_raster(const fs::path& path, const MixtureModel2D& model, const BoundingBox& box, std::size_t size) {
    std::ostringstream out;
    out << "x,y,value\n";
    const double hx = (box.x_max - box.x_min) / static_cast<double>(size - 1);
    const double hy = (box.y_max - box.y_min) / static_cast<double>(size - 1);
    for (std::size_t j = 0; j < size; ++j) {
        const double y = box.y_min + static_cast<double>(j) * hy;
        for (std::size_t i = 0; i < size; ++i) {
            const double x = box.x_min + static_cast<double>(i) * hx;
            out << io::format_double(x) << ',' << io::format_double(y) << ','
                << io::format_double(density(model, Vec2(x, y))) << '\n';
        }
    }
    io::write_text_file(path, out.str());
}

void write_plot_data(const fs::path& dir, const MixtureModel2D& estimate, const MixtureModel2D& truth,
                     std::size_t size) {
    fs::create_directories(dir);
    const auto box = bounding_box({&estimate, &truth}, kRasterSigmas);
    write_raster(dir / "truth_density.csv", truth, box, size);
    write_raster(dir / "estimate_density.csv", estimate, box, size);
}

int cmd_evaluate(const EvaluateArgs& args) {
    const auto estimate = io::read_model(args.model);
    const auto truth = io::read_model(args.truth);
    if (estimate.size() != truth.size()) {
        throw UsageError(fmt::format("model has {} components but truth has {}", estimate.size(), truth.size()));
    }
    if (args.raster < 2) throw UsageError("--raster must be at least 2");
    const auto report = evaluate(estimate, truth, args.kl_grid);
    const auto text = io::report_to_json(report);
    if (args.out.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
    } else {
        io::write_text_file(args.out, text);
    }
    if (!args.plot_data.empty()) write_plot_data(args.plot_data, estimate, truth, args.raster);
    return kOk;
}

int cmd_replicate(const ReplicateArgs& args) {
    if (args.replicates < 1) throw UsageError("--replicates must be at least 1");
    auto truth = io::read_model(args.model);
    auto counts = resolve_counts(truth, args.counts, args.total);
    FitConfig config;
    if (!args.config.empty()) config = io::fit_config_from_json(io::read_text_file(args.config));
    if (args.restarts) config.restarts = *args.restarts;
    config.num_components = truth.size();
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    StudySpec spec{truth, counts, config, args.replicates, args.seed, args.jobs, kDefaultKlGrid};
    const auto outcomes = run_study(spec);
    const auto summary = summarize(outcomes, truth.size());

    const fs::path dir(args.out);
    fs::create_directories(dir);
    io::write_text_file(dir / "study.csv", study_csv(outcomes, truth.size()));
    io::write_text_file(dir / "summary.json", summary_json(summary));
    ordered_json fields;
    fields["artifact"] = "study.csv";
    fields["summary"] = "summary.json";
    fields["truth"] = args.model;
    fields["counts"] = counts;
    fields["replicates"] = args.replicates;
    fields["master_seed"] = args.seed;
    fields["seed_derivation"] = "splitmix64(master + (index + 1) * 0x9e3779b97f4a7c15)";
    fields["config"] = ordered_json::parse(io::fit_config_to_json(config));
    io::write_text_file(dir / "manifest.json", manifest_json(io::kStudyFormat, fields));

    if (args.plot_data) {
        for (const auto& o : outcomes) {
            if (!o.succeeded()) continue;
            write_plot_data(dir / "plot", MixtureModel2D(o.estimate), truth, kDefaultRasterSize);
            break;
        }
    }
    spdlog::info("{} of {} replicates succeeded; KL mean {:.4g}, max {:.4g}", summary.succeeded,
                 summary.replicates, summary.kl_mean, summary.kl_max);
    const double fraction = static_cast<double>(summary.succeeded) / static_cast<double>(summary.replicates);
    return fraction >= kSuccessFraction ? kOk : kNumericFailure;
}

template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return kBadArgs;
    } catch (const FormatError& e) {
        spdlog::error("{}", e.what());
        return kBadInput;
    } catch (const ComponentCollapseError& e) {
        spdlog::error("component death: {}", e.what());
        return kComponentDeath;
    } catch (const Error& e) {
        spdlog::error("numeric failure: {}", e.what());
        return kNumericFailure;
    } catch (const std::invalid_argument& e) {
        spdlog::error("{}", e.what());
        return kBadArgs;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kBadInput;
    }
}

}  // namespace

int run(int argc, const char* const* argv) {
    if (!spdlog::get("gmmlor")) configure_logging();

    CLI::App app{"Gaussian mixture reconstruction from PET lines of response"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate_cmd = app.add_subcommand("generate", "Simulate lines of response from a truth model");
    generate_cmd->add_option("--model", gen.model, "Truth model JSON");
    generate_cmd->add_option("--config", gen.config, "Simulation config JSON (truth, counts, seed)");
    generate_cmd->add_option("--counts", gen.counts, "Events per component, comma separated")->delimiter(',');
    generate_cmd->add_option("--n", gen.total, "Total events split by the model weights");
    generate_cmd->add_option("--seed", gen.seed, "RNG seed");
    generate_cmd->add_option("--out", gen.out, "Output CSV")->required();
    generate_cmd->add_flag("--labels", gen.labels, "Export the true component label column");
    generate_cmd->add_flag("--shuffle", gen.shuffle, "Shuffle events (seeded)");

    FitArgs fa;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a mixture to a LoR CSV");
    fit_cmd->add_option("--in,input", fa.input, "LoR CSV")->required();
    fit_cmd->add_option("--k", fa.k, "Number of components");
    fit_cmd->add_option("--config", fa.config, "Fit config JSON");
    fit_cmd->add_option("--seed", fa.seed, "Initialization seed");
    fit_cmd->add_option("--restarts", fa.restarts, "Random restarts; the best likelihood proxy wins");
    fit_cmd->add_option("--out", fa.out, "Output model JSON")->required();
    fit_cmd->add_option("--trace", fa.trace, "Iteration trace JSONL (default <out>.trace.jsonl)");

    EvaluateArgs ev;
    auto* eval_cmd = app.add_subcommand("evaluate", "Compare a fitted model with the truth");
    eval_cmd->add_option("--model", ev.model, "Fitted model JSON")->required();
    eval_cmd->add_option("--truth", ev.truth, "Truth model JSON")->required();
    eval_cmd->add_option("--out", ev.out, "Report JSON (default stdout)");
    eval_cmd->add_option("--plot-data", ev.plot_data, "Directory for truth/estimate density rasters");
    eval_cmd->add_option("--raster", ev.raster, "Raster size per axis")->capture_default_str();
    eval_cmd->add_option("--kl-grid", ev.kl_grid, "KL quadrature grid per axis")->capture_default_str();

    ReplicateArgs rep;
    auto* rep_cmd = app.add_subcommand("replicate", "Run a seeded simulate/fit/evaluate study");
    rep_cmd->add_option("--model", rep.model, "Truth model JSON")->required();
    rep_cmd->add_option("--counts", rep.counts, "Events per component, comma separated")->delimiter(',');
    rep_cmd->add_option("--n", rep.total, "Total events split by the model weights");
    rep_cmd->add_option("--config", rep.config, "Fit config JSON");
    rep_cmd->add_option("--replicates", rep.replicates, "Number of replicates")->capture_default_str();
    rep_cmd->add_option("--seed", rep.seed, "Master seed")->capture_default_str();
    rep_cmd->add_option("--restarts", rep.restarts, "Random restarts per fit");
    rep_cmd->add_option("--jobs", rep.jobs, "Worker threads")->capture_default_str();
    rep_cmd->add_option("--out", rep.out, "Output directory")->required();
    rep_cmd->add_flag("--plot-data", rep.plot_data, "Also write density rasters for the first replicate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kBadArgs;
    }

    if (*generate_cmd) return guarded([&] { return cmd_generate(gen); });
    if (*fit_cmd) return guarded([&] { return cmd_fit(fa); });
    if (*eval_cmd) return guarded([&] { return cmd_evaluate(ev); });
    return guarded([&] { return cmd_replicate(rep); });
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"gmmlor"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace gmmlor::cli

#include "gmmlor/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "gmmlor/error.hpp"

namespace gmmlor::io {
namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

std::string_view format_name(std::string_view tag) { return tag.substr(0, tag.find('/')); }

std::string_view format_major(std::string_view tag) {
    const auto slash = tag.find('/');
    if (slash == std::string_view::npos) return {};
    auto rest = tag.substr(slash + 1);
    return rest.substr(0, rest.find('.'));
}

json parse(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("{}: invalid JSON: {}", what, e.what()));
    }
}

void check_optional_tag(const json& j, std::string_view expected) {
    if (j.contains("format")) {
        if (!j["format"].is_string()) throw FormatError("format tag must be a string");
        check_format_tag(j["format"].get<std::string>(), expected);
    }
}

double number(const json& j, std::string_view what) {
    if (!j.is_number()) throw FormatError(fmt::format("{} must be a number", what));
    return j.get<double>();
}

MixtureModel2D model_from(const json& j) {
    check_optional_tag(j, kModelFormat);
    if (!j.contains("components") || !j["components"].is_array()) {
        throw FormatError("model JSON needs a \"components\" array");
    }
    std::vector<GaussianComponent2D> components;
    for (const auto& c : j["components"]) {
        if (!c.is_object() || !c.contains("mean") || !c.contains("cov") || !c.contains("weight")) {
            throw FormatError("each component needs mean, cov and weight");
        }
        const auto& mean = c["mean"];
        const auto& cov = c["cov"];
        if (!mean.is_array() || mean.size() != 2 || !cov.is_array() || cov.size() != 2 ||
            !cov[0].is_array() || cov[0].size() != 2 || !cov[1].is_array() || cov[1].size() != 2) {
            throw FormatError("mean must be [x,y] and cov [[a,b],[b,c]]");
        }
        GaussianComponent2D g;
        g.mean = Vec2(number(mean[0], "mean"), number(mean[1], "mean"));
        g.covariance << number(cov[0][0], "cov"), number(cov[0][1], "cov"),
                        number(cov[1][0], "cov"), number(cov[1][1], "cov");
        g.weight = number(c["weight"], "weight");
        components.push_back(g);
    }
    try {
        return MixtureModel2D(std::move(components));
    } catch (const std::invalid_argument& e) {
        throw FormatError(fmt::format("invalid model: {}", e.what()));
    }
}

ordered_json model_json(const MixtureModel2D& model) {
    ordered_json out;
    out["components"] = ordered_json::array();
    for (const auto& c : model) {
        ordered_json jc;
        jc["mean"] = {c.mean.x(), c.mean.y()};
        jc["cov"] = {{c.covariance(0, 0), c.covariance(0, 1)}, {c.covariance(1, 0), c.covariance(1, 1)}};
        jc["weight"] = c.weight;
        out["components"].push_back(std::move(jc));
    }
    out["format"] = kModelFormat;
    return out;
}

bool parse_double(std::string_view field, double& value) {
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    return ec == std::errc() && ptr == end;
}

}  // namespace

void check_format_tag(std::string_view tag, std::string_view expected) {
    if (format_name(tag) != format_name(expected)) {
        throw FormatError(fmt::format("expected a {} document, got '{}'", format_name(expected), tag));
    }
    if (format_major(tag) != format_major(expected)) {
        throw FormatError(fmt::format("unsupported {} major version in '{}'", format_name(expected), tag));
    }
}

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

std::string model_to_json(const MixtureModel2D& model) { return model_json(model).dump(2) + "\n"; }

MixtureModel2D model_from_json(std::string_view text) { return model_from(parse(text, "model")); }

FitConfig fit_config_from_json(std::string_view text) {
    const json j = parse(text, "fit config");
    if (!j.is_object()) throw FormatError("fit config must be a JSON object");
    check_optional_tag(j, kFitConfigFormat);
    FitConfig c;
    try {
        if (j.contains("K")) c.num_components = j["K"].get<std::size_t>();
        if (j.contains("max_iters_phase1")) c.max_iters_phase1 = j["max_iters_phase1"].get<int>();
        if (j.contains("max_iters_phase2")) c.max_iters_phase2 = j["max_iters_phase2"].get<int>();
        if (j.contains("weight_tol")) c.weight_tol = j["weight_tol"].get<double>();
        if (j.contains("mean_tol")) c.mean_tol = j["mean_tol"].get<double>();
        if (j.contains("variance_floor")) c.variance_floor = j["variance_floor"].get<double>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("restarts")) c.restarts = j["restarts"].get<int>();
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("fit config: {}", e.what()));
    }
    return c;
}

std::string fit_config_to_json(const FitConfig& c) {
    ordered_json j;
    j["K"] = c.num_components;
    j["max_iters_phase1"] = c.max_iters_phase1;
    j["max_iters_phase2"] = c.max_iters_phase2;
    j["weight_tol"] = c.weight_tol;
    j["mean_tol"] = c.mean_tol;
    j["variance_floor"] = c.variance_floor;
    j["seed"] = c.seed;
    j["restarts"] = c.restarts;
    j["format"] = kFitConfigFormat;
    return j.dump(2) + "\n";
}

SimulationConfig simulation_config_from_json(std::string_view text) {
    const json j = parse(text, "simulation config");
    if (!j.is_object() || !j.contains("truth") || !j.contains("counts")) {
        throw FormatError("simulation config needs \"truth\" and \"counts\"");
    }
    check_optional_tag(j, kSimulationFormat);
    try {
        SimulationConfig c{model_from(j["truth"]), j["counts"].get<std::vector<std::size_t>>(),
                           j.value("seed", std::uint64_t{0}), j.value("shuffle", false)};
        return c;
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("simulation config: {}", e.what()));
    }
}

std::string report_to_json(const FitReport& report) {
    ordered_json j;
    j["components"] = ordered_json::array();
    for (const auto& e : report.components) {
        j["components"].push_back(
            {{"mean_error", e.mean_error}, {"cov_error", e.covariance_error}, {"weight_error", e.weight_error}});
    }
    j["kl_divergence"] = report.kl_divergence;
    j["matching"] = report.matching;
    j["format"] = kReportFormat;
    return j.dump(2) + "\n";
}

void write_trace_jsonl(std::ostream& out, const std::vector<IterationRecord>& trace) {
    for (const auto& r : trace) {
        ordered_json j;
        j["iter"] = r.iteration;
        j["phase"] = r.phase;
        j["weights"] = r.weights;
        j["loglik_proxy"] = r.loglik_proxy ? ordered_json(*r.loglik_proxy) : ordered_json(nullptr);
        out << j.dump() << '\n';
    }
}

void write_lors_csv(std::ostream& out, const LoRDataset& data, bool with_labels) {
    if (with_labels && !data.labels) {
        throw std::invalid_argument("dataset has no labels to export");
    }
    out << (with_labels ? "s,phi,label\n" : "s,phi\n");
    for (std::size_t i = 0; i < data.lors.size(); ++i) {
        out << format_double(data.lors[i].s()) << ',' << format_double(data.lors[i].phi());
        if (with_labels) out << ',' << (*data.labels)[i];
        out << '\n';
    }
}

LoRDataset read_lors_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("LoR CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool with_labels = false;
    if (line == "s,phi,label") {
        with_labels = true;
    } else if (line != "s,phi") {
        throw FormatError("LoR CSV header must be 's,phi' or 's,phi,label'");
    }

    LoRDataset data;
    std::vector<std::size_t> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        for (auto comma = rest.find(','); comma != std::string_view::npos; comma = rest.find(',')) {
            fields.push_back(rest.substr(0, comma));
            rest.remove_prefix(comma + 1);
        }
        fields.push_back(rest);
        if (fields.size() != (with_labels ? 3u : 2u)) {
            throw FormatError(fmt::format("LoR CSV line {}: wrong number of fields", line_no));
        }
        double s = 0.0;
        double phi = 0.0;
        if (!parse_double(fields[0], s) || !parse_double(fields[1], phi) || !std::isfinite(s) || !std::isfinite(phi)) {
            throw FormatError(fmt::format("LoR CSV line {}: bad number", line_no));
        }
        data.lors.emplace_back(s, phi);
        if (with_labels) {
            std::size_t label = 0;
            const auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), label);
            if (ec != std::errc() || ptr != fields[2].data() + fields[2].size()) {
                throw FormatError(fmt::format("LoR CSV line {}: bad label", line_no));
            }
            labels.push_back(label);
        }
    }
    if (data.lors.empty()) throw FormatError("LoR CSV has no events");
    if (with_labels) data.labels = std::move(labels);
    return data;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) throw std::runtime_error(fmt::format("write to {} failed", path.string()));
}

MixtureModel2D read_model(const std::filesystem::path& path) { return model_from_json(read_text_file(path)); }

LoRDataset read_lors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(fmt::format("cannot open {}", path.string()));
    return read_lors_csv(in);
}

}  // namespace gmmlor::io

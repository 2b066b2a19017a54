#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "gmmlor/fit.hpp"
#include "gmmlor/metrics.hpp"
#include "gmmlor/model.hpp"
#include "gmmlor/simulate.hpp"

namespace gmmlor::io {

// Format tags carried by every JSON artifact as "format": "<name>/<major>".
// Readers accept a missing tag and reject an unknown major version.
inline constexpr std::string_view kModelFormat = "gmmlor-model/1";
inline constexpr std::string_view kFitConfigFormat = "gmmlor-fit-config/1";
inline constexpr std::string_view kSimulationFormat = "gmmlor-simulation/1";
inline constexpr std::string_view kReportFormat = "gmmlor-report/1";
inline constexpr std::string_view kManifestFormat = "gmmlor-manifest/1";
inline constexpr std::string_view kLorCsvFormat = "gmmlor-lors-csv/1";
inline constexpr std::string_view kTraceFormat = "gmmlor-trace-jsonl/1";
inline constexpr std::string_view kStudyFormat = "gmmlor-study/1";

/// {"components":[{"mean":[x,y],"cov":[[a,b],[b,c]],"weight":w},...],"format":...}
std::string model_to_json(const MixtureModel2D& model);
MixtureModel2D model_from_json(std::string_view text);

FitConfig fit_config_from_json(std::string_view text);
std::string fit_config_to_json(const FitConfig& config);

/// {"truth": <model>, "counts": [...], "seed": n, "shuffle": bool}
SimulationConfig simulation_config_from_json(std::string_view text);

std::string report_to_json(const FitReport& report);

/// One JSON object per line: {"iter","phase","weights","loglik_proxy"}.
void write_trace_jsonl(std::ostream& out, const std::vector<IterationRecord>& trace);

/// Header `s,phi` or `s,phi,label`; 17 significant digits; LF endings.
void write_lors_csv(std::ostream& out, const LoRDataset& data, bool with_labels);
LoRDataset read_lors_csv(std::istream& in);

/// Shortest-round-trip-safe decimal with 17 significant digits.
std::string format_double(double value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

MixtureModel2D read_model(const std::filesystem::path& path);
LoRDataset read_lors(const std::filesystem::path& path);

/// Throws FormatError unless `tag` names `expected`'s format with the same
/// major version.
void check_format_tag(std::string_view tag, std::string_view expected);

}  // namespace gmmlor::io

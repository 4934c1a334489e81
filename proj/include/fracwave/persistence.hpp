#pragma once

// Schema-versioned JSON for branches, spectra, verdicts and probe reports, and
// CSV for evolution traces.  Doubles round-trip bit-exactly.

#include <filesystem>
#include <optional>
#include <string>

#include "fracwave/variational.hpp"

namespace fracwave {

inline constexpr int kSchemaVersion = 1;

std::string branch_to_json(const Branch& branch);
/// With target_points set, every profile is spectrally resampled onto that grid
/// and its residual recomputed.
Branch branch_from_json(const std::string& text, std::optional<int> target_points = std::nullopt);

std::string spectrum_to_json(const SpectrumReport& report);
SpectrumReport spectrum_from_json(const std::string& text);

std::string verdict_to_json(const StabilityVerdict& verdict);
StabilityVerdict verdict_from_json(const std::string& text);

std::string coercivity_to_json(const CoercivityReport& report);
CoercivityReport coercivity_from_json(const std::string& text);

std::string limit_report_to_json(const LimitReport& report);

/// Columns t, H, K, U, P, M, rho, x_star; metadata in '#' lines.
std::string trace_to_csv(const EvolutionTrace& trace);
EvolutionTrace trace_from_csv(const std::string& text);

/// Shortest text that reads back to the same double ("nan", "inf", "-inf" for non-finite).
std::string format_double(double x);

std::string read_text_file(const std::filesystem::path& path);
/// Refuses to replace an existing file unless force is set (ConfigError).
void write_text_file(const std::filesystem::path& path, const std::string& text, bool force);

}  // namespace fracwave

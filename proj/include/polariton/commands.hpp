// commands.hpp: CLI subcommands as library calls
//
// Each command writes its data files plus a <file>.meta.json sidecar into
// the configured output directory. Data files are deterministic; sidecars
// carry the timestamp, version, resolved config and unit conventions.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "polariton/config.hpp"

namespace polariton::commands {

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 1,
    exit_numerical = 2,
    exit_partial = 3,
};

struct CommandOutput {
    int exit_code{exit_ok};
    std::vector<std::filesystem::path> files;  // data files, sidecars excluded
    nlohmann::json report;
};

CommandOutput cmd_eigens(const config::RunConfig& cfg, std::ostream& log);
CommandOutput cmd_signal(const config::RunConfig& cfg, std::ostream& log);
CommandOutput cmd_spectrum(const config::RunConfig& cfg, spectra::Transform which, std::ostream& log);

// Invariant suite; report["checks"] lists name/passed/measured/tolerance.
CommandOutput cmd_validate(const config::RunConfig& cfg, std::ostream& log);

// Peak list for the report; labels come from the matched stick.
nlohmann::json peak_report(const spectra::Spectrum2D& spectrum, const std::vector<spectra::Peak>& peaks,
                           const std::vector<spectra::ResonancePrediction>& sticks, double tolerance_bins);

}  // namespace polariton::commands

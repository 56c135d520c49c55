// config.hpp: JSON run configuration and the built-in presets
//
// A config file is a JSON object with the sections model, basis, sequence,
// spectrum, eigens, run and output. It is merged over a preset (fig3 when
// none is named); unknown keys are rejected with their line and column.
// Frequencies are linear kHz and times ms.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "polariton/hilbert.hpp"
#include "polariton/model.hpp"
#include "polariton/protocol.hpp"
#include "polariton/spectra.hpp"

namespace polariton::config {

struct SpectrumOptions {
    spectra::Transform transform{spectra::Transform::s23};
    spectra::FourierOptions fourier;
    // Apodization used for the secondary peak list (weak lines on sinc ridges).
    std::optional<double> detect_window_rate{6.0};
    double detect_threshold{0.005};
    double threshold{0.05};
    double merge_radius_bins{3.0};
    bool heatmap{true};
};

struct EigenRange {
    double start{-20.0};
    double stop{20.0};
    int count{201};

    std::vector<double> values() const;
};

struct RunConfig {
    model::ModelParams model;
    hilbert::BasisSpec basis{2, 2, 2};
    std::optional<int> n_kicks;
    protocol::SequenceConfig sequence;
    SpectrumOptions spectrum;
    EigenRange eigens;
    int threads{1};
    bool checkpoint{true};
    std::filesystem::path output_dir{"out"};
    nlohmann::json resolved;  // the merged document, echoed into sidecars
};

// Raw JSON of a built-in preset ("fig3", "fig4"); throws ConfigError otherwise.
std::string preset_text(const std::string& name);

// Parses `text` merged over the named preset. Syntax, schema and range errors
// throw ConfigError with 1-based line/column into `text` where known.
RunConfig parse_config(const std::string& text, const std::string& preset = "fig3");

// Reads the file (if any) and merges it over the preset (fig3 by default).
RunConfig load_config(const std::optional<std::filesystem::path>& file, const std::optional<std::string>& preset);

}  // namespace polariton::config

// polariton: eigen sweeps, nonlinear signals and 2D spectra of trapped-ion polaritons
//
//   polariton eigens   [--preset fig3|fig4] [--config FILE] [--out DIR]
//   polariton signal   [...] [--threads K]
//   polariton spectrum [s13|s23] [...]
//   polariton validate [...]
//
// Exit codes: 0 ok, 1 config error, 2 numerical tolerance failure, 3 partial output.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "polariton/commands.hpp"
#include "polariton/config.hpp"

namespace {

struct Common {
    std::string config;
    std::string out;
    std::string preset;
    int threads{-1};
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON config merged over the preset")->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory (overrides output.dir)");
    sub->add_option("--preset", c.preset, "base preset")->check(CLI::IsMember({"fig3", "fig4"}));
    sub->add_option("--threads", c.threads, "scan threads, 0 = all cores")->check(CLI::NonNegativeNumber);
}

polariton::config::RunConfig resolve(const Common& c) {
    using polariton::config::load_config;
    std::optional<std::filesystem::path> file;
    if (!c.config.empty()) file = c.config;
    std::optional<std::string> preset;
    if (!c.preset.empty()) preset = c.preset;
    auto cfg = load_config(file, preset);
    if (!c.out.empty()) {
        cfg.output_dir = c.out;
        cfg.resolved["output"]["dir"] = c.out;
    }
    if (c.threads >= 0) {
        cfg.threads = c.threads;
        cfg.resolved["run"]["threads"] = c.threads;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    namespace cmd = polariton::commands;
    CLI::App app{"Trapped-ion polariton 2D spectroscopy"};
    app.set_version_flag("--version", std::string(POLARITON_VERSION));
    app.require_subcommand(1);

    Common c_eigens, c_signal, c_spectrum, c_validate;
    auto* eigens = app.add_subcommand("eigens", "eigenvalue sweep over delta/g");
    add_common(eigens, c_eigens);
    auto* signal = app.add_subcommand("signal", "three-pulse signal on the configured delay grid");
    add_common(signal, c_signal);
    auto* spectrum = app.add_subcommand("spectrum", "2D spectrum with peak report");
    std::string which;
    spectrum->add_option("which", which, "s13 or s23 (default: spectrum.transform)")
        ->check(CLI::IsMember({"s13", "s23"}));
    add_common(spectrum, c_spectrum);
    auto* validate = app.add_subcommand("validate", "invariant suite with a JSON report");
    add_common(validate, c_validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cmd::exit_config;
    }

    try {
        cmd::CommandOutput out;
        if (eigens->parsed()) {
            out = cmd::cmd_eigens(resolve(c_eigens), std::cout);
        } else if (signal->parsed()) {
            out = cmd::cmd_signal(resolve(c_signal), std::cout);
        } else if (spectrum->parsed()) {
            const auto cfg = resolve(c_spectrum);
            auto t = cfg.spectrum.transform;
            if (which == "s13") t = polariton::spectra::Transform::s13;
            if (which == "s23") t = polariton::spectra::Transform::s23;
            out = cmd::cmd_spectrum(cfg, t, std::cout);
        } else if (validate->parsed()) {
            out = cmd::cmd_validate(resolve(c_validate), std::cout);
            if (out.exit_code != cmd::exit_ok) {
                std::cerr << "validate: failed checks:";
                for (const auto& chk : out.report["checks"]) {
                    if (!chk["passed"].get<bool>()) std::cerr << " " << chk["name"].get<std::string>();
                }
                std::cerr << "\n";
            }
        }
        for (const auto& f : out.files) std::cout << "wrote " << f.string() << "\n";
        return out.exit_code;
    } catch (const polariton::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cmd::exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return cmd::exit_config;
    } catch (const polariton::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return cmd::exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cmd::exit_partial;
    }
}

// io.hpp: CSV, JSON sidecar and heatmap writers
//
// Numbers are written in shortest round-trip form, so files are exact and
// byte-identical for identical inputs. Sidecars carry the only timestamps.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "polariton/model.hpp"
#include "polariton/protocol.hpp"
#include "polariton/spectra.hpp"
#include <json.hpp>

namespace polariton::io {

std::string format_number(double v);

// Creates parent directories; throws std::runtime_error on failure.
void write_file(const std::filesystem::path& path, const std::string& contents);

// t_a_ms,t_b_ms,re,im (row-major in axis a)
std::string signal_csv(const protocol::SignalGrid& grid);

// omega_a,omega_b,re,im,abs (rad/ms)
std::string spectrum_csv(const spectra::Spectrum2D& spectrum);

// One row per (ratio, eigenstate).
std::string eigensweep_csv(const std::vector<model::SweepRow>& rows);

// Wide format: delta_over_g,E_0,...,E_{d-1} for line plots.
std::string eigensweep_lines_csv(const std::vector<model::SweepRow>& rows);

// Binary 8-bit graymap of |F| / max |F|; x runs along axis a, y along axis b
// with the largest omega_b in the top row.
std::string heatmap_pgm(const spectra::Spectrum2D& spectrum);

// Stable dump (2-space indent, trailing newline).
std::string dump_json(const nlohmann::json& j);

}  // namespace polariton::io

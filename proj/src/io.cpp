#include "polariton/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace polariton::io {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;  // drop the sign of -0
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

void append_row(std::string& s, std::initializer_list<double> vals) {
    bool first = true;
    for (double v : vals) {
        if (!first) s += ',';
        s += format_number(v);
        first = false;
    }
    s += '\n';
}

}  // namespace

std::string signal_csv(const protocol::SignalGrid& grid) {
    std::string s = "t_a_ms,t_b_ms,re,im\n";
    s.reserve(static_cast<std::size_t>(grid.values.size()) * 64);
    for (int i = 0; i < grid.a.count; ++i) {
        for (int j = 0; j < grid.b.count; ++j) {
            const Complex v = grid.values(i, j);
            append_row(s, {grid.a.at(i), grid.b.at(j), v.real(), v.imag()});
        }
    }
    return s;
}

std::string spectrum_csv(const spectra::Spectrum2D& sp) {
    std::string s = "omega_a,omega_b,re,im,abs\n";
    s.reserve(static_cast<std::size_t>(sp.values.size()) * 96);
    for (Eigen::Index i = 0; i < sp.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < sp.values.cols(); ++j) {
            const Complex v = sp.values(i, j);
            append_row(s, {sp.axis_a[static_cast<std::size_t>(i)], sp.axis_b[static_cast<std::size_t>(j)], v.real(),
                           v.imag(), std::abs(v)});
        }
    }
    return s;
}

std::string eigensweep_csv(const std::vector<model::SweepRow>& rows) {
    std::string s = "delta_over_g,eig_index,energy_angular_khz,spin_expectation,spin_label,label_confidence\n";
    for (const auto& r : rows) {
        s += format_number(r.delta_over_g) + ',' + std::to_string(r.eig_index) + ',' + format_number(r.energy) + ',' +
             format_number(r.spin_expectation) + ',' + std::to_string(r.spin_label) + ',' +
             (r.low_confidence ? "low" : "high") + '\n';
    }
    return s;
}

std::string eigensweep_lines_csv(const std::vector<model::SweepRow>& rows) {
    int levels = 0;
    for (const auto& r : rows) levels = std::max(levels, r.eig_index + 1);
    std::string s = "delta_over_g";
    for (int k = 0; k < levels; ++k) s += ",E_" + std::to_string(k);
    s += '\n';
    for (std::size_t i = 0; i < rows.size(); i += static_cast<std::size_t>(levels)) {
        s += format_number(rows[i].delta_over_g);
        for (int k = 0; k < levels && i + static_cast<std::size_t>(k) < rows.size(); ++k) {
            s += ',' + format_number(rows[i + static_cast<std::size_t>(k)].energy);
        }
        s += '\n';
    }
    return s;
}

std::string heatmap_pgm(const spectra::Spectrum2D& sp) {
    const auto w = sp.values.rows();
    const auto h = sp.values.cols();
    const Eigen::MatrixXd mag = sp.values.cwiseAbs();
    const double top = mag.size() ? mag.maxCoeff() : 0.0;
    std::string s = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    s.reserve(s.size() + static_cast<std::size_t>(w * h));
    for (Eigen::Index y = h - 1; y >= 0; --y) {
        for (Eigen::Index x = 0; x < w; ++x) {
            const double v = top > 0.0 ? mag(x, y) / top : 0.0;
            s += static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
        }
    }
    return s;
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace polariton::io

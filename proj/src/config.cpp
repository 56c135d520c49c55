#include "polariton/config.hpp"

#include "polariton/presets_data.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace polariton::config {

using nlohmann::json;

std::vector<double> EigenRange::values() const {
    std::vector<double> v;
    for (int i = 0; i < count; ++i) v.push_back(count == 1 ? start : start + (stop - start) * i / (count - 1));
    return v;
}

std::string preset_text(const std::string& name) {
    if (name == "fig3") return presets_data::fig3;
    if (name == "fig4") return presets_data::fig4;
    throw ConfigError("unknown preset '" + name + "' (available: fig3, fig4)");
}

namespace {

enum class Kind { number, integer, boolean, string, number_or_null, integer_or_null, time_axis, range, number_array };

using Schema = std::map<std::string, std::map<std::string, Kind>>;

const Schema& schema() {
    static const Schema s = {
        {"model",
         {{"nu_x_khz", Kind::number},
          {"hopping_scale_khz", Kind::number},
          {"delta_khz", Kind::number},
          {"g_khz", Kind::number},
          {"gamma_khz", Kind::number},
          {"omega_opt_khz", Kind::number},
          {"eta", Kind::number_array},
          {"rabi_khz", Kind::number}}},
        {"basis", {{"n_ions", Kind::integer}, {"phonon_cutoff", Kind::integer_or_null}, {"sector", Kind::integer_or_null}}},
        {"sequence",
         {{"t1", Kind::time_axis},
          {"t2", Kind::time_axis},
          {"t3", Kind::time_axis},
          {"readout_ion", Kind::integer},
          {"n_kicks", Kind::integer_or_null}}},
        {"spectrum",
         {{"transform", Kind::string},
          {"padding", Kind::integer},
          {"window_rate", Kind::number_or_null},
          {"detect_window_rate", Kind::number_or_null},
          {"detect_threshold", Kind::number},
          {"threshold", Kind::number},
          {"merge_radius_bins", Kind::number},
          {"heatmap", Kind::boolean}}},
        {"eigens", {{"delta_over_g", Kind::range}}},
        {"run", {{"threads", Kind::integer}, {"checkpoint", Kind::boolean}}},
        {"output", {{"dir", Kind::string}}},
    };
    return s;
}

struct Locator {
    const std::string& text;

    std::pair<std::size_t, std::size_t> line_col(std::size_t offset) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
            if (text[i] == '\n') ++line, col = 1;
            else ++col;
        }
        return {line, col};
    }

    // Follows the quoted keys in order; (0, 0) if a key is not in the text.
    std::pair<std::size_t, std::size_t> find(const std::vector<std::string>& path) const {
        std::size_t pos = 0;
        for (const auto& key : path) {
            pos = text.find("\"" + key + "\"", pos);
            if (pos == std::string::npos) return {0, 0};
        }
        return line_col(pos);
    }

    [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& msg) const {
        const auto [line, col] = find(path);
        std::string where;
        for (const auto& k : path) where += (where.empty() ? "" : ".") + k;
        if (line) throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + where +
                                        ": " + msg,
                                    line, col);
        throw ConfigError(where + ": " + msg);
    }
};

bool is_int(const json& v) { return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()); }

void check_kind(const Locator& loc, const std::vector<std::string>& path, const json& v, Kind kind) {
    auto need = [&](bool ok, const char* what) {
        if (!ok) loc.fail(path, std::string("expected ") + what);
    };
    switch (kind) {
        case Kind::number: need(v.is_number(), "a number"); break;
        case Kind::integer: need(v.is_number() && is_int(v), "an integer"); break;
        case Kind::boolean: need(v.is_boolean(), "true or false"); break;
        case Kind::string: need(v.is_string(), "a string"); break;
        case Kind::number_or_null: need(v.is_null() || v.is_number(), "a number or null"); break;
        case Kind::integer_or_null: need(v.is_null() || (v.is_number() && is_int(v)), "an integer or null"); break;
        case Kind::number_array:
            need(v.is_array(), "an array of numbers");
            for (const auto& x : v) need(x.is_number(), "an array of numbers");
            break;
        case Kind::time_axis:
            if (v.is_number()) break;
            need(v.is_object(), "a delay in ms or {start, step, count}");
            for (const auto& [k, x] : v.items()) {
                auto sub = path;
                sub.push_back(k);
                if (k == "start" || k == "step") check_kind(loc, sub, x, Kind::number);
                else if (k == "count") check_kind(loc, sub, x, Kind::integer);
                else loc.fail(sub, "unknown key (expected start, step, count)");
            }
            break;
        case Kind::range:
            need(v.is_object(), "{start, stop, count}");
            for (const auto& [k, x] : v.items()) {
                auto sub = path;
                sub.push_back(k);
                if (k == "start" || k == "stop") check_kind(loc, sub, x, Kind::number);
                else if (k == "count") check_kind(loc, sub, x, Kind::integer);
                else loc.fail(sub, "unknown key (expected start, stop, count)");
            }
            break;
    }
}

void check_schema(const Locator& loc, const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object", 1, 1);
    for (const auto& [section, body] : doc.items()) {
        if (section == "description") {
            check_kind(loc, {section}, body, Kind::string);
            continue;
        }
        const auto it = schema().find(section);
        if (it == schema().end()) loc.fail({section}, "unknown section");
        if (!body.is_object()) loc.fail({section}, "expected an object");
        for (const auto& [key, v] : body.items()) {
            const auto k = it->second.find(key);
            if (k == it->second.end()) loc.fail({section, key}, "unknown key");
            check_kind(loc, {section, key}, v, k->second);
        }
    }
}

protocol::TimeAxis time_axis(const json& v) {
    if (v.is_number()) return protocol::TimeAxis::fixed(v.get<double>());
    return protocol::TimeAxis::uniform(v.value("start", 0.0), v.value("step", 0.0), v.value("count", 1));
}

RunConfig build(const json& doc, const Locator& loc) {
    RunConfig rc;
    rc.resolved = doc;
    const json empty = json::object();
    const json& m = doc.contains("model") ? doc["model"] : empty;
    auto& p = rc.model;
    p.nu_x_khz = m.value("nu_x_khz", p.nu_x_khz);
    p.hopping_scale_khz = m.value("hopping_scale_khz", p.hopping_scale_khz);
    p.delta_khz = m.value("delta_khz", p.delta_khz);
    p.g_khz = m.value("g_khz", p.g_khz);
    p.gamma_khz = m.value("gamma_khz", p.gamma_khz);
    p.omega_opt_khz = m.value("omega_opt_khz", p.omega_opt_khz);
    p.rabi_khz = m.value("rabi_khz", p.rabi_khz);
    if (m.contains("eta")) p.eta = m["eta"].get<std::vector<double>>();
    if (!(p.nu_x_khz > 0.0)) loc.fail({"model", "nu_x_khz"}, "must be > 0");
    if (!(p.gamma_khz >= 0.0)) loc.fail({"model", "gamma_khz"}, "must be >= 0");
    try {
        model::validate(p);
    } catch (const ParameterError& e) {
        loc.fail({"model"}, e.what());
    }

    const json& b = doc.contains("basis") ? doc["basis"] : empty;
    rc.basis.n_ions = b.value("n_ions", 2);
    if (rc.basis.n_ions < 1) loc.fail({"basis", "n_ions"}, "must be >= 1");
    rc.basis.sector.reset();
    if (b.contains("sector") && !b["sector"].is_null()) {
        rc.basis.sector = b["sector"].get<int>();
        if (*rc.basis.sector < 0) loc.fail({"basis", "sector"}, "must be >= 0 (or null for the full space)");
    }
    // One level above the filling in the full space shows leakage.
    rc.basis.phonon_cutoff = b.value("phonon_cutoff", rc.basis.sector ? rc.basis.n_ions : rc.basis.n_ions + 1);
    if (rc.basis.phonon_cutoff < 0) loc.fail({"basis", "phonon_cutoff"}, "must be >= 0");

    const json& s = doc.contains("sequence") ? doc["sequence"] : empty;
    if (s.contains("t1")) rc.sequence.t1 = time_axis(s["t1"]);
    if (s.contains("t2")) rc.sequence.t2 = time_axis(s["t2"]);
    if (s.contains("t3")) rc.sequence.t3 = time_axis(s["t3"]);
    rc.sequence.readout_ion = s.value("readout_ion", 1);
    if (rc.sequence.readout_ion < 1 || rc.sequence.readout_ion > rc.basis.n_ions) {
        loc.fail({"sequence", "readout_ion"}, "must be in [1, n_ions]");
    }
    if (s.contains("n_kicks") && !s["n_kicks"].is_null()) {
        rc.n_kicks = s["n_kicks"].get<int>();
        if (*rc.n_kicks < 1) loc.fail({"sequence", "n_kicks"}, "must be >= 1");
    }
    try {
        rc.sequence.validate();
    } catch (const ParameterError& e) {
        loc.fail({"sequence"}, e.what());
    }

    const json& sp = doc.contains("spectrum") ? doc["spectrum"] : empty;
    const std::string tr = sp.value("transform", std::string("s23"));
    if (tr == "s13") rc.spectrum.transform = spectra::Transform::s13;
    else if (tr == "s23") rc.spectrum.transform = spectra::Transform::s23;
    else loc.fail({"spectrum", "transform"}, "must be \"s13\" or \"s23\"");
    rc.spectrum.fourier.padding = sp.value("padding", 4);
    if (rc.spectrum.fourier.padding < 1) loc.fail({"spectrum", "padding"}, "must be >= 1");
    rc.spectrum.fourier.window_rate.reset();
    if (sp.contains("window_rate") && !sp["window_rate"].is_null()) {
        rc.spectrum.fourier.window_rate = sp["window_rate"].get<double>();
        if (!(*rc.spectrum.fourier.window_rate >= 0.0)) loc.fail({"spectrum", "window_rate"}, "must be >= 0");
    }
    rc.spectrum.detect_window_rate.reset();
    if (sp.contains("detect_window_rate") && !sp["detect_window_rate"].is_null()) {
        rc.spectrum.detect_window_rate = sp["detect_window_rate"].get<double>();
        if (!(*rc.spectrum.detect_window_rate > 0.0)) loc.fail({"spectrum", "detect_window_rate"}, "must be > 0");
    }
    rc.spectrum.detect_threshold = sp.value("detect_threshold", 0.005);
    if (!(rc.spectrum.detect_threshold > 0.0 && rc.spectrum.detect_threshold <= 1.0)) {
        loc.fail({"spectrum", "detect_threshold"}, "must be in (0, 1]");
    }
    rc.spectrum.threshold = sp.value("threshold", 0.05);
    if (!(rc.spectrum.threshold > 0.0 && rc.spectrum.threshold <= 1.0)) {
        loc.fail({"spectrum", "threshold"}, "must be in (0, 1]");
    }
    rc.spectrum.merge_radius_bins = sp.value("merge_radius_bins", 3.0);
    if (!(rc.spectrum.merge_radius_bins >= 0.0)) loc.fail({"spectrum", "merge_radius_bins"}, "must be >= 0");
    rc.spectrum.heatmap = sp.value("heatmap", true);

    if (doc.contains("eigens") && doc["eigens"].contains("delta_over_g")) {
        const json& r = doc["eigens"]["delta_over_g"];
        rc.eigens.start = r.value("start", rc.eigens.start);
        rc.eigens.stop = r.value("stop", rc.eigens.stop);
        rc.eigens.count = r.value("count", rc.eigens.count);
    }
    if (rc.eigens.count < 1 || (rc.eigens.count > 1 && !(rc.eigens.stop > rc.eigens.start))) {
        loc.fail({"eigens", "delta_over_g"}, "empty range (need count >= 1 and stop > start)");
    }

    const json& run = doc.contains("run") ? doc["run"] : empty;
    rc.threads = run.value("threads", 1);
    if (rc.threads < 0) loc.fail({"run", "threads"}, "must be >= 0");
    rc.checkpoint = run.value("checkpoint", true);

    const json& out = doc.contains("output") ? doc["output"] : empty;
    rc.output_dir = out.value("dir", std::string("out"));
    return rc;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& preset) {
    json base = json::parse(preset_text(preset));

    json user = json::object();
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
        try {
            user = json::parse(text);
        } catch (const json::parse_error& e) {
            const Locator loc{text};
            const auto [line, col] = loc.line_col(e.byte > 0 ? e.byte - 1 : 0);
            std::string msg = e.what();
            if (const auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
            throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg, line,
                              col);
        }
    }
    const Locator loc{text};
    check_schema(loc, user);
    base.merge_patch(user);
    return build(base, loc);
}

RunConfig load_config(const std::optional<std::filesystem::path>& file, const std::optional<std::string>& preset) {
    std::string text;
    if (file) {
        std::ifstream in(*file, std::ios::binary);
        if (!in) throw ConfigError("cannot read config file " + file->string());
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    try {
        return parse_config(text, preset.value_or("fig3"));
    } catch (const ConfigError& e) {
        if (!file) throw;
        throw ConfigError(file->string() + ": " + e.what(), e.line(), e.column());
    }
}

}  // namespace polariton::config

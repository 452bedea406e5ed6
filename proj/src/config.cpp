#include "spincell/config.hpp"

#include "spincell/spin_model.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace spincell {

namespace {

using nlohmann::json;

const json& req(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end())
        throw std::invalid_argument(std::string("config is missing key: ") + key);
    return *it;
}

double num(const json& j, const char* key) {
    const json& v = req(j, key);
    if (!v.is_number()) throw std::invalid_argument(std::string(key) + " must be a number");
    return v.get<double>();
}

double num_or(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw std::invalid_argument(std::string(key) + " must be a number");
    return it->get<double>();
}

std::vector<double> num_list(const json& j, const char* key) {
    auto it = j.find(key);
    std::vector<double> out;
    if (it == j.end()) return out;
    if (!it->is_array()) throw std::invalid_argument(std::string(key) + " must be an array");
    for (const auto& v : *it) {
        if (!v.is_number()) throw std::invalid_argument(std::string(key) + " must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

ChamberGeometry parse_geometry(const json& g) {
    std::string shape = req(g, "shape").get<std::string>();
    if (shape == "box")
        return ChamberGeometry::box(num(g, "lx_m"), num(g, "ly_m"), num(g, "lz_m"),
                                    num(g, "optical_path_m"));
    if (shape == "sphere")
        return ChamberGeometry::sphere(num(g, "radius_m"), num(g, "optical_path_m"));
    throw std::invalid_argument("geometry shape must be box or sphere");
}

}  // namespace

ScanConfig CellConfig::scan_config(ScanAxis axis) const {
    ScanConfig sc;
    sc.axis = axis;
    switch (axis) {
        case ScanAxis::pump_power: sc.values = pump_power_values_w; break;
        case ScanAxis::temperature: sc.values = temperature_values_k; break;
        case ScanAxis::larmor: sc.values = larmor_values_hz; break;
    }
    if (sc.values.empty())
        throw std::invalid_argument("config has no scan values for axis " + axis_name(axis));
    sc.base = params;
    sc.sweep = sweep;
    sc.noise = noise;
    sc.repeats = repeats;
    return sc;
}

CellConfig parse_cell_config(const std::string& json_text) {
    json j = json::parse(json_text);
    CellConfig cfg;
    cfg.raw_json = j.dump(2);
    cfg.name = req(j, "name").get<std::string>();

    const json& cell = req(j, "cell");
    cfg.params.geometry = parse_geometry(req(cell, "geometry"));
    if (auto it = cell.find("buffer_gas"); it != cell.end()) {
        for (const auto& g : *it)
            cfg.params.mix.components.push_back({req(g, "species").get<std::string>(),
                                                 num(g, "fill_pressure_pa"),
                                                 num(g, "fill_temperature_k")});
    }
    cfg.params.mix.validate();
    cfg.params.wall_relaxation = num_or(cell, "wall_relaxation_per_s", 0.0);
    double temperature = num(cell, "temperature_k");
    cfg.params.vapor = vapor_state(PhysicalConstants{}, temperature, cfg.params.mix);
    cfg.params.probe_path = num_or(cell, "probe_path_m", cfg.params.probe_path);

    const json& pump = req(j, "pump");
    cfg.params.pump.power = num(pump, "power_w");
    cfg.params.pump.detuning_hz = num_or(pump, "detuning_hz", 0.0);
    cfg.params.pump.beam_radius = num_or(pump, "beam_radius_m", cfg.params.pump.beam_radius);

    const json& field = req(j, "field");
    cfg.params.field.larmor_hz = num(field, "larmor_hz");
    cfg.params.field.rf_amplitude_hz = num(field, "rf_amplitude_hz");
    cfg.params.field.rf_frequency_hz =
        num_or(field, "rf_frequency_hz", cfg.params.field.larmor_hz);

    if (auto it = j.find("calibration"); it != j.end()) {
        const json& c = *it;
        CalibrationConstants& k = cfg.params.calib;
        k.pump_rate_per_watt = num_or(c, "pump_rate_per_watt", k.pump_rate_per_watt);
        k.branching_beta = num_or(c, "branching_beta", k.branching_beta);
        k.pump_decoherence_eps = num_or(c, "pump_decoherence_eps", k.pump_decoherence_eps);
        k.serf_knee_a = num_or(c, "serf_knee_a", k.serf_knee_a);
        k.stretched_exponent = num_or(c, "stretched_exponent", k.stretched_exponent);
        k.sec_flip_fraction = num_or(c, "sec_flip_fraction", k.sec_flip_fraction);
        k.probe_gain = num_or(c, "probe_gain_v", k.probe_gain);
        k.absorption_strength = num_or(c, "absorption_strength", k.absorption_strength);
    }
    cfg.params.validate();

    if (auto it = j.find("scan"); it != j.end()) {
        const json& s = *it;
        cfg.pump_power_values_w = num_list(s, "pump_power_w");
        cfg.temperature_values_k = num_list(s, "temperature_k");
        cfg.larmor_values_hz = num_list(s, "larmor_hz");
        if (auto sw = s.find("sweep"); sw != s.end()) {
            cfg.sweep.center_hz = num_or(*sw, "center_hz", 0.0);
            cfg.sweep.span_hz = num_or(*sw, "span_hz", 0.0);
            cfg.sweep.points = static_cast<int>(num_or(*sw, "points", cfg.sweep.points));
            cfg.sweep.dwell = num_or(*sw, "dwell_s", cfg.sweep.dwell);
        }
        if (auto ns = s.find("noise"); ns != s.end()) {
            cfg.noise.white_noise_rms = num_or(*ns, "white_noise_rms", 0.0);
            cfg.noise.seed = static_cast<std::uint64_t>(num_or(*ns, "seed", 0.0));
        }
        cfg.repeats = static_cast<int>(num_or(s, "repeats", 1));
        if (cfg.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    }
    return cfg;
}

LayoutConfig parse_layout_config(const std::string& json_text) {
    json j = json::parse(json_text);
    LayoutConfig cfg;
    cfg.raw_json = j.dump(2);

    const json& stack = req(j, "stack");
    cfg.stack.footprint_x = num(stack, "footprint_x_m");
    cfg.stack.footprint_y = num(stack, "footprint_y_m");
    cfg.stack.layers.clear();
    for (const auto& l : req(stack, "layers")) {
        std::string m = req(l, "material").get<std::string>();
        Material mat = Material::glass;
        if (m == "glass") mat = Material::glass;
        else if (m == "silicon") mat = Material::silicon;
        else if (m == "platinum") mat = Material::platinum;
        else if (m == "gas") mat = Material::gas;
        else throw std::invalid_argument("unknown layer material: " + m);
        cfg.stack.layers.push_back({mat, num(l, "thickness_m"), num(l, "conductivity_w_mk")});
    }
    cfg.stack.validate();

    cfg.cutouts.clear();
    for (const auto& c : req(j, "chambers")) {
        ChamberCutout cut;
        cut.name = req(c, "name").get<std::string>();
        auto o = num_list(c, "origin_m");
        auto e = num_list(c, "extent_m");
        if (o.size() != 3 || e.size() != 3)
            throw std::invalid_argument("chamber origin_m/extent_m must have 3 entries");
        cut.origin = {o[0], o[1], o[2]};
        cut.extent = {e[0], e[1], e[2]};
        cut.gas_conductivity = num_or(c, "gas_conductivity_w_mk", cut.gas_conductivity);
        cfg.cutouts.push_back(cut);
    }

    const json& h = req(j, "heater");
    cfg.heater.tracks.clear();
    cfg.heater.thickness = num(h, "thickness_m");
    cfg.heater.resistivity_20c = num(h, "resistivity_20c_ohm_m");
    cfg.heater.temp_coefficient = num(h, "temp_coefficient_per_k");
    cfg.heater.plane_z = num(h, "plane_z_m");
    if (auto it = h.find("pins"); it != h.end()) {
        const json& pins = *it;
        if (!pins.is_array() || pins.size() != 2)
            throw std::invalid_argument("pins must list two pad positions");
        for (int p = 0; p < 2; ++p)
            cfg.heater.pins[p] = {pins[p].at(0).get<double>(), pins[p].at(1).get<double>()};
    }
    const json& drive = req(h, "drive");
    cfg.heater.drive.volts = num(drive, "volts");
    cfg.heater.drive.frequency_hz = num_or(drive, "frequency_hz", 0.0);
    for (const auto& t : req(h, "tracks")) {
        HeaterTrack track;
        track.width = num(t, "width_m");
        track.return_path = t.value("return_path", false);
        for (const auto& v : req(t, "vertices_mm")) {
            if (!v.is_array() || v.size() != 2)
                throw std::invalid_argument("track vertices must be [x, y] pairs");
            track.vertices.push_back(
                {v.at(0).get<double>() * 1e-3, v.at(1).get<double>() * 1e-3});
        }
        cfg.heater.tracks.push_back(track);
    }
    cfg.heater.validate();

    cfg.ambient_k = num(j, "ambient_k");
    if (auto it = j.find("solver"); it != j.end()) {
        const json& s = *it;
        cfg.thermal.nx = static_cast<int>(num_or(s, "nx", cfg.thermal.nx));
        cfg.thermal.ny = static_cast<int>(num_or(s, "ny", cfg.thermal.ny));
        cfg.thermal.nz = static_cast<int>(num_or(s, "nz", cfg.thermal.nz));
        cfg.thermal.h_conv = num_or(s, "h_conv_w_m2k", cfg.thermal.h_conv);
        cfg.thermal.tol = num_or(s, "tol", cfg.thermal.tol);
        cfg.thermal.max_iterations =
            static_cast<int>(num_or(s, "max_iterations", cfg.thermal.max_iterations));
        cfg.thermal.resistance_updates =
            static_cast<int>(num_or(s, "resistance_updates", cfg.thermal.resistance_updates));
    }
    if (auto it = j.find("bfield"); it != j.end()) {
        const json& b = *it;
        cfg.map_current_a = num_or(b, "current_a", cfg.map_current_a);
        auto grid = num_list(b, "grid");
        if (grid.size() == 3) {
            cfg.map.nx = static_cast<int>(grid[0]);
            cfg.map.ny = static_cast<int>(grid[1]);
            cfg.map.nz = static_cast<int>(grid[2]);
        }
    }
    return cfg;
}

CellConfig load_cell_config(const std::filesystem::path& path) {
    return parse_cell_config(read_file(path));
}

LayoutConfig load_layout_config(const std::filesystem::path& path) {
    return parse_layout_config(read_file(path));
}

std::filesystem::path resolve_config_path(const std::string& arg) {
    std::filesystem::path p(arg);
    if (std::filesystem::exists(p)) return p;
    if (p.is_relative()) {
        std::filesystem::path shipped = std::filesystem::path(SPINCELL_CONFIG_DIR) / p;
        if (std::filesystem::exists(shipped)) return shipped;
    }
    throw std::invalid_argument("config not found: " + arg);
}

}  // namespace spincell

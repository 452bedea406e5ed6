#pragma once

#include "spincell/biot_savart.hpp"
#include "spincell/scan.hpp"
#include "spincell/thermal.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace spincell {

// one vapour cell plus its scan grids, loaded from JSON
struct CellConfig {
    std::string name;
    SpinModelParams params;
    std::vector<double> pump_power_values_w;
    std::vector<double> temperature_values_k;
    std::vector<double> larmor_values_hz;
    SweepPlan sweep;
    NoiseModel noise;
    int repeats = 1;
    std::string raw_json;

    ScanConfig scan_config(ScanAxis axis) const;
};

// chip stack, chambers, heater artwork, solver settings
struct LayoutConfig {
    LayerStack stack;
    std::vector<ChamberCutout> cutouts;
    HeaterLayout heater;
    double ambient_k = 295.15;
    ThermalOptions thermal;
    double map_current_a = 0.0183;
    FieldMapOptions map;
    std::string raw_json;
};

CellConfig parse_cell_config(const std::string& json_text);
LayoutConfig parse_layout_config(const std::string& json_text);

CellConfig load_cell_config(const std::filesystem::path& path);
LayoutConfig load_layout_config(const std::filesystem::path& path);

// the given path if it exists, else the shipped configs directory
std::filesystem::path resolve_config_path(const std::string& arg);

}  // namespace spincell

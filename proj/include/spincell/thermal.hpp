#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace spincell {

enum class Material { glass, silicon, platinum, gas };

struct Layer {
    Material material;
    double thickness;     // m
    double conductivity;  // W/(m K)
};

// chip cross-section, bottom to top
struct LayerStack {
    std::vector<Layer> layers;
    double footprint_x = 20.2e-3;
    double footprint_y = 10.2e-3;

    void validate() const;
    double total_thickness() const;
    static LayerStack reference();  // 0.5 mm glass / 2 mm Si / 0.5 mm glass
};

// box carved through the silicon layer, filled with buffer gas
struct ChamberCutout {
    std::string name;  // interaction | storage | channel
    std::array<double, 3> origin{};
    std::array<double, 3> extent{};
    double gas_conductivity = 0.026;

    bool contains(double x, double y, double z) const;
    bool contains_xy(double x, double y) const;
    static std::vector<ChamberCutout> reference();
};

struct HeaterTrack {
    std::vector<std::array<double, 2>> vertices;  // m, heater plane
    double width = 0;                             // m
    bool return_path = false;  // carries current back toward the pads
};

struct HeaterDrive {
    double volts = 0;         // rms for ac
    double frequency_hz = 0;  // 0 = dc
};

// series-connected platinum tracks printed on the top surface
struct HeaterLayout {
    std::vector<HeaterTrack> tracks;
    double thickness = 0.21118e-6;      // m
    double resistivity_20c = 1.06e-7;   // ohm m
    double temp_coefficient = 3.85e-3;  // 1/K
    double plane_z = 3.0e-3;            // m
    std::array<std::array<double, 2>, 2> pins{};
    HeaterDrive drive;

    void validate() const;  // positive widths, no self-intersections
    double total_length() const;
    double resistance_ohm(double temperature_k) const;  // uniform temperature
    static HeaterLayout reference();
};

// voxel temperatures in kelvin, cell centers at (i+1/2)*pitch
struct ThermalField {
    int nx = 0, ny = 0, nz = 0;
    std::array<double, 3> pitch{};
    std::vector<double> t_k;
    double ambient_k = 0;
    double input_power_w = 0;

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * ny + j) * nz + k;
    }
    double at(int i, int j, int k) const { return t_k[index(i, j, k)]; }
    double& at(int i, int j, int k) { return t_k[index(i, j, k)]; }
    double lx() const { return nx * pitch[0]; }
    double ly() const { return ny * pitch[1]; }
    double lz() const { return nz * pitch[2]; }

    void validate() const;  // finite everywhere, not below ambient
    double peak_k() const;
    double sample(double x, double y, double z) const;  // trilinear
    double sample_top(double x, double y) const;        // top cell-center plane
};

struct ChamberReport {
    std::string name;
    double mean_k = 0;
    double max_k = 0;
    double min_k = 0;
    double differential_k() const { return max_k - min_k; }
};

struct ThermalOptions {
    int nx = 80, ny = 40, nz = 12;
    double h_conv = 5.0;   // W/(m^2 K), exterior film
    double tol = 1e-8;     // relative linear residual
    int max_iterations = 50000;
    int resistance_updates = 6;  // fixed-point passes for rho(T)
    bool parallel = true;
};

struct ThermalSolution {
    ThermalField field;
    double heater_resistance_ohm = 0;  // at the converged temperatures
    double input_power_w = 0;
    double boundary_flux_w = 0;
    int iterations = 0;
    std::vector<double> residual_history;  // final residual per outer pass
    std::vector<ChamberReport> chambers;

    const ChamberReport& chamber(const std::string& name) const;
};

ThermalSolution solve_thermal(const LayerStack& stack,
                              const std::vector<ChamberCutout>& cutouts,
                              const HeaterLayout& heater, double ambient_k,
                              const ThermalOptions& options = {});

struct TracePoint {
    double s;  // arc length along the path, m
    double x, y;
    double temperature_k;
};

std::vector<TracePoint> line_trace(const ThermalField& field,
                                   const std::vector<std::array<double, 2>>& path,
                                   double step);

// indices of prominence-filtered local maxima, merged within min_separation
std::vector<std::size_t> trace_peaks(const std::vector<TracePoint>& trace,
                                     double min_prominence_k,
                                     double min_separation_m);

}  // namespace spincell

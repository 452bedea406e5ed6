#pragma once
#include <cmath>
#include <string>
#include <vector>

#include "spincell/constants.hpp"

namespace spincell {

struct GasFill {
    std::string species;
    double fill_pressure;     // Pa at fill_temperature
    double fill_temperature;  // K
};

struct BufferGasMix {
    std::vector<GasFill> components;  // empty = evacuated (coated cell)

    void validate() const;
    bool empty() const { return components.empty(); }
    // partial pressure at operating temperature (ideal gas rescale)
    double pressure_at(std::size_t i, double temperature) const;
    double total_pressure_at(double temperature) const;
};

struct ChamberGeometry {
    enum class Shape { rectangular, spherical };
    Shape shape = Shape::rectangular;
    double lx = 0, ly = 0, lz = 0;  // m, rectangular
    double radius = 0;              // m, spherical
    double optical_path = 0;        // m

    void validate() const;
    double cross_section() const;  // transverse to the optical path
    static ChamberGeometry box(double lx, double ly, double lz, double optical_path);
    static ChamberGeometry sphere(double radius, double optical_path);
};

struct VaporState {
    double temperature;             // K
    double number_density;          // m^-3
    double mean_relative_speed;     // m/s
    double sec_rate;                // s^-1
    double diffusion_coefficient;   // m^2/s, valid only if !ballistic
    bool ballistic = false;         // empty mix: no buffer-gas diffusion
};

// saturated Cs number density from the vapour-pressure correlation; valid 273-500 K
double saturated_density(const PhysicalConstants& pc, double temperature);
double vapor_pressure(const PhysicalConstants& pc, double temperature);  // Pa

VaporState vapor_state(const PhysicalConstants& pc, double temperature, const BufferGasMix& mix);

// lowest-order diffusion relaxation rates, angular s^-1
double mode_relaxation(const ChamberGeometry& g, double diffusion_coefficient, int nx, int ny, int nz);
double mode_relaxation_sphere(const ChamberGeometry& g, double diffusion_coefficient);

// Lorentzian absorption cross-section at detuning from line center, m^2.
// strength rescales the natural peak cross-section (calibration constant).
double absorption_cross_section(const PhysicalConstants& pc, double detuning_hz,
                                double temperature, const BufferGasMix& mix, double strength);
double optical_depth(const PhysicalConstants& pc, const VaporState& vapor, double detuning_hz,
                     double path, const BufferGasMix& mix, double strength);
inline double transmittance(double od) { return od < 0 ? 1.0 : std::exp(-od); }

}  // namespace spincell

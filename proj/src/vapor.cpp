#include "spincell/vapor.hpp"

#include <cmath>
#include <stdexcept>

namespace spincell {

void BufferGasMix::validate() const {
    for (const auto& g : components) {
        if (g.fill_pressure <= 0) throw std::invalid_argument("buffer gas fill pressure must be > 0");
        if (g.fill_temperature <= 0) throw std::invalid_argument("buffer gas fill temperature must be > 0");
        if (g.species.empty()) throw std::invalid_argument("buffer gas species missing");
    }
}

double BufferGasMix::pressure_at(std::size_t i, double temperature) const {
    const auto& g = components.at(i);
    return g.fill_pressure * temperature / g.fill_temperature;
}

double BufferGasMix::total_pressure_at(double temperature) const {
    double p = 0;
    for (std::size_t i = 0; i < components.size(); ++i) p += pressure_at(i, temperature);
    return p;
}

void ChamberGeometry::validate() const {
    if (shape == Shape::rectangular) {
        if (lx <= 0 || ly <= 0 || lz <= 0) throw std::invalid_argument("chamber extents must be > 0");
        double longest = std::max(lx, std::max(ly, lz));
        if (optical_path <= 0 || optical_path > longest + 1e-12)
            throw std::invalid_argument("optical path must be > 0 and fit the chamber");
    } else {
        if (radius <= 0) throw std::invalid_argument("chamber radius must be > 0");
        if (optical_path <= 0 || optical_path > 2 * radius + 1e-12)
            throw std::invalid_argument("optical path must be > 0 and fit the chamber");
    }
}

double ChamberGeometry::cross_section() const {
    if (shape == Shape::spherical) return phys::pi * radius * radius;
    // path runs along the axis whose extent matches optical_path; fall back to
    // the two smallest extents if no axis matches
    if (std::abs(optical_path - lx) < 1e-12) return ly * lz;
    if (std::abs(optical_path - ly) < 1e-12) return lx * lz;
    if (std::abs(optical_path - lz) < 1e-12) return lx * ly;
    double a = std::max(lx, std::max(ly, lz));
    return lx * ly * lz / a;
}

ChamberGeometry ChamberGeometry::box(double lx, double ly, double lz, double optical_path) {
    ChamberGeometry g;
    g.shape = Shape::rectangular;
    g.lx = lx; g.ly = ly; g.lz = lz;
    g.optical_path = optical_path;
    g.validate();
    return g;
}

ChamberGeometry ChamberGeometry::sphere(double radius, double optical_path) {
    ChamberGeometry g;
    g.shape = Shape::spherical;
    g.radius = radius;
    g.optical_path = optical_path;
    g.validate();
    return g;
}

double vapor_pressure(const PhysicalConstants& pc, double temperature) {
    return std::pow(10.0, pc.vp_a - pc.vp_b / temperature);
}

double saturated_density(const PhysicalConstants& pc, double temperature) {
    if (temperature <= 273.0 || temperature >= 500.0)
        throw std::domain_error("saturated_density valid for 273 K < T < 500 K");
    return vapor_pressure(pc, temperature) / (phys::kb * temperature);
}

VaporState vapor_state(const PhysicalConstants& pc, double temperature, const BufferGasMix& mix) {
    mix.validate();
    VaporState v{};
    v.temperature = temperature;
    v.number_density = saturated_density(pc, temperature);
    v.mean_relative_speed = std::sqrt(16.0 * phys::kb * temperature / (phys::pi * pc.cs_atomic_mass));
    v.sec_rate = v.number_density * pc.sigma_se * v.mean_relative_speed;
    if (mix.empty()) {
        v.ballistic = true;
        v.diffusion_coefficient = 0.0;
        return v;
    }
    double inv_d = 0.0;
    for (std::size_t i = 0; i < mix.components.size(); ++i) {
        double p = mix.pressure_at(i, temperature);
        double di = pc.d0(mix.components[i].species) * (101325.0 / p) *
                    std::pow(temperature / 273.15, 1.5);
        inv_d += 1.0 / di;
    }
    v.diffusion_coefficient = 1.0 / inv_d;
    return v;
}

double mode_relaxation(const ChamberGeometry& g, double d, int nx, int ny, int nz) {
    if (d <= 0) throw std::invalid_argument("diffusion coefficient must be > 0");
    if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("mode indices must be >= 1");
    if (g.shape != ChamberGeometry::Shape::rectangular)
        throw std::invalid_argument("rectangular mode on non-rectangular chamber");
    double s = double(nx) * nx / (g.lx * g.lx) + double(ny) * ny / (g.ly * g.ly) +
               double(nz) * nz / (g.lz * g.lz);
    return d * phys::pi * phys::pi * s;
}

double mode_relaxation_sphere(const ChamberGeometry& g, double d) {
    if (d <= 0) throw std::invalid_argument("diffusion coefficient must be > 0");
    if (g.shape != ChamberGeometry::Shape::spherical)
        throw std::invalid_argument("spherical mode on non-spherical chamber");
    double k = phys::pi / g.radius;
    return d * k * k;
}

double absorption_cross_section(const PhysicalConstants& pc, double detuning_hz,
                                double temperature, const BufferGasMix& mix, double strength) {
    double fwhm = pc.d2_natural_fwhm;
    for (std::size_t i = 0; i < mix.components.size(); ++i)
        fwhm += pc.broadening(mix.components[i].species) * mix.pressure_at(i, temperature);
    double lambda = phys::c_light / pc.d2_frequency;
    double peak = strength * (lambda * lambda / (2.0 * phys::pi)) * (pc.d2_natural_fwhm / fwhm);
    double x = 2.0 * detuning_hz / fwhm;
    return peak / (1.0 + x * x);
}

double optical_depth(const PhysicalConstants& pc, const VaporState& vapor, double detuning_hz,
                     double path, const BufferGasMix& mix, double strength) {
    if (path <= 0) throw std::invalid_argument("optical path must be > 0");
    return vapor.number_density *
           absorption_cross_section(pc, detuning_hz, vapor.temperature, mix, strength) * path;
}

}  // namespace spincell

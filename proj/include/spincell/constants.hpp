#pragma once
#include <map>
#include <stdexcept>
#include <string>

namespace spincell {

// SI throughout. Rates are angular (s^-1) unless a name says _hz.
namespace phys {
inline constexpr double kb = 1.380649e-23;
inline constexpr double amu = 1.66053906892e-27;
inline constexpr double c_light = 299792458.0;
inline constexpr double mu0 = 1.25663706212e-6;
inline constexpr double pi = 3.14159265358979323846;
}  // namespace phys

struct PhysicalConstants {
    double cs_atomic_mass = 132.905451961 * phys::amu;
    double sigma_se = 2.2e-18;            // Cs-Cs spin exchange, m^2
    double gamma_f4 = 3.4986e9;           // F=4 gyromagnetic ratio, Hz/T
    double d2_frequency = 351.72571850e12;
    double d2_natural_fwhm = 5.2227e6;    // Hz
    // log10(p/Pa) = vp_a - vp_b / T, liquid phase
    double vp_a = 9.716717;
    double vp_b = 3999.0;
    // D0 at 101325 Pa, 273.15 K (m^2/s); FWHM broadening (Hz/Pa)
    std::map<std::string, double> diffusion_ref{{"N2", 0.098e-4}, {"Ne", 0.153e-4}};
    std::map<std::string, double> pressure_broadening_ref{{"N2", 146263.0}, {"Ne", 78756.0}};

    double d0(const std::string& gas) const {
        auto it = diffusion_ref.find(gas);
        if (it == diffusion_ref.end()) throw std::invalid_argument("no diffusion constant for gas " + gas);
        return it->second;
    }
    double broadening(const std::string& gas) const {
        auto it = pressure_broadening_ref.find(gas);
        if (it == pressure_broadening_ref.end()) throw std::invalid_argument("no broadening constant for gas " + gas);
        return it->second;
    }
};

}  // namespace spincell

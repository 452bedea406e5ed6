#pragma once
#include <complex>
#include <vector>

#include "spincell/vapor.hpp"

namespace spincell {

struct PumpConfig {
    double power = 0;          // W
    double detuning_hz = 0;    // from line center
    double beam_radius = 2e-3; // m
    enum class Profile { top_hat, gaussian } profile = Profile::top_hat;

    void validate() const;
    double beam_area() const { return phys::pi * beam_radius * beam_radius; }
};

struct FieldConfig {
    double larmor_hz = 0;
    double rf_amplitude_hz = 0;  // Rabi frequency of the rf drive
    double rf_frequency_hz = 0;

    void validate() const;
};

struct CalibrationConstants {
    double pump_rate_per_watt = 1.87e6;  // s^-1/W at unit overlap, thin limit
    double branching_beta = 0.5;         // optical transfer F=3 -> F=4
    double pump_decoherence_eps = 1.3;   // coherence broadening per pump rate
    double serf_knee_a = 0.45;
    double stretched_exponent = 1.15;
    double sec_flip_fraction = 1.0;      // kappa
    double probe_gain = 1e-16;           // V per (column density x transverse polarization)
    double absorption_strength = 0.148664949103538;

    void validate() const;
};

// one relaxation channel set; paraffin cells use a fixed wall rate instead of
// introducing diffusion modes
struct SpinModelParams {
    VaporState vapor;
    ChamberGeometry geometry;
    BufferGasMix mix;
    PumpConfig pump;
    FieldConfig field;
    CalibrationConstants calib;
    double wall_relaxation = 0;  // s^-1; used when mix is empty
    double probe_path = 2e-3;    // m, column the probe integrates

    double gamma_diffusion() const;  // lowest mode or wall rate, s^-1
    void validate() const;
};

struct SpinState {
    double eta3 = 7.0 / 16.0;
    double eta4 = 9.0 / 16.0;
    double p3z = 0;
    double p4z = 0;
    std::complex<double> t4{0, 0};
};

struct RateBreakdown {
    double gamma_diffusion = 0;
    double gamma_sec_effective = 0;
    double gamma_pump = 0;
    double gamma_total = 0;  // angular HWHM, s^-1
    double fwhm_hz() const { return gamma_total / phys::pi; }
};

// q = x^2/(x^2+a^2), x = 2 pi larmor / sec_rate
double serf_factor(double larmor_hz, double sec_rate, double a);
// s = (1 - max(0,P4z))^sigma_exp
double stretched_suppression(double p4z, double sigma_exp);
// Gamma_p = k_p * power * overlap * (1-exp(-OD))/OD
double effective_pumping_rate(const PumpConfig& pump, const VaporState& vapor,
                              const ChamberGeometry& geometry, const BufferGasMix& mix,
                              const CalibrationConstants& calib);

RateBreakdown rate_breakdown(const SpinModelParams& params, const SpinState& state);

// damped fixed-point solve of the rate equations; residual < 1e-10
SpinState steady_state(const SpinModelParams& params);

struct TrajectoryPoint {
    double time;
    SpinState state;
};

// classic RK4; throws if populations leave [0, 1+1e-9]
std::vector<TrajectoryPoint> integrate(const SpinModelParams& params, const SpinState& initial,
                                       double duration, double step);

// steady T4 at the given rf detuning from the Larmor frequency
std::complex<double> rf_response(const SpinModelParams& params, double detuning_hz);

}  // namespace spincell

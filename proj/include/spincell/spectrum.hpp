#pragma once
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "spincell/spin_model.hpp"

namespace spincell {

struct SweepPlan {
    double center_hz = 0;
    double span_hz = 0;
    int points = 0;
    double dwell = 0.05;  // s per point

    void validate() const;
    double frequency(int i) const {
        return center_hz - 0.5 * span_hz + span_hz * double(i) / double(points - 1);
    }
};

struct NoiseModel {
    double white_noise_rms = 0;  // signal units / sqrt(Hz)
    std::uint64_t seed = 0;

    // per-point standard deviation for a given dwell (ENBW of a dwell average)
    double sigma(double dwell) const;
};

struct RfSpectrum {
    std::vector<double> frequencies_hz;
    std::vector<double> x;  // in-phase
    std::vector<double> y;  // quadrature
    std::vector<int> flags;  // nonzero = point failed, value kept NaN
    std::string metadata;    // JSON snapshot of the generating config

    void validate() const;
    std::size_t size() const { return frequencies_hz.size(); }
};

// sweep rf frequency across the resonance; amplitude scale is
// probe_gain * n * probe_path * |T4|, rotated by lock-in phase
RfSpectrum synthesize_spectrum(const SpinModelParams& params, const SweepPlan& plan,
                               const NoiseModel& noise, double lockin_phase = 0.0);

// second spectral component built from a higher diffusion mode; same center,
// wider line
RfSpectrum synthesize_two_mode(const SpinModelParams& params, const SweepPlan& plan,
                               const NoiseModel& noise, double mode2_weight);

// quadrature demodulation with a single-pole low-pass; returns settled (X, Y)
std::pair<double, double> demodulate(const std::vector<double>& samples, double sample_rate,
                                     double f_ref, double time_constant);

}  // namespace spincell

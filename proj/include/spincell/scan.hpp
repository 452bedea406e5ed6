#pragma once

#include "spincell/lorentz_fit.hpp"
#include "spincell/spectrum.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spincell {

enum class ScanAxis { pump_power, temperature, larmor };

std::string axis_name(ScanAxis axis);
ScanAxis axis_from_name(const std::string& name);

struct ScanConfig {
    ScanAxis axis = ScanAxis::pump_power;
    std::vector<double> values;  // W | K | Hz, strictly monotone
    SpinModelParams base;
    // sweep.center_hz == 0 tracks the Larmor point; span_hz == 0 sizes the
    // window from the predicted linewidth
    SweepPlan sweep;
    NoiseModel noise;
    int repeats = 1;

    void validate() const;
};

struct ScanRecord {
    double value = 0;
    int repeat = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    int model = 0;  // components selected
    double amplitude = 0;
    double fwhm_hz = 0;
    double center_hz = 0;
    double phase = 0;
    double residual_rms = 0;
    bool converged = false;
};

// repeat-averaged fitted parameters at one axis value
struct ScanPoint {
    double value = 0;
    double amplitude = 0;
    double fwhm_hz = 0;
    double center_hz = 0;
    int n_ok = 0;
};

struct ScanResult {
    ScanConfig config;
    std::vector<ScanRecord> records;  // point-major, then repeat
    std::vector<ScanPoint> points;    // only values with n_ok > 0
    std::size_t failures = 0;
};

ScanResult run_scan(const ScanConfig& config, int workers = 1);

// (fwhm(nearest 100 uW) - interpolated minimum at or above it) / fwhm(nearest 100 uW)
double relative_narrowing(const ScanResult& result);

struct TrendValue {
    double value = 0;
    double uncertainty = 0;
};

struct TrendStats {
    std::optional<TrendValue> low_power_slope_hz_per_c;
    std::optional<TrendValue> narrowing_exponent;
    std::vector<std::optional<double>> minimum_locations;  // per input scan
};

TrendStats trend_stats(const std::vector<ScanResult>& results);

struct InterpMinimum {
    double x = 0;
    double y = 0;
    bool interior = false;  // false: argmin sat on an edge, no interpolation
};

// quadratic through the argmin and its two neighbours
InterpMinimum interp_minimum(const std::vector<double>& x, const std::vector<double>& y);

// weighted least squares y = a + b x; returns slope b and its standard error
TrendValue weighted_slope(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& w);

}  // namespace spincell

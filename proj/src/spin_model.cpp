#include "spincell/spin_model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace spincell {

void PumpConfig::validate() const {
    if (power < 0) throw std::invalid_argument("pump power must be >= 0");
    if (beam_radius <= 0) throw std::invalid_argument("beam radius must be > 0");
}

void FieldConfig::validate() const {
    if (larmor_hz < 0) throw std::invalid_argument("larmor frequency must be >= 0");
    if (rf_amplitude_hz < 0) throw std::invalid_argument("rf amplitude must be >= 0");
}

void CalibrationConstants::validate() const {
    if (pump_rate_per_watt <= 0) throw std::invalid_argument("pump_rate_per_watt must be > 0");
    if (branching_beta <= 0 || branching_beta >= 1) throw std::invalid_argument("branching beta must be in (0,1)");
    if (pump_decoherence_eps < 0) throw std::invalid_argument("pump decoherence fraction must be >= 0");
    if (serf_knee_a <= 0) throw std::invalid_argument("serf knee must be > 0");
    if (stretched_exponent < 1) throw std::invalid_argument("stretched exponent must be >= 1");
    if (sec_flip_fraction <= 0 || sec_flip_fraction > 1) throw std::invalid_argument("sec flip fraction must be in (0,1]");
    if (probe_gain <= 0) throw std::invalid_argument("probe gain must be > 0");
    if (absorption_strength <= 0) throw std::invalid_argument("absorption strength must be > 0");
}

void SpinModelParams::validate() const {
    geometry.validate();
    mix.validate();
    pump.validate();
    field.validate();
    calib.validate();
    if (mix.empty() && wall_relaxation <= 0)
        throw std::invalid_argument("evacuated cell needs a wall relaxation rate");
    if (vapor.sec_rate <= 0) throw std::invalid_argument("sec rate must be > 0");
}

double SpinModelParams::gamma_diffusion() const {
    if (mix.empty()) return wall_relaxation;
    if (geometry.shape == ChamberGeometry::Shape::spherical)
        return mode_relaxation_sphere(geometry, vapor.diffusion_coefficient);
    return mode_relaxation(geometry, vapor.diffusion_coefficient, 1, 1, 1);
}

double serf_factor(double larmor_hz, double sec_rate, double a) {
    if (sec_rate <= 0) throw std::invalid_argument("sec rate must be > 0");
    double x = 2.0 * phys::pi * larmor_hz / sec_rate;
    return x * x / (x * x + a * a);
}

double stretched_suppression(double p4z, double sigma_exp) {
    if (std::abs(p4z) > 1.0 + 1e-9) throw std::invalid_argument("|P4z| must be <= 1");
    double base = 1.0 - std::max(0.0, std::min(p4z, 1.0));
    return std::pow(base, sigma_exp);
}

double effective_pumping_rate(const PumpConfig& pump, const VaporState& vapor,
                              const ChamberGeometry& geometry, const BufferGasMix& mix,
                              const CalibrationConstants& calib) {
    if (pump.power == 0) return 0.0;
    double overlap = std::min(1.0, pump.beam_area() / geometry.cross_section());
    PhysicalConstants pc;
    double od = optical_depth(pc, vapor, pump.detuning_hz, geometry.optical_path, mix,
                              calib.absorption_strength);
    double beer = od > 1e-9 ? -std::expm1(-od) / od : 1.0 - 0.5 * od;
    return calib.pump_rate_per_watt * pump.power * overlap * beer;
}

RateBreakdown rate_breakdown(const SpinModelParams& params, const SpinState& state) {
    RateBreakdown rb;
    rb.gamma_diffusion = params.gamma_diffusion();
    double q = serf_factor(params.field.larmor_hz, params.vapor.sec_rate, params.calib.serf_knee_a);
    double s = stretched_suppression(state.p4z, params.calib.stretched_exponent);
    rb.gamma_sec_effective = params.calib.sec_flip_fraction * params.vapor.sec_rate * q * s;
    rb.gamma_pump = params.calib.pump_decoherence_eps *
                    effective_pumping_rate(params.pump, params.vapor, params.geometry, params.mix,
                                           params.calib);
    rb.gamma_total = rb.gamma_diffusion + rb.gamma_sec_effective + rb.gamma_pump;
    return rb;
}

namespace {

struct Rates {
    double gp, rse, gd, beta, omega, delta;
};

Rates make_rates(const SpinModelParams& p) {
    Rates r;
    r.gp = effective_pumping_rate(p.pump, p.vapor, p.geometry, p.mix, p.calib);
    r.rse = p.vapor.sec_rate;
    r.gd = p.gamma_diffusion();
    r.beta = p.calib.branching_beta;
    r.omega = 2.0 * phys::pi * p.field.rf_amplitude_hz;
    r.delta = 2.0 * phys::pi * (p.field.rf_frequency_hz - p.field.larmor_hz);
    return r;
}

void derivs(const SpinModelParams& p, const Rates& r, const SpinState& y, SpinState& dy) {
    double eta3 = 1.0 - y.eta4;
    double pbar = eta3 * y.p3z + y.eta4 * y.p4z;
    double g2 = rate_breakdown(p, y).gamma_total;
    dy.eta4 = r.beta * r.gp * eta3 - (r.gd + r.rse) * (y.eta4 - 9.0 / 16.0);
    dy.eta3 = -dy.eta4;
    dy.p3z = r.gp * (1.0 - y.p3z) + r.rse * (pbar - y.p3z) - r.gd * y.p3z;
    dy.p4z = r.rse * (pbar - y.p4z) +
             r.beta * r.gp * (y.p3z - y.p4z) * eta3 / y.eta4 - r.gd * y.p4z;
    dy.t4 = std::complex<double>(0, 0.5 * r.omega) * y.p4z -
            std::complex<double>(g2, r.delta) * y.t4;
}

void warn_rf_amplitude(const Rates& r, double g2) {
    static bool warned = false;
    if (!warned && r.omega > 0.1 * g2) {
        std::fprintf(stderr,
                     "warning: rf amplitude %.3g s^-1 exceeds gamma_total/10 = %.3g s^-1; "
                     "linear-response model may be inaccurate\n",
                     r.omega, 0.1 * g2);
        warned = true;
    }
}

}  // namespace

SpinState steady_state(const SpinModelParams& params) {
    params.validate();
    Rates r = make_rates(params);
    double scale = r.gp + r.rse + r.gd + 1.0;
    SpinState y;
    const double damp = 0.7;
    const int max_iter = 20000;
    for (int it = 0; it < max_iter; ++it) {
        double eta3 = 1.0 - y.eta4;
        double pbar = eta3 * y.p3z + y.eta4 * y.p4z;
        double eta4_t = (r.gd + r.rse + 1e-300) > 0
                            ? 9.0 / 16.0 + r.beta * r.gp * eta3 / (r.gd + r.rse)
                            : y.eta4;
        eta4_t = std::min(eta4_t, 1.0);
        double p3_t = (r.gp + r.rse + r.gd) > 0
                          ? (r.gp + r.rse * pbar) / (r.gp + r.rse + r.gd)
                          : y.p3z;
        double c = r.beta * r.gp * eta3 / std::max(y.eta4, 1e-12);
        double p4_t = (r.rse + c + r.gd) > 0
                          ? (r.rse * pbar + c * y.p3z) / (r.rse + c + r.gd)
                          : y.p4z;
        y.eta4 += damp * (eta4_t - y.eta4);
        y.p3z += damp * (p3_t - y.p3z);
        y.p4z += damp * (p4_t - y.p4z);
        y.eta3 = 1.0 - y.eta4;
        SpinState dy;
        derivs(params, r, y, dy);
        double res = std::max({std::abs(dy.eta4), std::abs(dy.p3z), std::abs(dy.p4z)}) / scale;
        if (res < 1e-10 && it > 2) {
            double g2 = rate_breakdown(params, y).gamma_total;
            warn_rf_amplitude(r, g2);
            y.t4 = std::complex<double>(0, 0.5 * r.omega) * y.p4z /
                   std::complex<double>(g2, r.delta);
            return y;
        }
    }
    SpinState dy;
    derivs(params, r, y, dy);
    double res = std::max({std::abs(dy.eta4), std::abs(dy.p3z), std::abs(dy.p4z)}) / scale;
    throw std::runtime_error("steady_state did not converge; residual " + std::to_string(res));
}

namespace {

SpinState axpy(const SpinState& y, double h, const SpinState& d) {
    SpinState out;
    out.eta4 = y.eta4 + h * d.eta4;
    out.eta3 = 1.0 - out.eta4;
    out.p3z = y.p3z + h * d.p3z;
    out.p4z = y.p4z + h * d.p4z;
    out.t4 = y.t4 + h * d.t4;
    return out;
}

void check_bounds(const SpinState& y) {
    const double tol = 1.0 + 1e-9;
    if (std::abs(y.p3z) > tol || std::abs(y.p4z) > tol || std::abs(y.t4) > tol ||
        y.eta4 < -1e-9 || y.eta4 > tol)
        throw std::runtime_error("integrator invariant violation: polarization out of bounds");
}

}  // namespace

std::vector<TrajectoryPoint> integrate(const SpinModelParams& params, const SpinState& initial,
                                       double duration, double step) {
    if (step <= 0 || duration < step) throw std::invalid_argument("need step > 0 and duration >= step");
    params.validate();
    Rates r = make_rates(params);
    long n = std::lround(duration / step);
    std::vector<TrajectoryPoint> out;
    out.reserve(std::min<long>(n + 1, 1 << 20));
    SpinState y = initial;
    y.eta3 = 1.0 - y.eta4;
    out.push_back({0.0, y});
    SpinState k1, k2, k3, k4;
    for (long i = 0; i < n; ++i) {
        derivs(params, r, y, k1);
        derivs(params, r, axpy(y, 0.5 * step, k1), k2);
        derivs(params, r, axpy(y, 0.5 * step, k2), k3);
        derivs(params, r, axpy(y, step, k3), k4);
        SpinState d;
        d.eta4 = (k1.eta4 + 2 * k2.eta4 + 2 * k3.eta4 + k4.eta4) / 6.0;
        d.p3z = (k1.p3z + 2 * k2.p3z + 2 * k3.p3z + k4.p3z) / 6.0;
        d.p4z = (k1.p4z + 2 * k2.p4z + 2 * k3.p4z + k4.p4z) / 6.0;
        d.t4 = (k1.t4 + 2.0 * k2.t4 + 2.0 * k3.t4 + k4.t4) / 6.0;
        y = axpy(y, step, d);
        check_bounds(y);
        out.push_back({(i + 1) * step, y});
    }
    return out;
}

std::complex<double> rf_response(const SpinModelParams& params, double detuning_hz) {
    SpinModelParams p = params;
    p.field.rf_frequency_hz = p.field.larmor_hz + detuning_hz;
    return steady_state(p).t4;
}

}  // namespace spincell

#include "spincell/spectrum.hpp"

#include <cmath>
#include <stdexcept>

#include "spincell/rng.hpp"

namespace spincell {

void SweepPlan::validate() const {
    if (span_hz <= 0) throw std::invalid_argument("sweep span must be > 0");
    if (points < 16) throw std::invalid_argument("sweep needs at least 16 points");
    if (dwell <= 0) throw std::invalid_argument("dwell must be > 0");
}

double NoiseModel::sigma(double dwell) const {
    return white_noise_rms / std::sqrt(2.0 * dwell);
}

void RfSpectrum::validate() const {
    if (frequencies_hz.size() != x.size() || x.size() != y.size())
        throw std::invalid_argument("spectrum arrays must have equal length");
    for (std::size_t i = 1; i < frequencies_hz.size(); ++i)
        if (frequencies_hz[i] <= frequencies_hz[i - 1])
            throw std::invalid_argument("frequencies must be strictly increasing");
}

namespace {

RfSpectrum synth_impl(const SpinModelParams& params, const SweepPlan& plan,
                      const NoiseModel& noise, double lockin_phase, double mode2_weight) {
    plan.validate();
    SpinModelParams p = params;
    double scale = p.calib.probe_gain * p.vapor.number_density * p.probe_path;

    // second component: first excited diffusion mode along the long axes
    double g2_extra = 0.0;
    if (mode2_weight > 0 && !p.mix.empty() &&
        p.geometry.shape == ChamberGeometry::Shape::rectangular) {
        g2_extra = mode_relaxation(p.geometry, p.vapor.diffusion_coefficient, 1, 2, 1) -
                   mode_relaxation(p.geometry, p.vapor.diffusion_coefficient, 1, 1, 1);
    }

    RfSpectrum s;
    s.frequencies_hz.resize(plan.points);
    s.x.resize(plan.points);
    s.y.resize(plan.points);
    s.flags.assign(plan.points, 0);

    RateBreakdown rb0 = rate_breakdown(p, steady_state(p));
    if (plan.span_hz < 3.0 * rb0.fwhm_hz())
        std::fprintf(stderr, "warning: sweep span %.3g Hz < 3x expected fwhm %.3g Hz\n",
                     plan.span_hz, rb0.fwhm_hz());

    std::complex<double> rot{std::cos(lockin_phase), std::sin(lockin_phase)};
    Rng rng(noise.seed);
    double sig = noise.sigma(plan.dwell);
    for (int i = 0; i < plan.points; ++i) {
        double f = plan.frequency(i);
        s.frequencies_hz[i] = f;
        try {
            std::complex<double> z = rf_response(p, f - p.field.larmor_hz);
            if (mode2_weight > 0) {
                SpinModelParams p2 = p;
                p2.wall_relaxation = p.gamma_diffusion() + g2_extra;
                p2.mix.components.clear();  // reuse the wall-rate path for the wider mode
                z += mode2_weight * rf_response(p2, f - p.field.larmor_hz);
            }
            z *= scale * rot;
            double nx = sig > 0 ? sig * rng.next_gauss() : 0.0;
            double ny = sig > 0 ? sig * rng.next_gauss() : 0.0;
            s.x[i] = z.real() + nx;
            s.y[i] = z.imag() + ny;
        } catch (const std::exception&) {
            s.flags[i] = 1;
            s.x[i] = std::nan("");
            s.y[i] = std::nan("");
            if (sig > 0) { rng.next_gauss(); rng.next_gauss(); }  // keep the stream aligned
        }
    }
    return s;
}

}  // namespace

RfSpectrum synthesize_spectrum(const SpinModelParams& params, const SweepPlan& plan,
                               const NoiseModel& noise, double lockin_phase) {
    return synth_impl(params, plan, noise, lockin_phase, 0.0);
}

RfSpectrum synthesize_two_mode(const SpinModelParams& params, const SweepPlan& plan,
                               const NoiseModel& noise, double mode2_weight) {
    return synth_impl(params, plan, noise, 0.0, mode2_weight);
}

std::pair<double, double> demodulate(const std::vector<double>& samples, double sample_rate,
                                     double f_ref, double time_constant) {
    if (sample_rate <= 4.0 * f_ref) throw std::invalid_argument("undersampled: need rate > 4 f_ref");
    if (time_constant <= 10.0 / f_ref) throw std::invalid_argument("time constant must exceed 10/f_ref");
    double dt = 1.0 / sample_rate;
    double alpha = dt / (time_constant + dt);  // single pole
    double x = 0, y = 0;
    const double w = 2.0 * phys::pi * f_ref;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double t = double(i) * dt;
        double xi = 2.0 * samples[i] * std::cos(w * t);
        double yi = -2.0 * samples[i] * std::sin(w * t);
        x += alpha * (xi - x);
        y += alpha * (yi - y);
    }
    return {0.5 * x, 0.5 * y};
}

}  // namespace spincell

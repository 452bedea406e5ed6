#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "spincell/lorentz_fit.hpp"
#include "spincell/rng.hpp"
#include "spincell/spectrum.hpp"

using namespace spincell;
using doctest::Approx;

namespace {

SpinModelParams wafer_params(double power_w) {
    SpinModelParams p;
    PhysicalConstants pc;
    p.mix.components = {{"N2", 20000.0, 293.15}};
    p.vapor = vapor_state(pc, 383.15, p.mix);
    p.geometry = ChamberGeometry::box(0.002, 0.004, 0.004, 0.004);
    p.pump.power = power_w;
    p.pump.beam_radius = 2e-3;
    p.field.larmor_hz = 15000.0;
    p.field.rf_amplitude_hz = 1.0;
    p.field.rf_frequency_hz = 15000.0;
    p.calib.absorption_strength = 0.14866494910353797;
    return p;
}

RfSpectrum make_line(double f0, double f1, int n, const std::vector<LorentzComponent>& comps,
                     double sigma, std::uint64_t seed) {
    RfSpectrum s;
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        double f = f0 + (f1 - f0) * double(i) / double(n - 1);
        std::complex<double> z{0, 0};
        for (const auto& c : comps) {
            double gam = phys::pi * c.fwhm_hz;
            z += c.amplitude * std::polar(1.0, c.phase) * gam /
                 std::complex<double>(gam, 2.0 * phys::pi * (f - c.center_hz));
        }
        s.frequencies_hz.push_back(f);
        s.x.push_back(z.real() + (sigma > 0 ? sigma * rng.next_gauss() : 0.0));
        s.y.push_back(z.imag() + (sigma > 0 ? sigma * rng.next_gauss() : 0.0));
        s.flags.push_back(0);
    }
    return s;
}

}  // namespace

TEST_CASE("noiseless synthesis is the scaled rf response") {
    auto p = wafer_params(3e-3);
    SweepPlan plan{15000.0, 26000.0, 41, 0.05};
    auto s = synthesize_spectrum(p, plan, NoiseModel{});
    REQUIRE(s.size() == 41);
    double scale = p.calib.probe_gain * p.vapor.number_density * p.probe_path;
    for (int i = 0; i < plan.points; ++i) {
        CHECK(s.frequencies_hz[i] == Approx(plan.frequency(i)).epsilon(1e-15));
        auto z = rf_response(p, s.frequencies_hz[i] - p.field.larmor_hz);
        CHECK(s.x[i] == Approx(scale * z.real()).epsilon(1e-13));
        CHECK(s.y[i] == Approx(scale * z.imag()).epsilon(1e-13));
        CHECK(s.flags[i] == 0);
    }

    auto rot = synthesize_spectrum(p, plan, NoiseModel{}, 0.7);
    for (int i = 0; i < plan.points; ++i) {
        auto z = std::complex<double>(s.x[i], s.y[i]) * std::polar(1.0, 0.7);
        CHECK(rot.x[i] == Approx(z.real()).epsilon(1e-12));
        CHECK(rot.y[i] == Approx(z.imag()).epsilon(1e-12));
    }
}

TEST_CASE("two-mode synthesis adds a wider line from the next diffusion mode") {
    auto p = wafer_params(3e-3);
    SweepPlan plan{15000.0, 26000.0, 21, 0.05};
    const double w = 0.4;
    auto two = synthesize_two_mode(p, plan, NoiseModel{}, w);

    auto p2 = p;
    double extra = mode_relaxation(p.geometry, p.vapor.diffusion_coefficient, 1, 2, 1) -
                   mode_relaxation(p.geometry, p.vapor.diffusion_coefficient, 1, 1, 1);
    p2.wall_relaxation = p.gamma_diffusion() + extra;
    p2.mix.components.clear();
    auto base = synthesize_spectrum(p, plan, NoiseModel{});
    auto mode2 = synthesize_spectrum(p2, plan, NoiseModel{});
    for (int i = 0; i < plan.points; ++i) {
        CHECK(two.x[i] == Approx(base.x[i] + w * mode2.x[i]).epsilon(1e-12));
        CHECK(two.y[i] == Approx(base.y[i] + w * mode2.y[i]).epsilon(1e-12));
    }
}

TEST_CASE("noise scale and seeding") {
    NoiseModel nm{2e-8, 90210};
    CHECK(nm.sigma(0.05) == Approx(2e-8 / std::sqrt(0.1)).epsilon(1e-12));

    auto p = wafer_params(3e-3);
    SweepPlan plan{15000.0, 26000.0, 161, 0.05};
    auto clean = synthesize_spectrum(p, plan, NoiseModel{});
    auto a = synthesize_spectrum(p, plan, nm);
    auto b = synthesize_spectrum(p, plan, nm);
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    auto c = synthesize_spectrum(p, plan, NoiseModel{2e-8, 90211});
    CHECK(a.x != c.x);

    double sig = nm.sigma(plan.dwell);
    double ss = 0;
    for (int i = 0; i < plan.points; ++i) {
        double d = a.x[i] - clean.x[i];
        ss += d * d;
        double e = a.y[i] - clean.y[i];
        ss += e * e;
    }
    double sample = std::sqrt(ss / (2.0 * plan.points));
    CHECK(sample == Approx(sig).epsilon(0.2));
}

TEST_CASE("demodulation recovers amplitude and phase of a tone") {
    const double fs = 10000.0, fr = 100.0, tau = 0.5;
    const double amp = 0.8, phase = 0.6;
    std::vector<double> v(60000);
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = amp * std::cos(2.0 * phys::pi * fr * double(i) / fs + phase);
    auto [x, y] = demodulate(v, fs, fr, tau);
    CHECK(x == Approx(0.5 * amp * std::cos(phase)).epsilon(5e-3));
    CHECK(y == Approx(0.5 * amp * std::sin(phase)).epsilon(5e-3));
    CHECK_THROWS_AS(demodulate(v, 350.0, fr, tau), std::invalid_argument);
    CHECK_THROWS_AS(demodulate(v, fs, fr, 0.05), std::invalid_argument);
}

TEST_CASE("single-line fit recovers exact parameters") {
    std::vector<LorentzComponent> truth{{15000.0, 100.0, 4.2e-4, 0.6}};
    auto s = make_line(14600.0, 15400.0, 201, truth, 0.0, 0);
    auto fit = fit_lorentzian(s, 1);
    REQUIRE(fit.converged);
    CHECK_FALSE(fit.degenerate);
    const auto& c = fit.main();
    CHECK(c.center_hz == Approx(15000.0).epsilon(1e-8));
    CHECK(c.fwhm_hz == Approx(100.0).epsilon(1e-6));
    CHECK(c.amplitude == Approx(4.2e-4).epsilon(1e-6));
    CHECK(c.phase == Approx(0.6).epsilon(1e-6));
    CHECK(fit.residual_rms < 1e-9 * c.amplitude);
    CHECK(fit.covariance.size() == 16);
}

TEST_CASE("two-component fit separates overlapping lines") {
    std::vector<LorentzComponent> truth{{15000.0, 100.0, 1e-3, 0.3},
                                        {15000.0, 320.0, 4e-4, 0.3}};
    auto s = make_line(14200.0, 15800.0, 241, truth, 0.0, 0);
    auto fit = fit_lorentzian(s, 2);
    REQUIRE(fit.converged);
    CHECK_FALSE(fit.degenerate);
    auto a = fit.components[0], b = fit.components[1];
    if (a.fwhm_hz > b.fwhm_hz) std::swap(a, b);
    CHECK(a.fwhm_hz == Approx(100.0).epsilon(1e-4));
    CHECK(b.fwhm_hz == Approx(320.0).epsilon(1e-4));
    CHECK(a.amplitude == Approx(1e-3).epsilon(1e-4));
    CHECK(b.amplitude == Approx(4e-4).epsilon(1e-4));
    CHECK(fit.main().fwhm_hz == Approx(100.0).epsilon(1e-4));
}

TEST_CASE("model selection prefers the simpler line shape") {
    std::vector<LorentzComponent> one{{15000.0, 120.0, 1e-3, 0.5}};
    auto s1 = make_line(14400.0, 15600.0, 161, one, 1e-6, 77);
    CHECK(select_model(s1) == 1);

    std::vector<LorentzComponent> two{{15000.0, 100.0, 1e-3, 0.5},
                                      {15000.0, 300.0, 5e-4, 0.5}};
    auto s2 = make_line(14200.0, 15800.0, 161, two, 1e-6, 77);
    CHECK(select_model(s2) == 2);
}

TEST_CASE("flagged and invalid points are skipped") {
    std::vector<LorentzComponent> truth{{15000.0, 100.0, 4.2e-4, 0.6}};
    auto s = make_line(14600.0, 15400.0, 201, truth, 0.0, 0);
    for (int i = 0; i < 201; i += 7) s.flags[i] = 1;
    for (int i = 3; i < 201; i += 11) s.x[i] = std::nan("");
    auto fit = fit_lorentzian(s, 1);
    REQUIRE(fit.converged);
    CHECK(fit.main().fwhm_hz == Approx(100.0).epsilon(1e-6));

    auto few = make_line(14600.0, 15400.0, 20, truth, 0.0, 0);
    for (int i = 0; i < 13; ++i) few.flags[i] = 1;
    CHECK_THROWS_AS(fit_lorentzian(few, 1), std::invalid_argument);
    CHECK_THROWS_AS(fit_lorentzian(s, 3), std::invalid_argument);
}

TEST_CASE("plan and spectrum validation") {
    CHECK_THROWS_AS((SweepPlan{15000.0, 0.0, 41, 0.05}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SweepPlan{15000.0, 100.0, 8, 0.05}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SweepPlan{15000.0, 100.0, 41, 0.0}.validate()), std::invalid_argument);
    SweepPlan neg{0.0, 200.0, 21, 0.05};
    neg.validate();  // negative frequencies are allowed
    CHECK(neg.frequency(0) == Approx(-100.0));

    RfSpectrum bad;
    bad.frequencies_hz = {1.0, 2.0};
    bad.x = {0.0};
    bad.y = {0.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    RfSpectrum dup;
    dup.frequencies_hz = {1.0, 1.0};
    dup.x = {0.0, 0.0};
    dup.y = {0.0, 0.0};
    CHECK_THROWS_AS(dup.validate(), std::invalid_argument);
}

#include "spincell/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "spincell/biot_savart.hpp"
#include "spincell/config.hpp"
#include "spincell/io.hpp"
#include "spincell/lorentz_fit.hpp"
#include "spincell/rng.hpp"
#include "spincell/scan.hpp"
#include "spincell/spectrum.hpp"
#include "spincell/spin_model.hpp"
#include "spincell/thermal.hpp"
#include "spincell/vapor.hpp"

namespace spincell {
namespace {

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// accumulates named sub-checks; the criterion passes when all hold
struct Checks {
    bool ok = true;
    std::string text;
    void add(bool cond, const std::string& what) {
        if (!text.empty()) text += "; ";
        text += what;
        if (!cond) {
            ok = false;
            text += " <-- fail";
        }
    }
};

using Outcome = std::pair<bool, std::string>;

struct LinFit {
    double a = 0, b = 0;  // y = a + b x
};

LinFit lsq(const std::vector<double>& x, const std::vector<double>& y) {
    double n = double(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LinFit f;
    f.b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.a = (sy - f.b * sx) / n;
    return f;
}

int scan_workers(bool parallel) {
    if (!parallel) return 1;
    unsigned n = std::thread::hardware_concurrency();
    return int(std::min(std::max(n, 1u), 16u));
}

CellConfig wafer_config() { return load_cell_config(resolve_config_path("wafer_cell.json")); }
CellConfig paraffin_config() { return load_cell_config(resolve_config_path("paraffin_cell.json")); }
CellConfig sphere_config() { return load_cell_config(resolve_config_path("spherical_glass_cell.json")); }
LayoutConfig layout_config() { return load_layout_config(resolve_config_path("cell_layout.json")); }

// single-shot noiseless pump scan with the cell held at temperature_k
ScanResult pump_scan(const CellConfig& cfg, std::vector<double> powers_w, double temperature_k,
                     double larmor_hz, int workers) {
    ScanConfig sc;
    sc.axis = ScanAxis::pump_power;
    sc.values = std::move(powers_w);
    sc.base = cfg.params;
    sc.base.vapor = vapor_state(PhysicalConstants{}, temperature_k, sc.base.mix);
    sc.base.field.larmor_hz = larmor_hz;
    sc.sweep = cfg.sweep;
    sc.sweep.center_hz = 0;  // track the larmor point
    sc.sweep.span_hz = 0;    // size the window from the predicted width
    sc.noise = NoiseModel{0.0, cfg.noise.seed};
    sc.repeats = 1;
    return run_scan(sc, workers);
}

std::vector<double> micro_watts(const ScanResult& r) {
    std::vector<double> v;
    for (const auto& p : r.points) v.push_back(p.value * 1e6);
    return v;
}

std::vector<double> widths(const ScanResult& r) {
    std::vector<double> v;
    for (const auto& p : r.points) v.push_back(p.fwhm_hz);
    return v;
}

std::vector<double> amplitudes(const ScanResult& r) {
    std::vector<double> v;
    for (const auto& p : r.points) v.push_back(p.amplitude);
    return v;
}

double flatness(const std::vector<double>& v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double dev = 0;
    for (double x : v) dev = std::max(dev, std::abs(x - mean));
    return dev / mean;
}

// ---- 1: analytic lowest diffusion mode vs explicit grid decay --------------

Outcome c1_mode_rate(bool parallel) {
    auto cfg = wafer_config();
    PhysicalConstants pc;
    auto vap = vapor_state(pc, 383.15, cfg.params.mix);
    const auto& g = cfg.params.geometry;
    double analytic = mode_relaxation(g, vap.diffusion_coefficient, 1, 1, 1);
    double grid =
        grid_diffusion_decay(g.lx, g.ly, g.lz, vap.diffusion_coefficient, 31, 61, 61, parallel);
    double rel = std::abs(grid / analytic - 1.0);
    Checks c;
    c.add(rel <= 0.05,
          fmt("grid decay %.4g vs analytic %.4g s^-1, gap %.2e <= 0.05", grid, analytic, rel));
    return {c.ok, c.text};
}

// ---- 2: line-fit recovery, noiseless and at snr 100 ------------------------

Outcome c2_fit_recovery() {
    const double amp = 4.2e-4, cen = 15000.0, wid = 100.0, phi = 0.6;
    const double gh = phys::pi * wid;
    const int npts = 201;
    const double span = 800.0;
    const std::complex<double> face{std::cos(phi), std::sin(phi)};
    RfSpectrum s;
    s.flags.assign(npts, 0);
    for (int i = 0; i < npts; ++i) {
        double f = cen - span / 2 + span * double(i) / (npts - 1);
        std::complex<double> z = amp * face * gh / std::complex<double>(gh, 2 * phys::pi * (f - cen));
        s.frequencies_hz.push_back(f);
        s.x.push_back(z.real());
        s.y.push_back(z.imag());
    }
    auto clean = fit_lorentzian(s, 1);
    const auto& m = clean.main();
    Checks c;
    c.add(clean.converged, "noiseless fit converged");
    c.add(std::abs(m.fwhm_hz / wid - 1.0) <= 1e-3,
          fmt("width %.4f Hz within 0.1%% of %.0f", m.fwhm_hz, wid));
    c.add(std::abs(m.amplitude / amp - 1.0) <= 1e-3, fmt("amplitude within 0.1%%"));
    c.add(std::abs(m.center_hz - cen) <= 1e-3 * wid,
          fmt("center %.3f Hz within 0.1 Hz of %.0f", m.center_hz, cen));

    const double sig = amp / 100.0;
    std::vector<double> errs;
    for (int t = 0; t < 50; ++t) {
        RfSpectrum noisy = s;
        Rng rng(Rng::derive(20260814ull, std::uint64_t(t), 0));
        for (int i = 0; i < npts; ++i) {
            noisy.x[i] += sig * rng.next_gauss();
            noisy.y[i] += sig * rng.next_gauss();
        }
        auto fit = fit_lorentzian(noisy, 1);
        errs.push_back(fit.converged ? std::abs(fit.main().fwhm_hz / wid - 1.0)
                                     : std::numeric_limits<double>::infinity());
    }
    std::nth_element(errs.begin(), errs.begin() + 25, errs.end());
    double median = errs[25];
    c.add(median < 0.02, fmt("snr-100 median width error %.4f < 0.02 over 50 seeds", median));
    return {c.ok, c.text};
}

// ---- 3: transient dynamics reach the fixed point ----------------------------

SpinModelParams synthetic_rates(double gp, double r, double gd, double larmor_hz,
                                double rf_offset_hz, double rf_amplitude_hz) {
    SpinModelParams p;
    p.vapor = VaporState{373.15, 1.0, 200.0, r, 0.0, true};
    p.geometry = ChamberGeometry::box(0.01, 0.01, 0.01, 0.01);
    p.wall_relaxation = gd;
    p.pump.power = gp / p.calib.pump_rate_per_watt;
    p.pump.beam_radius = 0.1;  // full overlap, negligible column: rate is k_p * power
    p.field.larmor_hz = larmor_hz;
    p.field.rf_amplitude_hz = rf_amplitude_hz;
    p.field.rf_frequency_hz = larmor_hz + rf_offset_hz;
    return p;
}

double state_distance(const SpinState& a, const SpinState& b) {
    double d = std::abs(a.eta4 - b.eta4);
    d = std::max(d, std::abs(a.p3z - b.p3z));
    d = std::max(d, std::abs(a.p4z - b.p4z));
    d = std::max(d, std::abs(a.t4 - b.t4));
    return d;
}

Outcome c3_dynamics(bool parallel) {
    const int n = 100;
    std::vector<double> rels(n, 0.0);
    std::vector<int> bad(n, 0);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int i = 0; i < n; ++i) {
        try {
            Rng rng(Rng::derive(777001ull, std::uint64_t(i), 0));
            double base = std::pow(10.0, 1.0 + 3.0 * rng.next_double());
            auto spread = [&] { return std::pow(10.0, 0.7 * (2.0 * rng.next_double() - 1.0)); };
            double gp = base * spread(), r = base * spread(), gd = base * spread();
            double larmor = 100.0 + 4900.0 * rng.next_double();
            double off = (2.0 * rng.next_double() - 1.0) * base / (2 * phys::pi);
            SpinModelParams p = synthetic_rates(gp, r, gd, larmor, off, base / 1000.0);
            SpinState ss = steady_state(p);
            RateBreakdown rb = rate_breakdown(p, ss);
            double slow = std::min({gd, r, gp});
            double fast = gp + r + gd + rb.gamma_total + 2 * phys::pi * std::abs(off);
            auto traj = integrate(p, SpinState{}, 16.0 / slow, 0.01 / fast);
            const SpinState& y = traj.back().state;
            double rel = std::abs(y.eta4 - ss.eta4) / std::max(std::abs(ss.eta4), 1e-12);
            rel = std::max(rel, std::abs(y.p3z - ss.p3z) / std::max(std::abs(ss.p3z), 1e-12));
            rel = std::max(rel, std::abs(y.p4z - ss.p4z) / std::max(std::abs(ss.p4z), 1e-12));
            rel = std::max(rel, std::abs(y.t4 - ss.t4) / std::max(std::abs(ss.t4), 1e-12));
            rels[i] = rel;
        } catch (...) {
            bad[i] = 1;
        }
    }
    int nbad = std::accumulate(bad.begin(), bad.end(), 0);
    double worst = *std::max_element(rels.begin(), rels.end());
    Checks c;
    c.add(nbad == 0, fmt("%d/%d random rate sets integrated", n - nbad, n));
    c.add(worst <= 1e-6, fmt("worst relative gap to the fixed point %.2e <= 1e-6", worst));

    // step-halving order on one pinned case
    SpinModelParams p = synthetic_rates(100.0, 100.0, 100.0, 1000.0, 30.0, 1.0);
    auto final_state = [&](double h) { return integrate(p, SpinState{}, 0.05, h).back().state; };
    SpinState y1 = final_state(4e-4), y2 = final_state(2e-4), y3 = final_state(1e-4);
    double order = std::log2(state_distance(y1, y2) / state_distance(y2, y3));
    c.add(order >= 3.5 && order <= 4.5, fmt("step-halving order %.2f in [3.5,4.5]", order));
    return {c.ok, c.text};
}

// ---- 4: segment field against wire and loop references ----------------------

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Outcome c4_field_oracles() {
    Checks c;
    {
        double cur = 0.7, d = 0.01;
        Vec3 b = segment_field({-50, 0, 0}, {50, 0, 0}, {0, d, 0}, cur);
        double ref = phys::mu0 * cur / (2 * phys::pi * d);
        bool axial = std::abs(b[0]) < 1e-9 * ref && std::abs(b[1]) < 1e-9 * ref;
        c.add(std::abs(b[2] - ref) / ref <= 0.01 && axial,
              fmt("100 m segment at 10 mm: %.6g vs wire %.6g T", b[2], ref));
    }
    {
        double cur = 0.25, rad = 0.01;
        int nseg = 360;
        Vec3 acc{0, 0, 0};
        for (int k = 0; k < nseg; ++k) {
            double t0 = 2 * phys::pi * k / nseg, t1 = 2 * phys::pi * (k + 1) / nseg;
            Vec3 a{rad * std::cos(t0), rad * std::sin(t0), 0};
            Vec3 b{rad * std::cos(t1), rad * std::sin(t1), 0};
            Vec3 df = segment_field(a, b, {0, 0, 0}, cur);
            for (int q = 0; q < 3; ++q) acc[q] += df[q];
        }
        double ref = phys::mu0 * cur / (2 * rad);
        c.add(std::abs(acc[2] - ref) / ref <= 0.005,
              fmt("360-gon loop center: %.6g vs %.6g T", acc[2], ref));
    }
    {
        HeaterTrack t1;
        t1.vertices = {{0, 0}, {0.01, 0}, {0.01, 0.01}};
        t1.width = 1e-4;
        HeaterTrack t2;
        t2.vertices = {{0.002, 0.005}, {0.008, 0.005}};
        t2.width = 1e-4;
        t2.return_path = true;
        HeaterLayout one, two, both;
        one.tracks = {t1};
        two.tracks = {t2};
        both.tracks = {t1, t2};
        const Vec3 probes[] = {{0.005, 0.002, 0.001}, {0.001, 0.001, -0.002}, {0.012, 0.006, 0.0005}};
        double cur = 0.0183;
        double superr = 0, linerr = 0;
        for (const auto& pt : probes) {
            Vec3 s = heater_b_field(both, cur, pt);
            Vec3 u = heater_b_field(one, cur, pt);
            Vec3 v = heater_b_field(two, cur, pt);
            Vec3 sum{u[0] + v[0], u[1] + v[1], u[2] + v[2]};
            Vec3 ds{s[0] - sum[0], s[1] - sum[1], s[2] - sum[2]};
            superr = std::max(superr, norm3(ds) / norm3(s));
            Vec3 s2 = heater_b_field(both, 2 * cur, pt);
            Vec3 dl{s2[0] - 2 * s[0], s2[1] - 2 * s[1], s2[2] - 2 * s[2]};
            linerr = std::max(linerr, norm3(dl) / norm3(s2));
        }
        c.add(superr <= 1e-12, fmt("superposition gap %.1e <= 1e-12", superr));
        c.add(linerr <= 1e-15, fmt("current-doubling gap %.1e <= 1e-15", linerr));
    }
    return {c.ok, c.text};
}

// ---- 5: thermal energy balance, trivial case, grid convergence -------------

Outcome c5_thermal(bool parallel) {
    auto lay = layout_config();
    ThermalOptions opt = lay.thermal;
    opt.parallel = parallel;
    auto sol = solve_thermal(lay.stack, lay.cutouts, lay.heater, lay.ambient_k, opt);
    Checks c;
    double gap = std::abs(sol.input_power_w - sol.boundary_flux_w) / sol.input_power_w;
    c.add(gap <= 0.01, fmt("input %.4g W vs boundary flux %.4g W, gap %.2e <= 0.01",
                           sol.input_power_w, sol.boundary_flux_w, gap));

    auto lay0 = lay;
    lay0.heater.drive.volts = 0;
    auto cold = solve_thermal(lay0.stack, lay0.cutouts, lay0.heater, lay.ambient_k, opt);
    double dev = 0;
    for (double t : cold.field.t_k) dev = std::max(dev, std::abs(t - lay.ambient_k));
    c.add(dev <= 1e-9, fmt("zero drive stays at ambient within %.1e K (<= 1e-9)", dev));

    ThermalOptions o2 = opt;
    o2.nx *= 2;
    o2.ny *= 2;
    o2.nz *= 2;
    auto fine = solve_thermal(lay.stack, lay.cutouts, lay.heater, lay.ambient_k, o2);
    double drift = std::abs(fine.field.peak_k() - sol.field.peak_k()) / sol.field.peak_k();
    c.add(drift <= 0.02, fmt("peak %.3f K vs %.3f K at half pitch, drift %.2e <= 0.02",
                             sol.field.peak_k(), fine.field.peak_k(), drift));
    return {c.ok, c.text};
}

// ---- 6: byte-identical scan output across worker counts ---------------------

Outcome c6_determinism() {
    auto cfg = wafer_config();
    ScanConfig sc;
    sc.axis = ScanAxis::pump_power;
    sc.values = {100e-6, 500e-6, 2000e-6};
    sc.base = cfg.params;
    sc.sweep = cfg.sweep;
    sc.sweep.center_hz = 0;
    sc.sweep.span_hz = 0;
    sc.sweep.points = 121;
    sc.noise = NoiseModel{2e-8, 90210};
    sc.repeats = 2;
    auto r1 = run_scan(sc, 1);
    auto r2 = run_scan(sc, 2);
    auto r8 = run_scan(sc, 8);
    auto r1b = run_scan(sc, 1);
    std::string k1 = scan_records_csv(r1);
    std::string k2 = scan_records_csv(r2);
    std::string k8 = scan_records_csv(r8);
    Checks c;
    c.add(r1.failures == 0, fmt("%zu fit failures", r1.failures));
    c.add(k1 == k2 && k1 == k8, "record csv byte-identical for 1/2/8 workers");
    c.add(k1 == scan_records_csv(r1b), "repeat run byte-identical");
    c.add(scan_points_csv(r1) == scan_points_csv(r8), "averaged csv identical");
    return {c.ok, c.text};
}

// ---- 7: saturated-density anchor windows ------------------------------------

Outcome c7_density_anchors() {
    PhysicalConstants pc;
    double cold = saturated_density(pc, 298.15) * 1e-6;  // cm^-3
    double hot = saturated_density(pc, 393.15) * 1e-6;
    Checks c;
    c.add(cold >= 1.2e11 / 1.5 && cold <= 1.2e11 * 1.5,
          fmt("25 C density %.3e cm^-3 vs window [%.1e,%.1e]", cold, 1.2e11 / 1.5, 1.2e11 * 1.5));
    c.add(hot >= 1.0e13 / 1.5 && hot <= 1.0e13 * 1.5,
          fmt("120 C density %.3e cm^-3 vs window [%.1e,%.1e]", hot, 1.0e13 / 1.5, 1.0e13 * 1.5));
    return {c.ok, c.text};
}

// ---- 8: hot-cell pump scan shape --------------------------------------------

Outcome c8_hot_pump_scan(int workers) {
    auto cfg = wafer_config();
    auto res = pump_scan(cfg, cfg.pump_power_values_w, 383.15, cfg.params.field.larmor_hz, workers);
    Checks c;
    c.add(res.points.size() == cfg.pump_power_values_w.size(),
          fmt("%zu/%zu set points fitted", res.points.size(), cfg.pump_power_values_w.size()));
    if (res.points.empty()) return {false, c.text};
    auto uw = micro_watts(res);
    auto w = widths(res);
    auto a = amplitudes(res);

    std::vector<double> low;
    for (std::size_t i = 0; i < uw.size(); ++i)
        if (uw[i] < 300.0) low.push_back(w[i]);
    double flat = flatness(low);
    c.add(flat <= 0.15, fmt("width flat to %.3f (<= 0.15) below 300 uW", flat));

    auto wmin = interp_minimum(uw, w);
    c.add(wmin.interior && wmin.x >= 300.0 && wmin.x <= 6000.0,
          fmt("width minimum at %.0f uW inside [300,6000]", wmin.x));

    std::vector<double> neg(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) neg[i] = -a[i];
    auto amax = interp_minimum(uw, neg);
    c.add(amax.interior && amax.x >= 1500.0 && amax.x <= 6000.0,
          fmt("amplitude maximum at %.0f uW inside [1500,6000]", amax.x));

    bool mono = true;
    for (std::size_t i = 1; i < uw.size(); ++i)
        if (uw[i - 1] > wmin.x && w[i] <= w[i - 1]) mono = false;
    c.add(mono, "width strictly increasing above the minimum");
    return {c.ok, c.text};
}

// ---- 9: coated-cell pump scan shape -----------------------------------------

Outcome c9_coated_pump_scan(int workers) {
    auto cfg = paraffin_config();
    auto res = pump_scan(cfg, cfg.pump_power_values_w, cfg.params.vapor.temperature,
                         cfg.params.field.larmor_hz, workers);
    Checks c;
    c.add(res.points.size() == cfg.pump_power_values_w.size(),
          fmt("%zu/%zu set points fitted", res.points.size(), cfg.pump_power_values_w.size()));
    if (res.points.empty()) return {false, c.text};
    auto uw = micro_watts(res);
    auto w = widths(res);
    auto a = amplitudes(res);

    auto wmin = interp_minimum(uw, w);
    c.add(wmin.interior && wmin.x >= 50.0 && wmin.x <= 500.0,
          fmt("width minimum at %.1f uW inside [50,500]", wmin.x));

    std::size_t i0 = 0;
    for (std::size_t i = 1; i < uw.size(); ++i)
        if (std::abs(uw[i] - 1000.0) < std::abs(uw[i0] - 1000.0)) i0 = i;
    bool decline = true, broaden = true;
    for (std::size_t i = i0 + 1; i < uw.size(); ++i) {
        if (a[i] >= a[i - 1]) decline = false;
        if (w[i] <= w[i - 1]) broaden = false;
    }
    c.add(uw.size() - i0 >= 3, fmt("%zu set points at or above 1 mW", uw.size() - i0));
    c.add(decline, "amplitude strictly falling above 1 mW");
    c.add(broaden, "width strictly rising above 1 mW");
    return {c.ok, c.text};
}

// ---- 10: linewidth trends across temperature --------------------------------

Outcome c10_temperature_trends(int workers) {
    auto cfg = wafer_config();
    std::vector<double> powers;
    for (double v : cfg.pump_power_values_w)
        if (v <= 4.05e-3) powers.push_back(v);  // trend grid tops out at 4 mW
    const double suite_larmor = 5000.0;

    std::vector<double> tc, wlow;
    std::vector<ScanResult> scans;
    for (double tk : cfg.temperature_values_k) {
        auto res = pump_scan(cfg, powers, tk, suite_larmor, workers);
        double sum = 0;
        int n = 0;
        for (const auto& p : res.points)
            if (p.value >= 99.9e-6 && p.value <= 200.1e-6) {
                sum += p.fwhm_hz;
                ++n;
            }
        if (n == 0) return {false, fmt("no low-power points at %.2f K", tk)};
        tc.push_back(tk - 273.15);
        wlow.push_back(sum / n);
        scans.push_back(std::move(res));
    }
    Checks c;

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < tc.size(); ++i)
        if (tc[i] >= 39.9 && tc[i] <= 90.1) {
            xs.push_back(tc[i]);
            ys.push_back(wlow[i]);
        }
    LinFit ramp = lsq(xs, ys);
    c.add(ramp.b >= 20.0 && ramp.b <= 60.0,
          fmt("low-power slope %.1f Hz/C inside [20,60] over 40-90 C", ramp.b));

    std::vector<double> coldw;
    for (std::size_t i = 0; i < tc.size(); ++i)
        if (tc[i] <= 40.1) coldw.push_back(wlow[i]);
    double flat = flatness(coldw);
    c.add(flat <= 0.15, fmt("width flat to %.3f (<= 0.15) below 40 C", flat));

    std::vector<double> lt, lr;
    int hot = 0;
    for (std::size_t i = 0; i < tc.size(); ++i)
        if (tc[i] >= 89.9) {
            ++hot;
            double rel = relative_narrowing(scans[i]);
            if (rel > 0) {
                lt.push_back(std::log(tc[i]));
                lr.push_back(std::log(rel));
            }
        }
    c.add(int(lt.size()) == hot && hot >= 4,
          fmt("narrowing seen at %zu/%d set points from 90 C up", lt.size(), hot));
    if (lt.size() >= 2) {
        LinFit expo = lsq(lt, lr);
        c.add(expo.b >= 1.5 && expo.b <= 2.3,
              fmt("narrowing exponent %.2f inside 1.9+-0.4", expo.b));
    }

    double w110 = 0;
    for (std::size_t i = 0; i < tc.size(); ++i)
        if (std::abs(tc[i] - 110.0) < 0.1) w110 = wlow[i];
    double extrap = ramp.a + ramp.b * 110.0;
    c.add(w110 / extrap > 1.3,
          fmt("width at 110 C %.0f Hz vs linear trend %.0f Hz, ratio %.2f > 1.3", w110, extrap,
              w110 / extrap));
    return {c.ok, c.text};
}

// ---- 11: narrowing depth and floor across drive fields ----------------------

Outcome c11_larmor_narrowing(int workers) {
    auto cfg = wafer_config();
    std::vector<double> powers;
    for (double v : cfg.pump_power_values_w)
        if (v <= 4.05e-3) powers.push_back(v);

    std::vector<double> lows, depths;
    std::string seen;
    for (double larmor : cfg.larmor_values_hz) {
        auto res = pump_scan(cfg, powers, 393.15, larmor, workers);
        if (res.points.size() != powers.size())
            return {false, fmt("only %zu/%zu points at %.0f Hz", res.points.size(), powers.size(),
                               larmor)};
        auto uw = micro_watts(res);
        auto w = widths(res);
        auto wmin = interp_minimum(uw, w);
        lows.push_back(w.front());
        depths.push_back(std::max(0.0, w.front() - wmin.y));
        seen += fmt("%s%.0f Hz: low %.1f, depth %.1f", seen.empty() ? "" : " | ", larmor,
                    lows.back(), depths.back());
    }
    Checks c;
    c.add(lows.size() >= 3, fmt("%zu drive-field set points", lows.size()));
    bool low_dec = true, depth_dec = true;
    for (std::size_t i = 1; i < lows.size(); ++i) {
        if (lows[i] >= lows[i - 1]) low_dec = false;
        if (depths[i] >= depths[i - 1]) depth_dec = false;
    }
    c.add(low_dec, "low-power width falls with the drive field (" + seen + ")");
    c.add(depth_dec, "narrowing depth falls with the drive field");

    auto res = pump_scan(cfg, powers, 385.15, 120.0, workers);
    auto wmin = interp_minimum(micro_watts(res), widths(res));
    c.add(wmin.y >= 65.0 && wmin.y <= 125.0,
          fmt("narrowest width %.1f Hz inside [65,125] at 120 Hz, 112 C", wmin.y));
    return {c.ok, c.text};
}

// ---- 12: coated-sphere linewidth floor window --------------------------------

Outcome c12_sphere_floor() {
    auto cfg = sphere_config();
    double gd = cfg.params.gamma_diffusion();
    double floor_hz = gd / phys::pi;
    Checks c;
    c.add(floor_hz >= 4.0 && floor_hz <= 16.0,
          fmt("lowest-mode width %.3f Hz vs window [4,16] Hz at %.2f K", floor_hz,
              cfg.params.vapor.temperature));
    return {c.ok, c.text};
}

// ---- 13: heater plate temperature map ----------------------------------------

Outcome c13_heater_map(bool parallel) {
    auto lay = layout_config();
    ThermalOptions opt = lay.thermal;
    opt.parallel = parallel;
    auto sol = solve_thermal(lay.stack, lay.cutouts, lay.heater, lay.ambient_k, opt);
    Checks c;
    double peak_c = sol.field.peak_k() - 273.15;
    c.add(peak_c >= 73.5 && peak_c <= 83.5, fmt("peak %.2f C inside 78.5+-5", peak_c));

    double diff = sol.chamber("interaction").differential_k();
    c.add(diff >= 0.59 && diff <= 2.59, fmt("interaction differential %.3f K inside 1.59+-1", diff));

    const auto& f = sol.field;
    double hx = f.pitch[0], hy = f.pitch[1];
    int jy = 0;
    for (int j = 1; j < f.ny; ++j)
        if (std::abs((j + 0.5) * hy - 5.1e-3) < std::abs((jy + 0.5) * hy - 5.1e-3)) jy = j;
    double yline = (jy + 0.5) * hy;
    auto trace = line_trace(f, {{hx / 2, yline}, {f.lx() - hx / 2, yline}}, hx);

    auto span_mean = [&](const char* name) {
        for (const auto& cut : lay.cutouts)
            if (cut.name == name) {
                double s = 0;
                int n = 0;
                for (const auto& tp : trace)
                    if (tp.x > cut.origin[0] && tp.x < cut.origin[0] + cut.extent[0]) {
                        s += tp.temperature_k;
                        ++n;
                    }
                if (n == 0) throw std::runtime_error(fmt("trace misses chamber %s", name));
                return s / n;
            }
        throw std::runtime_error(fmt("no chamber named %s", name));
    };
    double imean = span_mean("interaction"), smean = span_mean("storage");
    c.add(imean > smean, fmt("trace mean %.2f K over interaction vs %.2f K over storage", imean,
                             smean));
    return {c.ok, c.text};
}

// ---- 14: on-resonance transmission vs temperature ----------------------------

Outcome c14_transmission() {
    auto cfg = wafer_config();
    PhysicalConstants pc;
    const double temps[] = {363.15, 373.15, 383.15, 393.15};
    std::vector<double> od, tr;
    std::string seen;
    for (double t : temps) {
        auto vap = vapor_state(pc, t, cfg.params.mix);
        double d = optical_depth(pc, vap, 0.0, cfg.params.geometry.optical_path, cfg.params.mix,
                                 cfg.params.calib.absorption_strength);
        od.push_back(d);
        tr.push_back(transmittance(d));
        seen += fmt("%s%.0fC: od %.3f", seen.empty() ? "" : ", ", t - 273.15, d);
    }
    Checks c;
    bool falling = true;
    for (std::size_t i = 1; i < tr.size(); ++i)
        if (tr[i] >= tr[i - 1]) falling = false;
    c.add(falling, "transmission strictly falling 90-120 C (" + seen + ")");
    c.add(od[1] > 1.0 && od[2] > 1.0 && od[3] > 1.0, "optically thick above 90 C");
    return {c.ok, c.text};
}

}  // namespace

double grid_diffusion_decay(double lx, double ly, double lz, double diffusion, int nx, int ny,
                            int nz, bool parallel) {
    if (lx <= 0 || ly <= 0 || lz <= 0 || diffusion <= 0)
        throw std::invalid_argument("need positive box and diffusion coefficient");
    if (nx < 3 || ny < 3 || nz < 3) throw std::invalid_argument("grid too small");
    const double hx = lx / (nx + 1), hy = ly / (ny + 1), hz = lz / (nz + 1);
    const double cx = diffusion / (hx * hx), cy = diffusion / (hy * hy), cz = diffusion / (hz * hz);
    const double dt = 0.45 / (cx + cy + cz);

    // sample after the higher modes died; the window only needs a rate scale
    const double gref = diffusion * phys::pi * phys::pi *
                        (1.0 / (lx * lx) + 1.0 / (ly * ly) + 1.0 / (lz * lz));
    const long n1 = std::lround(std::ceil(2.5 / gref / dt));
    const long n2 = std::lround(std::ceil(4.5 / gref / dt));

    const std::size_t total = std::size_t(nx) * ny * nz;
    std::vector<double> u(total, 1.0), v(total);
    auto at = [&](int i, int j, int k) -> std::size_t {
        return (std::size_t(i) * ny + j) * nz + k;
    };

    double s1 = 0, s2 = 0;
    for (long step = 1; step <= n2; ++step) {
#pragma omp parallel for collapse(2) if (parallel)
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j)
                for (int k = 0; k < nz; ++k) {
                    double uc = u[at(i, j, k)];
                    double xw = i > 0 ? u[at(i - 1, j, k)] : 0.0;
                    double xe = i + 1 < nx ? u[at(i + 1, j, k)] : 0.0;
                    double ys = j > 0 ? u[at(i, j - 1, k)] : 0.0;
                    double yn = j + 1 < ny ? u[at(i, j + 1, k)] : 0.0;
                    double zd = k > 0 ? u[at(i, j, k - 1)] : 0.0;
                    double zu = k + 1 < nz ? u[at(i, j, k + 1)] : 0.0;
                    v[at(i, j, k)] = uc + dt * (cx * (xw + xe - 2 * uc) + cy * (ys + yn - 2 * uc) +
                                                cz * (zd + zu - 2 * uc));
                }
        u.swap(v);
        if (step == n1 || step == n2) {
            double s = 0;
#pragma omp parallel for reduction(+ : s) if (parallel)
            for (long q = 0; q < long(total); ++q) s += u[q];
            (step == n1 ? s1 : s2) = s;
        }
    }
    return std::log(s1 / s2) / (double(n2 - n1) * dt);
}

bool AcceptanceReport::as_expected() const {
    for (const auto& r : results)
        if (r.passed != r.expected_pass) return false;
    return !results.empty();
}

int AcceptanceReport::n_passed() const {
    int n = 0;
    for (const auto& r : results) n += r.passed;
    return n;
}

std::string format_result(const CriterionResult& r) {
    std::string line = fmt("[%2d] %s", r.id, r.passed ? "PASS" : "FAIL");
    if (r.passed != r.expected_pass)
        line += r.expected_pass ? " (unexpected)" : " (unexpected pass)";
    else if (!r.expected_pass)
        line += " (expected)";
    line += "  " + r.name;
    if (!r.detail.empty()) line += " :: " + r.detail;
    return line;
}

std::string format_report(const AcceptanceReport& report) {
    std::string out;
    for (const auto& r : report.results) out += format_result(r) + "\n";
    out += fmt("%d/%zu passed; suite matches its documented expectation: %s\n", report.n_passed(),
               report.results.size(), report.as_expected() ? "yes" : "NO");
    return out;
}

AcceptanceReport run_acceptance(bool parallel, std::ostream* live) {
    const int workers = scan_workers(parallel);
    struct Item {
        int id;
        const char* name;
        bool expected;
        std::function<Outcome()> fn;
    };
    const std::vector<Item> items = {
        {1, "diffusion mode rate vs explicit grid decay", true, [&] { return c1_mode_rate(parallel); }},
        {2, "line-fit recovery, noiseless and snr 100", true, c2_fit_recovery},
        {3, "transient dynamics reach the steady state", true, [&] { return c3_dynamics(parallel); }},
        {4, "field map against wire and loop references", true, c4_field_oracles},
        {5, "thermal energy balance and grid convergence", true, [&] { return c5_thermal(parallel); }},
        {6, "scan output identical across worker counts", true, c6_determinism},
        {7, "saturated-density anchor windows", false, c7_density_anchors},
        {8, "hot-cell pump scan shape", true, [&] { return c8_hot_pump_scan(workers); }},
        {9, "coated-cell pump scan shape", true, [&] { return c9_coated_pump_scan(workers); }},
        {10, "linewidth trends across temperature", true, [&] { return c10_temperature_trends(workers); }},
        {11, "narrowing depth and floor across drive fields", true, [&] { return c11_larmor_narrowing(workers); }},
        {12, "coated-sphere linewidth floor window", false, c12_sphere_floor},
        {13, "heater plate temperature map", true, [&] { return c13_heater_map(parallel); }},
        {14, "on-resonance transmission vs temperature", true, c14_transmission},
    };
    AcceptanceReport report;
    for (const auto& it : items) {
        CriterionResult r;
        r.id = it.id;
        r.name = it.name;
        r.expected_pass = it.expected;
        try {
            auto [ok, detail] = it.fn();
            r.passed = ok;
            r.detail = detail;
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        if (live) {
            (*live) << format_result(r) << std::endl;
        }
        report.results.push_back(std::move(r));
    }
    return report;
}

}  // namespace spincell

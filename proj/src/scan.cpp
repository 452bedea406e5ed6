#include "spincell/scan.hpp"

#include "spincell/rng.hpp"
#include "spincell/spin_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace spincell {

std::string axis_name(ScanAxis axis) {
    switch (axis) {
        case ScanAxis::pump_power: return "pump_power";
        case ScanAxis::temperature: return "temperature";
        case ScanAxis::larmor: return "larmor";
    }
    throw std::logic_error("unreachable");
}

ScanAxis axis_from_name(const std::string& name) {
    if (name == "pump_power") return ScanAxis::pump_power;
    if (name == "temperature") return ScanAxis::temperature;
    if (name == "larmor") return ScanAxis::larmor;
    throw std::invalid_argument("unknown scan axis: " + name);
}

void ScanConfig::validate() const {
    if (values.empty()) throw std::invalid_argument("scan has no values");
    bool asc = true, desc = true;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        asc = asc && values[i] < values[i + 1];
        desc = desc && values[i] > values[i + 1];
    }
    if (!asc && !desc) throw std::invalid_argument("scan values must be strictly monotone");
    if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    for (double v : values)
        if (!(v > 0) || !std::isfinite(v))
            throw std::invalid_argument("scan values must be positive and finite");
    base.validate();
    if (sweep.points < 16) throw std::invalid_argument("sweep needs >= 16 points");
    if (!(sweep.dwell > 0)) throw std::invalid_argument("sweep dwell must be > 0");
}

namespace {

SpinModelParams params_at(const ScanConfig& config, double value) {
    SpinModelParams p = config.base;
    switch (config.axis) {
        case ScanAxis::pump_power:
            p.pump.power = value;
            break;
        case ScanAxis::temperature:
            p.vapor = vapor_state(PhysicalConstants{}, value, p.mix);
            break;
        case ScanAxis::larmor:
            p.field.larmor_hz = value;
            break;
    }
    return p;
}

SweepPlan plan_at(const ScanConfig& config, const SpinModelParams& p) {
    SweepPlan plan = config.sweep;
    if (plan.center_hz == 0) plan.center_hz = p.field.larmor_hz;
    if (plan.span_hz == 0) {
        SpinState ss = steady_state(p);
        plan.span_hz = 10.0 * rate_breakdown(p, ss).fwhm_hz();
    }
    return plan;
}

ScanRecord run_point(const ScanConfig& config, double value, int repeat, std::uint64_t seed) {
    ScanRecord rec;
    rec.value = value;
    rec.repeat = repeat;
    rec.seed = seed;
    try {
        SpinModelParams p = params_at(config, value);
        p.validate();
        SweepPlan plan = plan_at(config, p);
        NoiseModel noise = config.noise;
        noise.seed = seed;
        RfSpectrum spectrum = synthesize_spectrum(p, plan, noise);
        rec.model = select_model(spectrum);
        LorentzianFit fit = fit_lorentzian(spectrum, rec.model);
        const LorentzComponent& main = fit.main();
        rec.amplitude = main.amplitude;
        rec.fwhm_hz = main.fwhm_hz;
        rec.center_hz = main.center_hz;
        rec.phase = main.phase;
        rec.residual_rms = fit.residual_rms;
        rec.converged = fit.converged;
        if (!fit.converged) {
            rec.failed = true;
            rec.error = "fit did not converge";
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
    }
    return rec;
}

}  // namespace

ScanResult run_scan(const ScanConfig& config, int workers) {
    config.validate();
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");

    const std::size_t n = config.values.size();
    const int reps = config.repeats;
    const bool ascending = n < 2 || config.values[0] < config.values[1];

    ScanResult result;
    result.config = config;
    result.records.resize(n * reps);

    // seeds key on the value's rank so reversing the scan direction cannot
    // change any record's noise stream
    auto task = [&](std::size_t t) {
        std::size_t point = t / reps;
        int repeat = static_cast<int>(t % reps);
        std::size_t rank = ascending ? point : n - 1 - point;
        std::uint64_t seed = Rng::derive(config.noise.seed, rank, repeat);
        result.records[t] = run_point(config, config.values[point], repeat, seed);
    };

    const std::size_t total = n * reps;
    if (workers == 1) {
        for (std::size_t t = 0; t < total; ++t) task(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        int count = std::min<std::size_t>(workers, total);
        pool.reserve(count);
        for (int w = 0; w < count; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next.fetch_add(1); t < total; t = next.fetch_add(1))
                    task(t);
            });
        for (auto& th : pool) th.join();
    }

    for (const auto& r : result.records)
        if (r.failed) ++result.failures;
    if (2 * result.failures > total)
        throw std::runtime_error("scan failed: " + std::to_string(result.failures) + " of " +
                                 std::to_string(total) + " points errored");

    for (std::size_t i = 0; i < n; ++i) {
        ScanPoint pt;
        pt.value = config.values[i];
        for (int r = 0; r < reps; ++r) {
            const ScanRecord& rec = result.records[i * reps + r];
            if (rec.failed) continue;
            pt.amplitude += rec.amplitude;
            pt.fwhm_hz += rec.fwhm_hz;
            pt.center_hz += rec.center_hz;
            ++pt.n_ok;
        }
        if (pt.n_ok == 0) continue;
        pt.amplitude /= pt.n_ok;
        pt.fwhm_hz /= pt.n_ok;
        pt.center_hz /= pt.n_ok;
        result.points.push_back(pt);
    }
    return result;
}

InterpMinimum interp_minimum(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("interp_minimum needs matching non-empty arrays");
    std::size_t i = 0;
    for (std::size_t j = 1; j < y.size(); ++j)
        if (y[j] < y[i]) i = j;
    if (i == 0 || i + 1 == y.size()) return {x[i], y[i], false};
    double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
    double f0 = y[i - 1], f1 = y[i], f2 = y[i + 1];
    double g01 = (f1 - f0) / (x1 - x0);
    double g12 = (f2 - f1) / (x2 - x1);
    double d2 = 2 * (g12 - g01) / (x2 - x0);
    if (d2 <= 0) return {x1, f1, true};
    double d1 = g01 + 0.5 * d2 * (x1 - x0);  // slope of the parabola at x1
    double xm = x1 - d1 / d2;
    return {xm, f1 + d1 * (xm - x1) + 0.5 * d2 * (xm - x1) * (xm - x1), true};
}

namespace {

std::vector<ScanPoint> ascending_points(const ScanResult& result) {
    std::vector<ScanPoint> pts = result.points;
    std::sort(pts.begin(), pts.end(),
              [](const ScanPoint& a, const ScanPoint& b) { return a.value < b.value; });
    return pts;
}

}  // namespace

double relative_narrowing(const ScanResult& result) {
    if (result.config.axis != ScanAxis::pump_power)
        throw std::domain_error("relative narrowing needs a pump-power scan");
    std::vector<ScanPoint> pts = ascending_points(result);
    if (pts.empty()) throw std::domain_error("scan has no successful points");
    std::size_t iref = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (std::abs(pts[i].value - 100e-6) < std::abs(pts[iref].value - 100e-6)) iref = i;
    if (pts[iref].value < 50e-6 || pts[iref].value > 200e-6)
        throw std::domain_error("scan has no point near 100 uW");
    std::vector<double> xs, ys;
    for (std::size_t i = iref; i < pts.size(); ++i) {
        xs.push_back(pts[i].value);
        ys.push_back(pts[i].fwhm_hz);
    }
    InterpMinimum m = interp_minimum(xs, ys);
    double ref = pts[iref].fwhm_hz;
    return std::max(0.0, (ref - m.y) / ref);
}

TrendValue weighted_slope(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& w) {
    if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
        throw std::invalid_argument("slope fit needs >= 2 weighted points");
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
        swxx += w[i] * x[i] * x[i];
        swxy += w[i] * x[i] * y[i];
    }
    double det = sw * swxx - swx * swx;
    if (det <= 0) throw std::invalid_argument("degenerate slope fit");
    double b = (sw * swxy - swx * swy) / det;
    double a = (swxx * swy - swx * swxy) / det;
    double chi2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (a + b * x[i]);
        chi2 += w[i] * r * r;
    }
    double sigma2 = x.size() > 2 ? chi2 / (x.size() - 2) : 0.0;
    return {b, std::sqrt(std::max(0.0, sigma2 * sw / det))};
}

TrendStats trend_stats(const std::vector<ScanResult>& results) {
    TrendStats stats;

    std::vector<double> slope_t, slope_w, slope_wt;
    std::vector<double> expo_t, expo_n;
    for (const auto& res : results) {
        stats.minimum_locations.emplace_back();
        std::vector<ScanPoint> pts = ascending_points(res);
        if (pts.size() >= 3) {
            std::vector<double> xs, ys;
            for (const auto& p : pts) {
                xs.push_back(p.value);
                ys.push_back(p.fwhm_hz);
            }
            InterpMinimum m = interp_minimum(xs, ys);
            if (m.interior) stats.minimum_locations.back() = m.x;
        }
        if (res.config.axis != ScanAxis::pump_power) continue;
        double t_c = res.config.base.vapor.temperature - 273.15;

        // low-power width: mean over the 100-200 uW scan points
        double sum = 0;
        int count = 0;
        for (const auto& p : pts)
            if (p.value >= 100e-6 - 1e-12 && p.value <= 200e-6 + 1e-12) {
                sum += p.fwhm_hz;
                ++count;
            }
        if (count > 0 && t_c >= 40.0 - 1e-9 && t_c <= 90.0 + 1e-9) {
            slope_t.push_back(t_c);
            slope_w.push_back(sum / count);
            slope_wt.push_back(count);
        }

        try {
            double rel = relative_narrowing(res);
            if (rel > 0) {
                expo_t.push_back(std::log(t_c));
                expo_n.push_back(std::log(rel));
            }
        } catch (const std::domain_error&) {
            // scan does not reach the narrowing region; skip
        }
    }

    if (slope_t.size() >= 2) stats.low_power_slope_hz_per_c = weighted_slope(slope_t, slope_w, slope_wt);
    if (expo_t.size() >= 4) {
        std::vector<double> w(expo_t.size(), 1.0);
        stats.narrowing_exponent = weighted_slope(expo_t, expo_n, w);
    }
    return stats;
}

}  // namespace spincell

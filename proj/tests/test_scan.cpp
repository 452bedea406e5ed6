#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "spincell/rng.hpp"
#include "spincell/scan.hpp"

using namespace spincell;
using doctest::Approx;

namespace {

SpinModelParams wafer_base() {
    SpinModelParams p;
    PhysicalConstants pc;
    p.mix.components = {{"N2", 20000.0, 293.15}};
    p.vapor = vapor_state(pc, 383.15, p.mix);
    p.geometry = ChamberGeometry::box(0.002, 0.004, 0.004, 0.004);
    p.pump.power = 3e-3;
    p.pump.beam_radius = 2e-3;
    p.field.larmor_hz = 15000.0;
    p.field.rf_amplitude_hz = 1.0;
    p.calib.absorption_strength = 0.14866494910353797;
    return p;
}

ScanConfig pump_config(std::vector<double> values) {
    ScanConfig c;
    c.axis = ScanAxis::pump_power;
    c.values = std::move(values);
    c.base = wafer_base();
    c.sweep = {0.0, 0.0, 41, 0.05};
    c.noise = {2e-8, 90210};
    c.repeats = 2;
    return c;
}

ScanResult fake_pump_result(const std::vector<std::pair<double, double>>& value_fwhm) {
    ScanResult r;
    r.config.axis = ScanAxis::pump_power;
    for (auto [v, w] : value_fwhm) {
        ScanPoint pt;
        pt.value = v;
        pt.fwhm_hz = w;
        pt.amplitude = 1.0;
        pt.n_ok = 1;
        r.points.push_back(pt);
    }
    return r;
}

bool same_record(const ScanRecord& a, const ScanRecord& b) {
    return a.value == b.value && a.repeat == b.repeat && a.seed == b.seed &&
           a.failed == b.failed && a.model == b.model && a.amplitude == b.amplitude &&
           a.fwhm_hz == b.fwhm_hz && a.center_hz == b.center_hz && a.phase == b.phase;
}

}  // namespace

TEST_CASE("axis names round-trip") {
    for (auto a : {ScanAxis::pump_power, ScanAxis::temperature, ScanAxis::larmor})
        CHECK(axis_from_name(axis_name(a)) == a);
    CHECK_THROWS_AS(axis_from_name("detuning"), std::invalid_argument);
}

TEST_CASE("scan config validation") {
    auto c = pump_config({1e-4, 5e-4, 2e-3});
    c.validate();
    auto bad = c;
    bad.values.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.values = {1e-4, 1e-4, 2e-3};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.values = {1e-4, 2e-3, 5e-4};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.values = {-1e-4, 1e-4};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.repeats = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.sweep.points = 8;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(run_scan(c, 0), std::invalid_argument);
}

TEST_CASE("quadratic minimum interpolation") {
    auto parab = [](double x) { return 0.7 + (x - 2.3) * (x - 2.3); };
    std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0}, y;
    for (double v : x) y.push_back(parab(v));
    auto m = interp_minimum(x, y);
    CHECK(m.interior);
    CHECK(m.x == Approx(2.3).epsilon(1e-12));
    CHECK(m.y == Approx(0.7).epsilon(1e-12));

    // uneven spacing still reproduces the parabola exactly
    std::vector<double> xu{0.5, 2.0, 6.0}, yu;
    for (double v : xu) yu.push_back(parab(v));
    auto mu = interp_minimum(xu, yu);
    CHECK(mu.interior);
    CHECK(mu.x == Approx(2.3).epsilon(1e-12));
    CHECK(mu.y == Approx(0.7).epsilon(1e-12));

    std::vector<double> yfall{5.0, 4.0, 3.0, 2.0};
    auto edge = interp_minimum({1.0, 2.0, 3.0, 4.0}, yfall);
    CHECK_FALSE(edge.interior);
    CHECK(edge.x == 4.0);
    CHECK(edge.y == 2.0);

    auto single = interp_minimum({3.0}, {1.5});
    CHECK_FALSE(single.interior);
    CHECK(single.x == 3.0);

    CHECK_THROWS_AS(interp_minimum({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(interp_minimum({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("weighted slope fit") {
    auto exact = weighted_slope({1.0, 2.0, 3.0, 4.0}, {5.0, 8.0, 11.0, 14.0},
                                {1.0, 2.0, 0.5, 1.0});
    CHECK(exact.value == Approx(3.0).epsilon(1e-12));
    CHECK(std::abs(exact.uncertainty) < 1e-9);

    auto f = weighted_slope({0.0, 1.0, 2.0}, {0.0, 1.0, 4.0}, {1.0, 1.0, 1.0});
    CHECK(f.value == Approx(2.0).epsilon(1e-12));
    CHECK(f.uncertainty == Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));

    // rescaling all weights changes nothing
    auto g = weighted_slope({0.0, 1.0, 2.0}, {0.0, 1.0, 4.0}, {10.0, 10.0, 10.0});
    CHECK(g.value == Approx(f.value).epsilon(1e-12));
    CHECK(g.uncertainty == Approx(f.uncertainty).epsilon(1e-12));

    CHECK_THROWS_AS(weighted_slope({1.0}, {1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(weighted_slope({1.0, 1.0}, {1.0, 2.0}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("records are independent of scan direction and worker count") {
    std::vector<double> vals{1e-4, 3e-4, 9e-4, 2.7e-3};
    auto up = pump_config(vals);
    auto down = up;
    std::reverse(down.values.begin(), down.values.end());

    auto r1 = run_scan(up, 1);
    auto r4 = run_scan(up, 4);
    auto rd = run_scan(down, 3);
    REQUIRE(r1.records.size() == vals.size() * 2);
    CHECK(r1.failures == 0);

    const std::size_t n = vals.size();
    for (std::size_t i = 0; i < n; ++i)
        for (int rep = 0; rep < 2; ++rep) {
            const auto& a = r1.records[i * 2 + rep];
            CHECK(a.seed == Rng::derive(up.noise.seed, i, rep));
            CHECK(same_record(a, r4.records[i * 2 + rep]));
            CHECK(same_record(a, rd.records[(n - 1 - i) * 2 + rep]));
        }
    // repeats with distinct seeds give distinct noise draws
    CHECK(r1.records[0].fwhm_hz != r1.records[1].fwhm_hz);
    // repeat-averaged points line up with the records
    REQUIRE(r1.points.size() == n);
    CHECK(r1.points[0].fwhm_hz ==
          Approx(0.5 * (r1.records[0].fwhm_hz + r1.records[1].fwhm_hz)).epsilon(1e-12));
    CHECK(r1.points[0].n_ok == 2);
}

TEST_CASE("failed points are reported, majorities abort the scan") {
    ScanConfig c;
    c.axis = ScanAxis::temperature;
    c.base = wafer_base();
    c.sweep = {0.0, 0.0, 41, 0.05};
    c.noise = {2e-8, 7};
    c.repeats = 1;

    c.values = {250.0, 350.0, 360.0};  // first is outside the vapor range
    auto r = run_scan(c, 2);
    CHECK(r.failures == 1);
    CHECK(r.records[0].failed);
    CHECK_FALSE(r.records[0].error.empty());
    REQUIRE(r.points.size() == 2);  // failed value drops out of the averages
    CHECK(r.points[0].value == 350.0);

    c.values = {250.0, 260.0};
    CHECK_THROWS_AS(run_scan(c, 2), std::runtime_error);
}

TEST_CASE("pinned linewidth at low pump power") {
    auto c = pump_config({1e-5});
    c.sweep = {0.0, 0.0, 161, 0.05};
    c.noise = {0.0, 0};
    c.repeats = 1;
    auto r = run_scan(c, 1);
    REQUIRE(r.points.size() == 1);
    CHECK(r.points[0].fwhm_hz == Approx(8631.95).epsilon(5e-3));
    CHECK(std::abs(r.points[0].center_hz - 15000.0) < 1.0);
}

TEST_CASE("relative narrowing referenced to the 100 uW point") {
    auto r = fake_pump_result({{100e-6, 100.0},
                               {300e-6, 80.0},
                               {1000e-6, 50.0},
                               {3000e-6, 60.0},
                               {10000e-6, 90.0}});
    std::vector<double> xs{100e-6, 300e-6, 1000e-6, 3000e-6, 10000e-6};
    std::vector<double> ys{100.0, 80.0, 50.0, 60.0, 90.0};
    auto m = interp_minimum(xs, ys);
    CHECK(relative_narrowing(r) == Approx((100.0 - m.y) / 100.0).epsilon(1e-12));

    // widths that only grow narrow by exactly zero
    auto flat = fake_pump_result({{100e-6, 50.0}, {500e-6, 60.0}, {1000e-6, 70.0}});
    CHECK(relative_narrowing(flat) == 0.0);

    // nearest in-range point wins the reference slot
    auto pick = fake_pump_result({{60e-6, 400.0}, {120e-6, 200.0}, {1e-3, 80.0}, {4e-3, 120.0}});
    std::vector<double> px{120e-6, 1e-3, 4e-3}, py{200.0, 80.0, 120.0};
    auto pm = interp_minimum(px, py);
    CHECK(relative_narrowing(pick) == Approx((200.0 - pm.y) / 200.0).epsilon(1e-12));

    auto wrong_axis = fake_pump_result({{100e-6, 100.0}, {1e-3, 50.0}, {4e-3, 80.0}});
    wrong_axis.config.axis = ScanAxis::temperature;
    CHECK_THROWS_AS(relative_narrowing(wrong_axis), std::domain_error);

    auto no_ref = fake_pump_result({{300e-6, 100.0}, {1e-3, 50.0}, {4e-3, 80.0}});
    CHECK_THROWS_AS(relative_narrowing(no_ref), std::domain_error);

    ScanResult empty;
    empty.config.axis = ScanAxis::pump_power;
    CHECK_THROWS_AS(relative_narrowing(empty), std::domain_error);
}

TEST_CASE("trend statistics aggregate multiple scans") {
    std::vector<ScanResult> runs;

    // two low-power widths pin the slope: 30 Hz per degree between 50 C and 80 C
    auto s50 = fake_pump_result({{100e-6, 990.0}, {200e-6, 1010.0}, {1e-3, 2000.0}});
    s50.config.base.vapor.temperature = 323.15;
    auto s80 = fake_pump_result({{100e-6, 1890.0}, {200e-6, 1910.0}, {1e-3, 2500.0}});
    s80.config.base.vapor.temperature = 353.15;
    runs.push_back(s50);
    runs.push_back(s80);

    // four hot scans with the narrowing pinned to rel = 1e-4 * tc^2; their
    // reference sits at 80 uW so they stay out of the low-power slope band
    for (double tc : {60.0, 70.0, 80.0, 90.0}) {
        double rel = 1e-4 * tc * tc;
        auto s = fake_pump_result({{80e-6, 100.0}, {1e-3, 70.0}, {5e-3, 100.0 * (1.0 - rel)}});
        s.config.base.vapor.temperature = tc + 273.15;
        runs.push_back(s);
    }

    // interior-minimum scan without a 100 uW reference point
    auto dip = fake_pump_result({{300e-6, 100.0}, {1e-3, 50.0}, {1e-2, 80.0}});
    dip.config.base.vapor.temperature = 303.15;
    runs.push_back(dip);

    auto stats = trend_stats(runs);
    REQUIRE(stats.low_power_slope_hz_per_c.has_value());
    CHECK(stats.low_power_slope_hz_per_c->value == Approx(30.0).epsilon(1e-9));
    CHECK(stats.low_power_slope_hz_per_c->uncertainty == 0.0);
    REQUIRE(stats.narrowing_exponent.has_value());
    CHECK(stats.narrowing_exponent->value == Approx(2.0).epsilon(1e-6));
    CHECK(std::abs(stats.narrowing_exponent->uncertainty) < 1e-6);

    REQUIRE(stats.minimum_locations.size() == runs.size());
    CHECK_FALSE(stats.minimum_locations[0].has_value());  // edge minimum, no interpolation
    REQUIRE(stats.minimum_locations.back().has_value());
    CHECK(*stats.minimum_locations.back() > 300e-6);
    CHECK(*stats.minimum_locations.back() < 1e-2);
}

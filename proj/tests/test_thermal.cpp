#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "spincell/thermal.hpp"

using namespace spincell;
using doctest::Approx;

namespace {

const double kAmbient = 295.15;

const ThermalSolution& ref_sol() {
    static ThermalSolution s = solve_thermal(LayerStack::reference(), ChamberCutout::reference(),
                                             HeaterLayout::reference(), kAmbient);
    return s;
}

}  // namespace

TEST_CASE("heater geometry and resistance") {
    auto h = HeaterLayout::reference();
    h.validate();
    CHECK(h.total_length() == Approx(75.35e-3).epsilon(1e-3));
    CHECK(h.resistance_ohm(293.15) == Approx(573.0).epsilon(2e-3));
    CHECK(h.resistance_ohm(393.15) / h.resistance_ohm(293.15) ==
          Approx(1.0 + 100.0 * h.temp_coefficient).epsilon(1e-12));
}

TEST_CASE("heater validation rejects bad layouts") {
    auto h = HeaterLayout::reference();
    auto bad = h;
    bad.tracks[0].width = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.tracks[0].vertices.resize(1);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    bad.tracks.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = h;
    // bowtie: last segment crosses the first
    bad.tracks[0].vertices = {{0.0, 0.0}, {2e-3, 2e-3}, {2e-3, 0.0}, {0.0, 2e-3}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("layer stack validation") {
    auto s = LayerStack::reference();
    s.validate();
    CHECK(s.total_thickness() == Approx(3e-3).epsilon(1e-12));
    auto bad = s;
    bad.layers[1].thickness = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = s;
    bad.layers.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("reference solve lands on the pinned operating point") {
    const auto& sol = ref_sol();
    sol.field.validate();
    CHECK(std::abs(sol.field.peak_k() - 273.15 - 78.04) < 0.08);
    CHECK(std::abs(sol.heater_resistance_ohm - 698.3) < 0.8);
    CHECK(std::abs(sol.input_power_w - 0.1579) < 0.001);
    double v = HeaterLayout::reference().drive.volts;
    CHECK(sol.input_power_w == Approx(v * v / sol.heater_resistance_ohm).epsilon(1e-9));
    CHECK(std::abs(sol.input_power_w - sol.boundary_flux_w) <= 0.01 * sol.input_power_w);
    CHECK(sol.residual_history.size() == 6);
    for (double r : sol.residual_history) CHECK(r <= 1e-8);

    double tmin = *std::min_element(sol.field.t_k.begin(), sol.field.t_k.end());
    CHECK(tmin >= kAmbient - 1e-9);

    CHECK(sol.chamber("interaction").mean_k > sol.chamber("storage").mean_k);
    CHECK(std::abs(sol.chamber("interaction").differential_k() - 1.493) < 0.05);
    CHECK(sol.chamber("channel").mean_k > kAmbient);
    CHECK_THROWS_AS(sol.chamber("attic"), std::invalid_argument);
}

TEST_CASE("serial and parallel solves agree") {
    ThermalOptions opt;
    opt.parallel = false;
    auto serial = solve_thermal(LayerStack::reference(), ChamberCutout::reference(),
                                HeaterLayout::reference(), kAmbient, opt);
    const auto& par = ref_sol();
    CHECK(std::abs(serial.field.peak_k() - par.field.peak_k()) < 1e-3);
    double worst = 0;
    for (std::size_t i = 0; i < serial.field.t_k.size(); ++i)
        worst = std::max(worst, std::abs(serial.field.t_k[i] - par.field.t_k[i]));
    CHECK(worst < 5e-3);
    CHECK(serial.input_power_w == Approx(par.input_power_w).epsilon(1e-4));
}

TEST_CASE("zero drive stays at ambient") {
    auto h = HeaterLayout::reference();
    h.drive.volts = 0.0;
    auto sol = solve_thermal(LayerStack::reference(), ChamberCutout::reference(), h, kAmbient);
    CHECK(sol.input_power_w == 0.0);
    double worst = 0;
    for (double t : sol.field.t_k) worst = std::max(worst, std::abs(t - kAmbient));
    CHECK(worst <= 1e-9);
}

TEST_CASE("grids that cannot resolve the stack or chambers are rejected") {
    ThermalOptions coarse_z;
    coarse_z.nz = 8;  // thinnest layer needs hz <= thickness/2
    CHECK_THROWS_AS(solve_thermal(LayerStack::reference(), ChamberCutout::reference(),
                                  HeaterLayout::reference(), kAmbient, coarse_z),
                    std::invalid_argument);
    ThermalOptions coarse_y;
    coarse_y.nx = 40;
    coarse_y.ny = 20;  // 0.5 mm channel falls between cell centers
    CHECK_THROWS_AS(solve_thermal(LayerStack::reference(), ChamberCutout::reference(),
                                  HeaterLayout::reference(), kAmbient, coarse_y),
                    std::invalid_argument);
}

TEST_CASE("field sampling is trilinear with clamped edges") {
    ThermalField f;
    f.nx = f.ny = f.nz = 3;
    f.pitch = {1.0, 1.0, 1.0};
    f.ambient_k = 300.0;
    f.t_k.resize(27);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) f.at(i, j, k) = 300.0 + i + 10.0 * j + 100.0 * k;
    f.validate();
    CHECK(f.sample(0.5, 0.5, 0.5) == Approx(300.0).epsilon(1e-14));
    CHECK(f.sample(1.5, 2.5, 0.5) == Approx(321.0).epsilon(1e-14));
    CHECK(f.sample(1.2, 0.8, 1.0) == Approx(300.0 + 0.7 + 3.0 + 50.0).epsilon(1e-13));
    CHECK(f.sample(0.0, 0.0, 0.0) == 300.0);  // clamps into the boundary half-voxel
    CHECK(f.sample_top(0.5, 0.5) == Approx(500.0).epsilon(1e-14));
    CHECK_THROWS_AS(f.sample(-0.1, 0.5, 0.5), std::domain_error);
    CHECK_THROWS_AS(f.sample(0.5, 3.2, 0.5), std::domain_error);

    ThermalField bad = f;
    bad.t_k.pop_back();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = f;
    bad.t_k[5] = std::nan("");
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("centerline trace shows the three hot zones") {
    const auto& sol = ref_sol();
    const auto& f = sol.field;
    double hx = f.pitch[0];
    std::vector<std::array<double, 2>> path = {{hx / 2, 5.0e-3}, {f.lx() - hx / 2, 5.0e-3}};
    auto tr = line_trace(f, path, hx);
    REQUIRE(tr.size() > 10);
    CHECK(tr.front().s == 0.0);
    CHECK(tr.back().s == Approx(f.lx() - hx).epsilon(1e-12));
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i].s > tr[i - 1].s);

    double prom = 0.01 * (f.peak_k() - kAmbient);
    auto peaks = trace_peaks(tr, prom, 1.5e-3);
    REQUIRE(peaks.size() == 3);
    CHECK(std::abs(tr[peaks[0]].x - 2.4e-3) < 0.9e-3);
    CHECK(std::abs(tr[peaks[1]].x - 6.7e-3) < 0.9e-3);
    CHECK(std::abs(tr[peaks[2]].x - 16.0e-3) < 0.9e-3);

    CHECK_THROWS_AS(line_trace(f, {{1e-3, 1e-3}}, hx), std::invalid_argument);
    CHECK_THROWS_AS(line_trace(f, path, 0.0), std::invalid_argument);
}

TEST_CASE("peak detection applies prominence and separation rules") {
    std::vector<TracePoint> tr;
    double temps[41] = {};
    temps[4] = 8.0;
    temps[5] = 10.0;
    temps[6] = 9.5;
    temps[7] = 9.8;
    temps[8] = 0.2;
    temps[29] = 3.0;
    temps[30] = 5.0;
    temps[31] = 3.0;
    for (int i = 0; i < 41; ++i) tr.push_back({i * 1e-3, i * 1e-3, 0.0, temps[i]});

    auto strict = trace_peaks(tr, 1.0, 1e-9);
    REQUIRE(strict.size() == 2);
    CHECK(strict[0] == 5);
    CHECK(strict[1] == 30);

    auto loose = trace_peaks(tr, 0.2, 1e-9);
    REQUIRE(loose.size() == 3);
    CHECK(loose[1] == 7);

    auto merged = trace_peaks(tr, 0.2, 10e-3);
    REQUIRE(merged.size() == 2);
    CHECK(merged[0] == 5);  // hotter of the close pair survives
    CHECK(merged[1] == 30);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "spincell/biot_savart.hpp"
#include "spincell/constants.hpp"

using namespace spincell;
using doctest::Approx;

namespace {

double mag(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace

TEST_CASE("long segment approaches the infinite-wire law") {
    const double d = 0.01, cur = 1.0;
    auto b = segment_field({-50.0, 0.0, 0.0}, {50.0, 0.0, 0.0}, {0.0, d, 0.0}, cur);
    CHECK(b[2] == Approx(phys::mu0 * cur / (2.0 * phys::pi * d)).epsilon(1e-7));
    CHECK(std::abs(b[0]) < 1e-9 * b[2]);
    CHECK(std::abs(b[1]) < 1e-9 * b[2]);
    // reversed current flips the direction
    auto r = segment_field({50.0, 0.0, 0.0}, {-50.0, 0.0, 0.0}, {0.0, d, 0.0}, cur);
    CHECK(r[2] == Approx(-b[2]).epsilon(1e-12));
}

TEST_CASE("polygon loop center matches the circular-loop law") {
    const double radius = 5e-3, cur = 0.2;
    const int n = 360;
    Vec3 total{0, 0, 0};
    for (int i = 0; i < n; ++i) {
        double a0 = 2.0 * phys::pi * i / n, a1 = 2.0 * phys::pi * (i + 1) / n;
        Vec3 a{radius * std::cos(a0), radius * std::sin(a0), 0.0};
        Vec3 b{radius * std::cos(a1), radius * std::sin(a1), 0.0};
        auto f = segment_field(a, b, {0.0, 0.0, 0.0}, cur);
        total[0] += f[0];
        total[1] += f[1];
        total[2] += f[2];
    }
    CHECK(std::abs(total[2]) == Approx(phys::mu0 * cur / (2.0 * radius)).epsilon(1e-4));
    CHECK(std::abs(total[0]) < 1e-12 * std::abs(total[2]));
    CHECK(std::abs(total[1]) < 1e-12 * std::abs(total[2]));
}

TEST_CASE("field is linear in current and additive over tracks") {
    Vec3 a{0.0, 0.0, 0.0}, b{10e-3, 2e-3, 0.0};
    Vec3 c{3e-3, -4e-3, 0.0}, d{7e-3, 6e-3, 1e-3};
    Vec3 p{2e-3, 3e-3, 2e-3};
    auto f1 = segment_field(a, b, p, 0.4);
    auto f2 = segment_field(a, b, p, 0.8);
    for (int i = 0; i < 3; ++i) CHECK(f2[i] == Approx(2.0 * f1[i]).epsilon(1e-15));

    HeaterLayout two;
    two.plane_z = 0.0;
    two.tracks = {{{{a[0], a[1]}, {b[0], b[1]}}, 1e-4, false},
                  {{{c[0], c[1]}, {d[0], d[1]}}, 1e-4, false}};
    // second track is tested at its own plane height, so keep z = 0 vertices
    auto sum = heater_b_field(two, 0.4, p);
    auto g = segment_field({c[0], c[1], 0.0}, {d[0], d[1], 0.0}, p, 0.4);
    for (int i = 0; i < 3; ++i) CHECK(sum[i] == Approx(f1[i] + g[i]).epsilon(1e-12));
}

TEST_CASE("zero current and singular geometry") {
    Vec3 a{-50.0, 0.0, 0.0}, b{50.0, 0.0, 0.0};
    auto z = segment_field(a, b, {0.0, 0.01, 0.0}, 0.0);
    CHECK(z[0] == 0.0);
    CHECK(z[1] == 0.0);
    CHECK(z[2] == 0.0);
    CHECK_THROWS_AS(segment_field(a, b, {0.0, 0.0, 0.0}, 1.0), std::domain_error);
    CHECK_THROWS_AS(segment_field(a, b, {50.0, 0.0, 0.0}, 1.0), std::domain_error);
    // on the axis but past the endpoint: finite, exactly zero
    auto ax = segment_field(a, b, {60.0, 0.0, 0.0}, 1.0);
    CHECK(mag(ax) == 0.0);
}

TEST_CASE("paired return tracks suppress the chamber field") {
    auto heater = HeaterLayout::reference();
    auto chamber = ChamberCutout::reference()[0];
    REQUIRE(chamber.name == "interaction");
    auto fig = chamber_field_figure(heater, 0.0183, chamber);
    CHECK(std::abs(fig.suppression_ratio - 18.59) < 0.5);
    CHECK(fig.center_unpaired_b_t > fig.center_b_t);
    CHECK(fig.max_b_t >= fig.mean_b_t);
    CHECK(fig.max_b_t >= fig.center_b_t);
    CHECK(fig.center_b_t > 0);

    FieldMapOptions serial;
    serial.parallel = false;
    auto sfig = chamber_field_figure(heater, 0.0183, chamber, serial);
    CHECK(sfig.max_b_t == Approx(fig.max_b_t).epsilon(1e-13));
    CHECK(sfig.mean_b_t == Approx(fig.mean_b_t).epsilon(1e-12));
    CHECK(sfig.suppression_ratio == Approx(fig.suppression_ratio).epsilon(1e-13));
}

TEST_CASE("map options and layouts are validated") {
    auto heater = HeaterLayout::reference();
    auto chamber = ChamberCutout::reference()[0];
    FieldMapOptions bad;
    bad.nx = 0;
    CHECK_THROWS_AS(chamber_field_figure(heater, 0.0183, chamber, bad), std::invalid_argument);

    auto all_return = heater;
    for (auto& t : all_return.tracks) t.return_path = true;
    CHECK_THROWS_AS(chamber_field_figure(all_return, 0.0183, chamber), std::invalid_argument);
}

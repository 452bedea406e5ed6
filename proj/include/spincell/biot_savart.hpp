#pragma once

#include "spincell/thermal.hpp"

#include <array>

namespace spincell {

using Vec3 = std::array<double, 3>;

// field of one straight segment carrying `current` from a to b
Vec3 segment_field(const Vec3& a, const Vec3& b, const Vec3& point, double current);

// sum over all track segments; tracks lie in the plane z = layout.plane_z
Vec3 heater_b_field(const HeaterLayout& heater, double current, const Vec3& point);

struct FieldMapOptions {
    int nx = 24, ny = 24, nz = 12;  // sample grid inside the chamber box
    bool parallel = true;
};

struct ChamberFieldSummary {
    double max_b_t = 0;              // max |B| over the chamber
    double mean_b_t = 0;
    double center_b_t = 0;           // |B| at the chamber center
    double center_unpaired_b_t = 0;  // same point, return tracks removed
    double suppression_ratio = 0;    // unpaired / paired at the center
};

ChamberFieldSummary chamber_field_figure(const HeaterLayout& heater, double current,
                                         const ChamberCutout& chamber,
                                         const FieldMapOptions& options = {});

}  // namespace spincell

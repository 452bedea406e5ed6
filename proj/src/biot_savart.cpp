#include "spincell/biot_savart.hpp"

#include "spincell/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spincell {

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3 crossv(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dotv(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double normv(const Vec3& a) { return std::sqrt(dotv(a, a)); }

double point_segment_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
    Vec3 ab = sub(b, a), ap = sub(p, a);
    double l2 = dotv(ab, ab);
    double t = l2 > 0 ? dotv(ap, ab) / l2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    Vec3 q{a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]};
    return normv(sub(p, q));
}

}  // namespace

Vec3 segment_field(const Vec3& a, const Vec3& b, const Vec3& point, double current) {
    if (current == 0) return {0, 0, 0};
    if (point_segment_distance(a, b, point) < 1e-9)
        throw std::domain_error("field point lies on a track segment");
    Vec3 r1 = sub(point, a), r2 = sub(point, b);
    double n1 = normv(r1), n2 = normv(r2);
    Vec3 cr = crossv(r1, r2);
    double denom = n1 * n2 * (n1 * n2 + dotv(r1, r2));
    if (denom <= 0) throw std::domain_error("field point lies on the segment axis");
    double scale = phys::mu0 * current / (4 * phys::pi) * (n1 + n2) / denom;
    return {scale * cr[0], scale * cr[1], scale * cr[2]};
}

Vec3 heater_b_field(const HeaterLayout& heater, double current, const Vec3& point) {
    Vec3 total{0, 0, 0};
    for (const auto& tr : heater.tracks)
        for (std::size_t v = 0; v + 1 < tr.vertices.size(); ++v) {
            Vec3 a{tr.vertices[v][0], tr.vertices[v][1], heater.plane_z};
            Vec3 b{tr.vertices[v + 1][0], tr.vertices[v + 1][1], heater.plane_z};
            Vec3 f = segment_field(a, b, point, current);
            total[0] += f[0];
            total[1] += f[1];
            total[2] += f[2];
        }
    return total;
}

ChamberFieldSummary chamber_field_figure(const HeaterLayout& heater, double current,
                                         const ChamberCutout& chamber,
                                         const FieldMapOptions& options) {
    heater.validate();
    if (options.nx < 1 || options.ny < 1 || options.nz < 1)
        throw std::invalid_argument("field map grid must be positive");

    HeaterLayout unpaired = heater;
    unpaired.tracks.clear();
    for (const auto& tr : heater.tracks)
        if (!tr.return_path) unpaired.tracks.push_back(tr);
    if (unpaired.tracks.empty())
        throw std::invalid_argument("layout has no forward tracks");

    ChamberFieldSummary out;
    const int nx = options.nx, ny = options.ny, nz = options.nz;
    const std::size_t total = static_cast<std::size_t>(nx) * ny * nz;
    double max_b = 0, sum_b = 0;
    if (options.parallel) {
#pragma omp parallel for collapse(2) reduction(max : max_b) reduction(+ : sum_b) \
    schedule(static)
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j)
                for (int k = 0; k < nz; ++k) {
                    Vec3 p{chamber.origin[0] + (i + 0.5) / nx * chamber.extent[0],
                           chamber.origin[1] + (j + 0.5) / ny * chamber.extent[1],
                           chamber.origin[2] + (k + 0.5) / nz * chamber.extent[2]};
                    double b = normv(heater_b_field(heater, current, p));
                    max_b = std::max(max_b, b);
                    sum_b += b;
                }
    } else {
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j)
                for (int k = 0; k < nz; ++k) {
                    Vec3 p{chamber.origin[0] + (i + 0.5) / nx * chamber.extent[0],
                           chamber.origin[1] + (j + 0.5) / ny * chamber.extent[1],
                           chamber.origin[2] + (k + 0.5) / nz * chamber.extent[2]};
                    double b = normv(heater_b_field(heater, current, p));
                    max_b = std::max(max_b, b);
                    sum_b += b;
                }
    }
    out.max_b_t = max_b;
    out.mean_b_t = sum_b / total;

    Vec3 center{chamber.origin[0] + chamber.extent[0] / 2,
                chamber.origin[1] + chamber.extent[1] / 2,
                chamber.origin[2] + chamber.extent[2] / 2};
    out.center_b_t = normv(heater_b_field(heater, current, center));
    out.center_unpaired_b_t = normv(heater_b_field(unpaired, current, center));
    out.suppression_ratio =
        out.center_b_t > 0 ? out.center_unpaired_b_t / out.center_b_t
                           : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace spincell

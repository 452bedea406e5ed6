#include "spincell/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace spincell {

namespace {

constexpr double ref_temp_k = 293.15;  // resistivity reference, 20 C

double seg_len(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(b[0] - a[0], b[1] - a[1]);
}

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

bool segments_intersect(const std::array<double, 2>& p, const std::array<double, 2>& q,
                        const std::array<double, 2>& r, const std::array<double, 2>& s) {
    double d1 = cross2(q[0] - p[0], q[1] - p[1], r[0] - p[0], r[1] - p[1]);
    double d2 = cross2(q[0] - p[0], q[1] - p[1], s[0] - p[0], s[1] - p[1]);
    double d3 = cross2(s[0] - r[0], s[1] - r[1], p[0] - r[0], p[1] - r[1]);
    double d4 = cross2(s[0] - r[0], s[1] - r[1], q[0] - r[0], q[1] - r[1]);
    if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
        d4 != 0)
        return true;
    auto on = [](const std::array<double, 2>& a, const std::array<double, 2>& b,
                 const std::array<double, 2>& c) {
        if (cross2(b[0] - a[0], b[1] - a[1], c[0] - a[0], c[1] - a[1]) != 0) return false;
        return c[0] >= std::min(a[0], b[0]) && c[0] <= std::max(a[0], b[0]) &&
               c[1] >= std::min(a[1], b[1]) && c[1] <= std::max(a[1], b[1]);
    };
    return on(p, q, r) || on(p, q, s) || on(r, s, p) || on(r, s, q);
}

}  // namespace

void LayerStack::validate() const {
    if (layers.empty()) throw std::invalid_argument("layer stack is empty");
    for (const auto& l : layers) {
        if (!(l.thickness > 0)) throw std::invalid_argument("layer thickness must be > 0");
        if (!(l.conductivity > 0)) throw std::invalid_argument("layer conductivity must be > 0");
    }
    if (!(footprint_x > 0) || !(footprint_y > 0))
        throw std::invalid_argument("footprint must be positive");
}

double LayerStack::total_thickness() const {
    double t = 0;
    for (const auto& l : layers) t += l.thickness;
    return t;
}

LayerStack LayerStack::reference() {
    LayerStack s;
    s.layers = {{Material::glass, 0.5e-3, 1.2},
                {Material::silicon, 2.0e-3, 130.0},
                {Material::glass, 0.5e-3, 1.2}};
    s.footprint_x = 20.2e-3;
    s.footprint_y = 10.2e-3;
    return s;
}

bool ChamberCutout::contains(double x, double y, double z) const {
    return x > origin[0] && x < origin[0] + extent[0] && y > origin[1] &&
           y < origin[1] + extent[1] && z > origin[2] && z < origin[2] + extent[2];
}

bool ChamberCutout::contains_xy(double x, double y) const {
    return x > origin[0] && x < origin[0] + extent[0] && y > origin[1] &&
           y < origin[1] + extent[1];
}

std::vector<ChamberCutout> ChamberCutout::reference() {
    return {
        {"interaction", {2.6e-3, 3.1e-3, 0.5e-3}, {4.0e-3, 4.0e-3, 2.0e-3}, 0.026},
        {"storage", {13.2e-3, 2.1e-3, 0.5e-3}, {6.0e-3, 6.0e-3, 2.0e-3}, 0.026},
        {"channel", {6.6e-3, 4.85e-3, 0.5e-3}, {6.6e-3, 0.5e-3, 2.0e-3}, 0.026},
    };
}

void HeaterLayout::validate() const {
    if (tracks.empty()) throw std::invalid_argument("heater has no tracks");
    if (!(thickness > 0)) throw std::invalid_argument("trace thickness must be > 0");
    if (!(resistivity_20c > 0)) throw std::invalid_argument("resistivity must be > 0");
    for (const auto& t : tracks) {
        if (t.vertices.size() < 2) throw std::invalid_argument("track needs >= 2 vertices");
        if (!(t.width > 0)) throw std::invalid_argument("track width must be > 0");
        for (std::size_t a = 0; a + 1 < t.vertices.size(); ++a)
            for (std::size_t b = a + 2; b + 1 < t.vertices.size(); ++b)
                if (segments_intersect(t.vertices[a], t.vertices[a + 1], t.vertices[b],
                                       t.vertices[b + 1]))
                    throw std::invalid_argument("track polyline self-intersects");
    }
}

double HeaterLayout::total_length() const {
    double l = 0;
    for (const auto& t : tracks)
        for (std::size_t i = 0; i + 1 < t.vertices.size(); ++i)
            l += seg_len(t.vertices[i], t.vertices[i + 1]);
    return l;
}

double HeaterLayout::resistance_ohm(double temperature_k) const {
    double rho = resistivity_20c * (1.0 + temp_coefficient * (temperature_k - ref_temp_k));
    double r = 0;
    for (const auto& t : tracks)
        for (std::size_t i = 0; i + 1 < t.vertices.size(); ++i)
            r += rho * seg_len(t.vertices[i], t.vertices[i + 1]) / (t.width * thickness);
    return r;
}

HeaterLayout HeaterLayout::reference() {
    constexpr double mm = 1e-3;
    constexpr double w_loop = 0.05e-3, w_feed = 0.10e-3;
    HeaterLayout h;
    h.tracks = {
        // feed pair along the south edge
        {{{19.80 * mm, 0.95 * mm}, {7.20 * mm, 0.95 * mm}, {7.20 * mm, 2.55 * mm}},
         w_feed,
         false},
        // outer loop around the interaction window
        {{{7.20 * mm, 2.55 * mm},
          {2.00 * mm, 2.55 * mm},
          {2.00 * mm, 7.65 * mm},
          {7.20 * mm, 7.65 * mm},
          {7.20 * mm, 2.85 * mm}},
         w_loop,
         false},
        // adjacent return loop, nested just inside
        {{{7.20 * mm, 2.85 * mm},
          {6.70 * mm, 2.85 * mm},
          {6.70 * mm, 7.20 * mm},
          {2.50 * mm, 7.20 * mm},
          {2.50 * mm, 3.00 * mm},
          {6.45 * mm, 3.00 * mm},
          {6.45 * mm, 2.70 * mm},
          {7.45 * mm, 2.70 * mm}},
         w_loop,
         true},
        // return feed with a hairpin over the storage chamber
        {{{7.45 * mm, 2.70 * mm},
          {7.45 * mm, 1.20 * mm},
          {15.90 * mm, 1.20 * mm},
          {15.90 * mm, 5.45 * mm},
          {16.15 * mm, 5.45 * mm},
          {16.15 * mm, 1.20 * mm},
          {19.80 * mm, 1.20 * mm}},
         w_feed,
         true},
    };
    h.thickness = 0.21118e-6;
    h.resistivity_20c = 1.06e-7;
    h.temp_coefficient = 3.85e-3;
    h.plane_z = 3.0e-3;
    h.pins = {{{19.80 * mm, 0.95 * mm}, {19.80 * mm, 1.20 * mm}}};
    h.drive = {10.5, 0.0};
    return h;
}

void ThermalField::validate() const {
    if (nx < 1 || ny < 1 || nz < 1 || t_k.size() != static_cast<std::size_t>(nx) * ny * nz)
        throw std::invalid_argument("thermal field shape mismatch");
    for (double t : t_k)
        if (!std::isfinite(t)) throw std::invalid_argument("non-finite temperature");
}

double ThermalField::peak_k() const { return *std::max_element(t_k.begin(), t_k.end()); }

namespace {

// fractional cell-center coordinate, clamped to the boundary half-voxels
double frac_coord(double x, double pitch, int n, double length, const char* axis) {
    if (x < -1e-12 || x > length + 1e-12) {
        char msg[96];
        std::snprintf(msg, sizeof msg, "sample point outside grid along %s", axis);
        throw std::domain_error(msg);
    }
    double u = x / pitch - 0.5;
    return std::clamp(u, 0.0, static_cast<double>(n - 1));
}

}  // namespace

double ThermalField::sample(double x, double y, double z) const {
    double u = frac_coord(x, pitch[0], nx, lx(), "x");
    double v = frac_coord(y, pitch[1], ny, ly(), "y");
    double w = frac_coord(z, pitch[2], nz, lz(), "z");
    int i0 = std::min(static_cast<int>(u), nx - 2 >= 0 ? nx - 2 : 0);
    int j0 = std::min(static_cast<int>(v), ny - 2 >= 0 ? ny - 2 : 0);
    int k0 = std::min(static_cast<int>(w), nz - 2 >= 0 ? nz - 2 : 0);
    if (nx == 1) i0 = 0;
    if (ny == 1) j0 = 0;
    if (nz == 1) k0 = 0;
    double fu = u - i0, fv = v - j0, fw = w - k0;
    auto lerp = [](double a, double b, double f) { return a + (b - a) * f; };
    int i1 = std::min(i0 + 1, nx - 1), j1 = std::min(j0 + 1, ny - 1),
        k1 = std::min(k0 + 1, nz - 1);
    double c00 = lerp(at(i0, j0, k0), at(i1, j0, k0), fu);
    double c10 = lerp(at(i0, j1, k0), at(i1, j1, k0), fu);
    double c01 = lerp(at(i0, j0, k1), at(i1, j0, k1), fu);
    double c11 = lerp(at(i0, j1, k1), at(i1, j1, k1), fu);
    return lerp(lerp(c00, c10, fv), lerp(c01, c11, fv), fw);
}

double ThermalField::sample_top(double x, double y) const {
    return sample(x, y, lz() - pitch[2] / 2);
}

const ChamberReport& ThermalSolution::chamber(const std::string& name) const {
    for (const auto& c : chambers)
        if (c.name == name) return c;
    throw std::invalid_argument("no chamber named " + name);
}

namespace {

struct LinearSystem {
    int nx, ny, nz;
    double hx, hy, hz;
    // face conductances; gx has nx+1 planes, gy ny+1, gz nz+1
    std::vector<double> gx, gy, gz, diag, rhs_b;

    std::size_t cells() const { return static_cast<std::size_t>(nx) * ny * nz; }
    std::size_t id(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * ny + j) * nz + k;
    }
    std::size_t idx(int i, int j, int k) const {  // face arrays along x
        return (static_cast<std::size_t>(i) * ny + j) * nz + k;
    }
    std::size_t idy(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * (ny + 1) + j) * nz + k;
    }
    std::size_t idz(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * ny + j) * (nz + 1) + k;
    }
};

LinearSystem build_system(const LayerStack& stack, const std::vector<ChamberCutout>& cutouts,
                          const ThermalOptions& opt, double ambient_k) {
    LinearSystem s;
    s.nx = opt.nx;
    s.ny = opt.ny;
    s.nz = opt.nz;
    s.hx = stack.footprint_x / opt.nx;
    s.hy = stack.footprint_y / opt.ny;
    s.hz = stack.total_thickness() / opt.nz;

    double thinnest = std::numeric_limits<double>::infinity();
    for (const auto& l : stack.layers) thinnest = std::min(thinnest, l.thickness);
    if (s.hz > thinnest / 2 + 1e-12)
        throw std::invalid_argument("grid too coarse: thinnest layer needs >= 2 voxels");
    if (opt.nx < 2 || opt.ny < 2 || opt.nz < 2)
        throw std::invalid_argument("degenerate grid");

    // conductivity per cell from the layer at the cell-center height
    std::vector<double> k(s.cells());
    for (int kk = 0; kk < s.nz; ++kk) {
        double zc = (kk + 0.5) * s.hz;
        double z0 = 0, kv = stack.layers.back().conductivity;
        for (const auto& l : stack.layers) {
            if (zc < z0 + l.thickness) {
                kv = l.conductivity;
                break;
            }
            z0 += l.thickness;
        }
        for (int i = 0; i < s.nx; ++i) {
            double xc = (i + 0.5) * s.hx;
            for (int j = 0; j < s.ny; ++j) {
                double yc = (j + 0.5) * s.hy;
                double kcell = kv;
                for (const auto& c : cutouts)
                    if (c.contains(xc, yc, zc)) kcell = c.gas_conductivity;
                k[s.id(i, j, kk)] = kcell;
            }
        }
    }

    const double ax = s.hy * s.hz, ay = s.hx * s.hz, az = s.hx * s.hy;
    s.gx.assign(static_cast<std::size_t>(s.nx + 1) * s.ny * s.nz, 0.0);
    s.gy.assign(static_cast<std::size_t>(s.nx) * (s.ny + 1) * s.nz, 0.0);
    s.gz.assign(static_cast<std::size_t>(s.nx) * s.ny * (s.nz + 1), 0.0);
    for (int i = 0; i <= s.nx; ++i)
        for (int j = 0; j < s.ny; ++j)
            for (int kk = 0; kk < s.nz; ++kk) {
                if (i == 0)
                    s.gx[s.idx(i, j, kk)] =
                        ax / (s.hx / 2 / k[s.id(0, j, kk)] + 1 / opt.h_conv);
                else if (i == s.nx)
                    s.gx[s.idx(i, j, kk)] =
                        ax / (s.hx / 2 / k[s.id(s.nx - 1, j, kk)] + 1 / opt.h_conv);
                else
                    s.gx[s.idx(i, j, kk)] = ax / (s.hx / 2 / k[s.id(i - 1, j, kk)] +
                                                  s.hx / 2 / k[s.id(i, j, kk)]);
            }
    for (int i = 0; i < s.nx; ++i)
        for (int j = 0; j <= s.ny; ++j)
            for (int kk = 0; kk < s.nz; ++kk) {
                if (j == 0)
                    s.gy[s.idy(i, j, kk)] =
                        ay / (s.hy / 2 / k[s.id(i, 0, kk)] + 1 / opt.h_conv);
                else if (j == s.ny)
                    s.gy[s.idy(i, j, kk)] =
                        ay / (s.hy / 2 / k[s.id(i, s.ny - 1, kk)] + 1 / opt.h_conv);
                else
                    s.gy[s.idy(i, j, kk)] = ay / (s.hy / 2 / k[s.id(i, j - 1, kk)] +
                                                  s.hy / 2 / k[s.id(i, j, kk)]);
            }
    for (int i = 0; i < s.nx; ++i)
        for (int j = 0; j < s.ny; ++j)
            for (int kk = 0; kk <= s.nz; ++kk) {
                if (kk == 0)
                    s.gz[s.idz(i, j, kk)] =
                        az / (s.hz / 2 / k[s.id(i, j, 0)] + 1 / opt.h_conv);
                else if (kk == s.nz)
                    s.gz[s.idz(i, j, kk)] =
                        az / (s.hz / 2 / k[s.id(i, j, s.nz - 1)] + 1 / opt.h_conv);
                else
                    s.gz[s.idz(i, j, kk)] = az / (s.hz / 2 / k[s.id(i, j, kk - 1)] +
                                                  s.hz / 2 / k[s.id(i, j, kk)]);
            }

    s.diag.resize(s.cells());
    s.rhs_b.assign(s.cells(), 0.0);
    for (int i = 0; i < s.nx; ++i)
        for (int j = 0; j < s.ny; ++j)
            for (int kk = 0; kk < s.nz; ++kk) {
                std::size_t c = s.id(i, j, kk);
                s.diag[c] = s.gx[s.idx(i, j, kk)] + s.gx[s.idx(i + 1, j, kk)] +
                            s.gy[s.idy(i, j, kk)] + s.gy[s.idy(i, j + 1, kk)] +
                            s.gz[s.idz(i, j, kk)] + s.gz[s.idz(i, j, kk + 1)];
                double gb = 0;
                if (i == 0) gb += s.gx[s.idx(0, j, kk)];
                if (i == s.nx - 1) gb += s.gx[s.idx(s.nx, j, kk)];
                if (j == 0) gb += s.gy[s.idy(i, 0, kk)];
                if (j == s.ny - 1) gb += s.gy[s.idy(i, s.ny, kk)];
                if (kk == 0) gb += s.gz[s.idz(i, j, 0)];
                if (kk == s.nz - 1) gb += s.gz[s.idz(i, j, s.nz)];
                s.rhs_b[c] = gb * ambient_k;
            }
    return s;
}

void apply_serial(const LinearSystem& s, const std::vector<double>& t,
                  std::vector<double>& out) {
    for (int i = 0; i < s.nx; ++i)
        for (int j = 0; j < s.ny; ++j)
            for (int k = 0; k < s.nz; ++k) {
                std::size_t c = s.id(i, j, k);
                double v = s.diag[c] * t[c];
                if (i > 0) v -= s.gx[s.idx(i, j, k)] * t[s.id(i - 1, j, k)];
                if (i < s.nx - 1) v -= s.gx[s.idx(i + 1, j, k)] * t[s.id(i + 1, j, k)];
                if (j > 0) v -= s.gy[s.idy(i, j, k)] * t[s.id(i, j - 1, k)];
                if (j < s.ny - 1) v -= s.gy[s.idy(i, j + 1, k)] * t[s.id(i, j + 1, k)];
                if (k > 0) v -= s.gz[s.idz(i, j, k)] * t[s.id(i, j, k - 1)];
                if (k < s.nz - 1) v -= s.gz[s.idz(i, j, k + 1)] * t[s.id(i, j, k + 1)];
                out[c] = v;
            }
}

void apply_parallel(const LinearSystem& s, const std::vector<double>& t,
                    std::vector<double>& out) {
#pragma omp parallel for collapse(2) schedule(static)
    for (int i = 0; i < s.nx; ++i)
        for (int j = 0; j < s.ny; ++j) {
            std::size_t c0 = s.id(i, j, 0);
            for (int k = 0; k < s.nz; ++k) {
                std::size_t c = c0 + k;
                double v = s.diag[c] * t[c];
                if (i > 0) v -= s.gx[s.idx(i, j, k)] * t[s.id(i - 1, j, k)];
                if (i < s.nx - 1) v -= s.gx[s.idx(i + 1, j, k)] * t[s.id(i + 1, j, k)];
                if (j > 0) v -= s.gy[s.idy(i, j, k)] * t[s.id(i, j - 1, k)];
                if (j < s.ny - 1) v -= s.gy[s.idy(i, j + 1, k)] * t[s.id(i, j + 1, k)];
                if (k > 0) v -= s.gz[s.idz(i, j, k)] * t[s.id(i, j, k - 1)];
                if (k < s.nz - 1) v -= s.gz[s.idz(i, j, k + 1)] * t[s.id(i, j, k + 1)];
                out[c] = v;
            }
        }
}

double dot(const std::vector<double>& a, const std::vector<double>& b, bool parallel) {
    double sum = 0;
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.size());
    if (parallel) {
#pragma omp parallel for reduction(+ : sum) schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) sum += a[i] * b[i];
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) sum += a[i] * b[i];
    }
    return sum;
}

// Jacobi-preconditioned conjugate gradients; returns iterations, sets rel residual
int pcg_solve(const LinearSystem& s, std::vector<double>& t, const std::vector<double>& b,
              double tol, int max_iter, bool parallel, double& rel_residual) {
    const std::size_t n = s.cells();
    auto apply = parallel ? apply_parallel : apply_serial;
    std::vector<double> r(n), z(n), p(n), ap(n);
    apply(s, t, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    double bnorm = std::sqrt(dot(b, b, parallel));
    if (bnorm == 0) bnorm = 1;
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / s.diag[i];
    p = z;
    double rz = dot(r, z, parallel);
    int it = 0;
    rel_residual = std::sqrt(dot(r, r, parallel)) / bnorm;
    while (rel_residual > tol && it < max_iter) {
        apply(s, p, ap);
        double alpha = rz / dot(p, ap, parallel);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / s.diag[i];
        double rz_new = dot(r, z, parallel);
        double beta = rz_new / rz;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rz = rz_new;
        ++it;
        rel_residual = std::sqrt(dot(r, r, parallel)) / bnorm;
    }
    return it;
}

struct SourceCell {
    int i, j;
    double len_over_width;  // accumulated dl/w, m/m
};

std::vector<SourceCell> rasterize_tracks(const HeaterLayout& heater, const LinearSystem& s) {
    std::vector<double> acc(static_cast<std::size_t>(s.nx) * s.ny, 0.0);
    for (const auto& tr : heater.tracks)
        for (std::size_t v = 0; v + 1 < tr.vertices.size(); ++v) {
            const auto& a = tr.vertices[v];
            const auto& b = tr.vertices[v + 1];
            double len = seg_len(a, b);
            int n = std::max(2, static_cast<int>(len / 2e-5));
            double dlw = len / n / tr.width;
            for (int q = 0; q < n; ++q) {
                double f = (q + 0.5) / n;
                double x = a[0] + (b[0] - a[0]) * f;
                double y = a[1] + (b[1] - a[1]) * f;
                int ix = std::min(static_cast<int>(x / s.hx), s.nx - 1);
                int iy = std::min(static_cast<int>(y / s.hy), s.ny - 1);
                if (ix < 0 || iy < 0) throw std::invalid_argument("track leaves the footprint");
                acc[static_cast<std::size_t>(ix) * s.ny + iy] += dlw;
            }
        }
    std::vector<SourceCell> cells;
    for (int i = 0; i < s.nx; ++i)
        for (int j = 0; j < s.ny; ++j) {
            double v = acc[static_cast<std::size_t>(i) * s.ny + j];
            if (v > 0) cells.push_back({i, j, v});
        }
    return cells;
}

}  // namespace

ThermalSolution solve_thermal(const LayerStack& stack,
                              const std::vector<ChamberCutout>& cutouts,
                              const HeaterLayout& heater, double ambient_k,
                              const ThermalOptions& options) {
    stack.validate();
    heater.validate();
    if (!(ambient_k > 0)) throw std::invalid_argument("ambient must be > 0 K");

    LinearSystem sys = build_system(stack, cutouts, options, ambient_k);
    std::vector<SourceCell> sources = rasterize_tracks(heater, sys);

    ThermalSolution sol;
    sol.field.nx = sys.nx;
    sol.field.ny = sys.ny;
    sol.field.nz = sys.nz;
    sol.field.pitch = {sys.hx, sys.hy, sys.hz};
    sol.field.ambient_k = ambient_k;
    sol.field.t_k.assign(sys.cells(), ambient_k);

    const int top = sys.nz - 1;
    const double volts = heater.drive.volts;
    std::vector<double> b(sys.cells());
    std::vector<double> r_cell(sources.size());
    for (int outer = 0; outer < options.resistance_updates; ++outer) {
        double r_total = 0;
        for (std::size_t c = 0; c < sources.size(); ++c) {
            double tk = sol.field.at(sources[c].i, sources[c].j, top);
            r_cell[c] = heater.resistivity_20c *
                        (1.0 + heater.temp_coefficient * (tk - ref_temp_k)) *
                        sources[c].len_over_width / heater.thickness;
            r_total += r_cell[c];
        }
        double p_total = volts * volts / r_total;
        sol.heater_resistance_ohm = r_total;
        sol.input_power_w = p_total;
        b = sys.rhs_b;
        for (std::size_t c = 0; c < sources.size(); ++c)
            b[sys.id(sources[c].i, sources[c].j, top)] += p_total * r_cell[c] / r_total;

        double res = 0;
        sol.iterations += pcg_solve(sys, sol.field.t_k, b, options.tol,
                                    options.max_iterations, options.parallel, res);
        sol.residual_history.push_back(res);
        if (res > options.tol) {
            std::string msg = "thermal solve did not converge; residuals:";
            for (double h : sol.residual_history) msg += " " + std::to_string(h);
            throw std::runtime_error(msg);
        }
    }
    sol.field.input_power_w = sol.input_power_w;

    // boundary heat flux, for the energy-balance report
    double flux = 0;
    for (int j = 0; j < sys.ny; ++j)
        for (int k = 0; k < sys.nz; ++k) {
            flux += sys.gx[sys.idx(0, j, k)] * (sol.field.at(0, j, k) - ambient_k);
            flux += sys.gx[sys.idx(sys.nx, j, k)] *
                    (sol.field.at(sys.nx - 1, j, k) - ambient_k);
        }
    for (int i = 0; i < sys.nx; ++i)
        for (int k = 0; k < sys.nz; ++k) {
            flux += sys.gy[sys.idy(i, 0, k)] * (sol.field.at(i, 0, k) - ambient_k);
            flux += sys.gy[sys.idy(i, sys.ny, k)] *
                    (sol.field.at(i, sys.ny - 1, k) - ambient_k);
        }
    for (int i = 0; i < sys.nx; ++i)
        for (int j = 0; j < sys.ny; ++j) {
            flux += sys.gz[sys.idz(i, j, 0)] * (sol.field.at(i, j, 0) - ambient_k);
            flux += sys.gz[sys.idz(i, j, sys.nz)] *
                    (sol.field.at(i, j, sys.nz - 1) - ambient_k);
        }
    sol.boundary_flux_w = flux;

    for (const auto& cut : cutouts) {
        ChamberReport rep;
        rep.name = cut.name;
        rep.min_k = std::numeric_limits<double>::infinity();
        rep.max_k = -rep.min_k;
        double sum = 0;
        std::size_t count = 0;
        for (int i = 0; i < sys.nx; ++i) {
            double xc = (i + 0.5) * sys.hx;
            for (int j = 0; j < sys.ny; ++j) {
                double yc = (j + 0.5) * sys.hy;
                for (int k = 0; k < sys.nz; ++k) {
                    double zc = (k + 0.5) * sys.hz;
                    if (!cut.contains(xc, yc, zc)) continue;
                    double t = sol.field.at(i, j, k);
                    sum += t;
                    ++count;
                    rep.min_k = std::min(rep.min_k, t);
                    rep.max_k = std::max(rep.max_k, t);
                }
            }
        }
        if (count == 0) throw std::invalid_argument("cutout contains no grid cells: " + cut.name);
        rep.mean_k = sum / count;
        sol.chambers.push_back(rep);
    }
    return sol;
}

std::vector<TracePoint> line_trace(const ThermalField& field,
                                   const std::vector<std::array<double, 2>>& path,
                                   double step) {
    if (path.size() < 2) throw std::invalid_argument("trace path needs >= 2 vertices");
    if (!(step > 0)) throw std::invalid_argument("trace step must be > 0");
    std::vector<TracePoint> out;
    double total = 0;
    for (std::size_t v = 0; v + 1 < path.size(); ++v) total += seg_len(path[v], path[v + 1]);
    std::size_t seg = 0;
    double seg_start = 0, seg_length = seg_len(path[0], path[1]);
    for (double s = 0;; s += step) {
        bool last = s >= total - 1e-15;
        double sc = last ? total : s;
        while (seg + 2 < path.size() && sc > seg_start + seg_length) {
            seg_start += seg_length;
            ++seg;
            seg_length = seg_len(path[seg], path[seg + 1]);
        }
        double f = seg_length > 0 ? (sc - seg_start) / seg_length : 0;
        double x = path[seg][0] + (path[seg + 1][0] - path[seg][0]) * f;
        double y = path[seg][1] + (path[seg + 1][1] - path[seg][1]) * f;
        out.push_back({sc, x, y, field.sample_top(x, y)});
        if (last) break;
    }
    return out;
}

std::vector<std::size_t> trace_peaks(const std::vector<TracePoint>& trace,
                                     double min_prominence_k, double min_separation_m) {
    const std::size_t n = trace.size();
    std::vector<std::size_t> kept;
    if (n < 3) return kept;
    auto v = [&](std::size_t i) { return trace[i].temperature_k; };

    std::vector<std::size_t> candidates;
    for (std::size_t i = 1; i + 1 < n;) {
        if (v(i) > v(i - 1)) {
            std::size_t j = i;  // ride out any plateau at this height
            while (j + 1 < n && v(j + 1) == v(i)) ++j;
            if (j + 1 < n && v(j + 1) < v(i)) candidates.push_back((i + j) / 2);
            i = j + 1;
        } else {
            ++i;
        }
    }
    for (std::size_t p : candidates) {
        double left_min = v(p), right_min = v(p);
        for (std::size_t i = p; i-- > 0;) {
            if (v(i) > v(p)) break;
            left_min = std::min(left_min, v(i));
        }
        for (std::size_t i = p + 1; i < n; ++i) {
            if (v(i) > v(p)) break;
            right_min = std::min(right_min, v(i));
        }
        double prominence = v(p) - std::max(left_min, right_min);
        if (prominence >= min_prominence_k) kept.push_back(p);
    }
    // merge peaks closer than the separation, keeping the hotter one
    std::vector<std::size_t> merged;
    for (std::size_t p : kept) {
        if (!merged.empty() && trace[p].s - trace[merged.back()].s < min_separation_m) {
            if (v(p) > v(merged.back())) merged.back() = p;
        } else {
            merged.push_back(p);
        }
    }
    return merged;
}

}  // namespace spincell

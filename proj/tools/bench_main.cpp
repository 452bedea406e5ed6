#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <thread>

#include "spincell/acceptance.hpp"
#include "spincell/biot_savart.hpp"
#include "spincell/config.hpp"
#include "spincell/io.hpp"
#include "spincell/scan.hpp"
#include "spincell/vapor.hpp"

using namespace spincell;

namespace {

double timed_ms(const std::function<void()>& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void row(const char* name, double serial_ms, double parallel_ms, const char* agreement) {
    std::printf("%-26s serial %9.1f ms   parallel %9.1f ms   x%-5.2f  %s\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms, agreement);
}

}  // namespace

int main(int argc, char** argv) {
    bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
    int threads = int(std::thread::hardware_concurrency());
    std::printf("hardware threads: %d%s\n\n", threads, quick ? " (quick sizes)" : "");

    auto lay = load_layout_config(resolve_config_path("cell_layout.json"));
    auto cfg = load_cell_config(resolve_config_path("wafer_cell.json"));
    char note[128];

    {
        ThermalOptions o = lay.thermal;
        if (quick) {
            o.nx = 40;
            o.ny = 20;
            o.nz = 12;
        }
        double peak_s = 0, peak_p = 0;
        o.parallel = false;
        double ts = timed_ms([&] {
            peak_s = solve_thermal(lay.stack, lay.cutouts, lay.heater, lay.ambient_k, o)
                         .field.peak_k();
        });
        o.parallel = true;
        double tp = timed_ms([&] {
            peak_p = solve_thermal(lay.stack, lay.cutouts, lay.heater, lay.ambient_k, o)
                         .field.peak_k();
        });
        std::snprintf(note, sizeof note, "peak gap %.2e K", std::abs(peak_s - peak_p));
        row("thermal solve (cg)", ts, tp, note);
    }

    {
        FieldMapOptions m;
        m.nx = quick ? 24 : 64;
        m.ny = quick ? 24 : 64;
        m.nz = quick ? 12 : 32;
        const auto& cut = lay.cutouts.front();
        ChamberFieldSummary fs{}, fp{};
        m.parallel = false;
        double ts = timed_ms([&] { fs = chamber_field_figure(lay.heater, lay.map_current_a, cut, m); });
        m.parallel = true;
        double tp = timed_ms([&] { fp = chamber_field_figure(lay.heater, lay.map_current_a, cut, m); });
        std::snprintf(note, sizeof note, "mean gap %.2e T", std::abs(fs.mean_b_t - fp.mean_b_t));
        row("chamber field map", ts, tp, note);
    }

    {
        ScanConfig sc;
        sc.axis = ScanAxis::pump_power;
        sc.values.assign(cfg.pump_power_values_w.begin(),
                         cfg.pump_power_values_w.begin() + (quick ? 6 : 12));
        sc.base = cfg.params;
        sc.sweep = cfg.sweep;
        sc.noise = NoiseModel{2e-8, 7};
        sc.repeats = 2;
        std::string csv_s, csv_p;
        double ts = timed_ms([&] { csv_s = scan_records_csv(run_scan(sc, 1)); });
        double tp = timed_ms([&] { csv_p = scan_records_csv(run_scan(sc, std::max(threads, 1))); });
        row("scan batch", ts, tp, csv_s == csv_p ? "csv identical" : "CSV DIFFERS");
    }

    {
        PhysicalConstants pc;
        auto vap = vapor_state(pc, 383.15, cfg.params.mix);
        const auto& g = cfg.params.geometry;
        int nx = quick ? 21 : 31, nyz = quick ? 41 : 61;
        double ds = 0, dp = 0;
        double ts = timed_ms([&] {
            ds = grid_diffusion_decay(g.lx, g.ly, g.lz, vap.diffusion_coefficient, nx, nyz, nyz,
                                      false);
        });
        double tp = timed_ms([&] {
            dp = grid_diffusion_decay(g.lx, g.ly, g.lz, vap.diffusion_coefficient, nx, nyz, nyz,
                                      true);
        });
        std::snprintf(note, sizeof note, "rate gap %.2e s^-1", std::abs(ds - dp));
        row("diffusion decay grid", ts, tp, note);
    }

    return 0;
}

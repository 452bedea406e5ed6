#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "spincell/acceptance.hpp"
#include "spincell/biot_savart.hpp"
#include "spincell/config.hpp"
#include "spincell/io.hpp"
#include "spincell/lorentz_fit.hpp"
#include "spincell/scan.hpp"
#include "spincell/spectrum.hpp"
#include "spincell/spin_model.hpp"
#include "spincell/thermal.hpp"
#include "spincell/vapor.hpp"

namespace {

using namespace spincell;
using nlohmann::json;

std::string timestamp_label() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
    return buf;
}

std::filesystem::path pick_run_dir(const std::string& out, const std::string& label) {
    if (!out.empty()) return out;
    return default_output_root() / (timestamp_label() + "_" + label);
}

// fills the auto fields of a sweep the same way a scan does
SweepPlan resolved_plan(const SpinModelParams& params, SweepPlan plan) {
    if (plan.center_hz == 0) plan.center_hz = params.field.larmor_hz;
    if (plan.span_hz == 0)
        plan.span_hz = 10.0 * rate_breakdown(params, steady_state(params)).fwhm_hz();
    return plan;
}

RfSpectrum parse_spectrum_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    RfSpectrum s;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {  // header
            first = false;
            continue;
        }
        double f, x, y;
        int flag = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%d", &f, &x, &y, &flag) < 3)
            throw std::invalid_argument("bad spectrum row: " + line);
        s.frequencies_hz.push_back(f);
        s.x.push_back(x);
        s.y.push_back(y);
        s.flags.push_back(flag);
    }
    if (s.frequencies_hz.empty()) throw std::invalid_argument("spectrum csv has no rows");
    s.validate();
    return s;
}

void print_fit(const LorentzianFit& fit) {
    std::printf("converged %s after %d iterations, residual rms %.4g%s\n",
                fit.converged ? "yes" : "NO", fit.iterations, fit.residual_rms,
                fit.degenerate ? " (degenerate)" : "");
    for (std::size_t i = 0; i < fit.components.size(); ++i) {
        const auto& c = fit.components[i];
        std::printf("  [%zu] center %.6g Hz  fwhm %.6g Hz  amplitude %.6g  phase %.4f rad\n", i,
                    c.center_hz, c.fwhm_hz, c.amplitude, c.phase);
    }
}

int cmd_vapor(const std::string& config, double temp_k, const std::string& out) {
    auto cfg = load_cell_config(resolve_config_path(config));
    PhysicalConstants pc;
    double t = temp_k > 0 ? temp_k : cfg.params.vapor.temperature;
    auto vap = vapor_state(pc, t, cfg.params.mix);
    SpinModelParams p = cfg.params;
    p.vapor = vap;
    double od = optical_depth(pc, vap, 0.0, p.geometry.optical_path, p.mix,
                              p.calib.absorption_strength);
    std::printf("cell           %s\n", cfg.name.c_str());
    std::printf("temperature    %.2f K (%.2f C)\n", t, t - 273.15);
    std::printf("vapor pressure %.6g Pa\n", vapor_pressure(pc, t));
    std::printf("density        %.6g m^-3 (%.6g cm^-3)\n", vap.number_density,
                vap.number_density * 1e-6);
    std::printf("sec rate       %.6g s^-1\n", vap.sec_rate);
    if (vap.ballistic)
        std::printf("diffusion      none (evacuated cell), wall rate %.4g s^-1\n",
                    p.wall_relaxation);
    else
        std::printf("diffusion      %.6g m^2/s, lowest-mode rate %.6g s^-1\n",
                    vap.diffusion_coefficient, p.gamma_diffusion());
    std::printf("optical depth  %.6g on resonance over %.3g m (transmission %.4g)\n", od,
                p.geometry.optical_path, transmittance(od));
    if (!out.empty()) {
        RunWriter w(pick_run_dir(out, "vapor"));
        json d;
        d["temperature_k"] = t;
        d["vapor_pressure_pa"] = vapor_pressure(pc, t);
        d["number_density_m3"] = vap.number_density;
        d["sec_rate_per_s"] = vap.sec_rate;
        d["ballistic"] = vap.ballistic;
        if (!vap.ballistic) {
            d["diffusion_m2_s"] = vap.diffusion_coefficient;
            d["lowest_mode_per_s"] = p.gamma_diffusion();
        }
        d["optical_depth"] = od;
        d["transmission"] = transmittance(od);
        w.write_text("props.json", d.dump(2) + "\n");
        w.set_config(cfg.raw_json);
        auto manifest = w.finalize();
        std::printf("wrote %s\n", manifest.parent_path().c_str());
    }
    return 0;
}

int cmd_synth(const std::string& config, const std::string& out, std::uint64_t seed,
              bool has_seed, bool noiseless, bool also_fit) {
    auto cfg = load_cell_config(resolve_config_path(config));
    if (has_seed) cfg.noise.seed = seed;
    if (noiseless) cfg.noise.white_noise_rms = 0;
    SweepPlan plan = resolved_plan(cfg.params, cfg.sweep);
    auto spec = synthesize_spectrum(cfg.params, plan, cfg.noise);
    std::printf("synthesized %zu points, %.6g..%.6g Hz, dwell %.3g s, noise rms %.3g\n",
                spec.size(), spec.frequencies_hz.front(), spec.frequencies_hz.back(), plan.dwell,
                cfg.noise.white_noise_rms);
    LorentzianFit fit;
    if (also_fit) {
        int n = select_model(spec);
        fit = fit_lorentzian(spec, n);
        print_fit(fit);
    }
    if (!out.empty()) {
        RunWriter w(pick_run_dir(out, "spectrum"));
        w.write_text("spectrum.csv", spectrum_csv(spec));
        if (also_fit) w.write_text("fit.json", fit_json(fit));
        w.set_config(cfg.raw_json);
        w.set_seed(cfg.noise.seed);
        auto manifest = w.finalize();
        std::printf("wrote %s\n", manifest.parent_path().c_str());
    }
    return 0;
}

int cmd_fit(const std::string& input, int components, const std::string& out) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read " + input);
    std::ostringstream buf;
    buf << in.rdbuf();
    auto spec = parse_spectrum_csv(buf.str());
    int n = components > 0 ? components : select_model(spec);
    if (components <= 0) std::printf("model selection: %d component%s\n", n, n == 1 ? "" : "s");
    auto fit = fit_lorentzian(spec, n);
    print_fit(fit);
    if (!out.empty()) {
        RunWriter w(pick_run_dir(out, "fit"));
        w.write_text("fit.json", fit_json(fit));
        auto manifest = w.finalize();
        std::printf("wrote %s\n", manifest.parent_path().c_str());
    }
    return fit.converged ? 0 : 2;
}

int cmd_scan(const std::string& axis, const std::string& config, int workers,
             const std::string& out, std::uint64_t seed, bool has_seed, bool noiseless) {
    auto cfg = load_cell_config(resolve_config_path(config));
    ScanConfig sc = cfg.scan_config(axis_from_name(axis));
    if (has_seed) sc.noise.seed = seed;
    if (noiseless) sc.noise.white_noise_rms = 0;
    auto res = run_scan(sc, workers);
    std::printf("%-14s %-12s %-12s %-12s %s\n", axis.c_str(), "fwhm_hz", "amplitude", "center_hz",
                "n_ok");
    for (const auto& p : res.points)
        std::printf("%-14.6g %-12.6g %-12.6g %-12.6g %d\n", p.value, p.fwhm_hz, p.amplitude,
                    p.center_hz, p.n_ok);
    if (res.failures) std::printf("%zu of %zu records failed\n", res.failures, res.records.size());
    if (sc.axis == ScanAxis::pump_power && res.points.size() >= 3) {
        std::vector<double> xs, ys;
        for (const auto& p : res.points) {
            xs.push_back(p.value);
            ys.push_back(p.fwhm_hz);
        }
        auto m = interp_minimum(xs, ys);
        if (m.interior) std::printf("narrowest %.6g Hz near %.6g W\n", m.y, m.x);
        try {
            std::printf("relative narrowing from the 100 uW width: %.4f\n",
                        relative_narrowing(res));
        } catch (const std::domain_error&) {
        }
    }
    if (!out.empty()) {
        RunWriter w(pick_run_dir(out, "scan_" + axis_name(sc.axis)));
        w.write_text("records.csv", scan_records_csv(res));
        w.write_text("points.csv", scan_points_csv(res));
        w.set_config(cfg.raw_json);
        w.set_seed(sc.noise.seed);
        auto manifest = w.finalize();
        std::printf("wrote %s\n", manifest.parent_path().c_str());
    }
    return 0;
}

int cmd_thermal(const std::string& config, const std::string& out, int nx, int ny, int nz,
                bool serial) {
    auto lay = load_layout_config(resolve_config_path(config));
    ThermalOptions opt = lay.thermal;
    if (nx > 0) opt.nx = nx;
    if (ny > 0) opt.ny = ny;
    if (nz > 0) opt.nz = nz;
    opt.parallel = !serial;
    auto sol = solve_thermal(lay.stack, lay.cutouts, lay.heater, lay.ambient_k, opt);
    std::printf("grid %dx%dx%d, ambient %.2f K\n", opt.nx, opt.ny, opt.nz, lay.ambient_k);
    std::printf("heater %.1f ohm cold, %.1f ohm hot, input %.4g W (flux out %.4g W)\n",
                lay.heater.resistance_ohm(lay.ambient_k), sol.heater_resistance_ohm,
                sol.input_power_w, sol.boundary_flux_w);
    std::printf("peak %.3f C after %d linear iterations\n", sol.field.peak_k() - 273.15,
                sol.iterations);
    for (const auto& ch : sol.chambers)
        std::printf("chamber %-12s mean %.3f C  span %.3f K\n", ch.name.c_str(),
                    ch.mean_k - 273.15, ch.differential_k());
    if (!out.empty()) {
        RunWriter w(pick_run_dir(out, "thermal"));
        w.write_text("field.txt", field_flat_text(sol.field));
        w.write_text("top_slice.csv", field_slice_csv(sol.field, sol.field.nz - 1));
        json d;
        d["peak_k"] = sol.field.peak_k();
        d["input_power_w"] = sol.input_power_w;
        d["boundary_flux_w"] = sol.boundary_flux_w;
        d["heater_resistance_ohm"] = sol.heater_resistance_ohm;
        d["iterations"] = sol.iterations;
        d["residuals"] = sol.residual_history;
        for (const auto& ch : sol.chambers)
            d["chambers"][ch.name] = {{"mean_k", ch.mean_k},
                                      {"max_k", ch.max_k},
                                      {"min_k", ch.min_k},
                                      {"differential_k", ch.differential_k()}};
        w.write_text("summary.json", d.dump(2) + "\n");
        w.set_config(lay.raw_json);
        auto manifest = w.finalize();
        std::printf("wrote %s\n", manifest.parent_path().c_str());
    }
    return 0;
}

int cmd_bfield(const std::string& config, const std::string& chamber, const std::string& out,
               bool serial) {
    auto lay = load_layout_config(resolve_config_path(config));
    FieldMapOptions opt = lay.map;
    opt.parallel = !serial;
    json d;
    bool found = false;
    for (const auto& cut : lay.cutouts) {
        if (!chamber.empty() && cut.name != chamber) continue;
        found = true;
        auto fig = chamber_field_figure(lay.heater, lay.map_current_a, cut, opt);
        std::printf("%-12s center %.4g nT  mean %.4g nT  max %.4g nT  unpaired %.4g nT  "
                    "suppression %.1f\n",
                    cut.name.c_str(), fig.center_b_t * 1e9, fig.mean_b_t * 1e9, fig.max_b_t * 1e9,
                    fig.center_unpaired_b_t * 1e9, fig.suppression_ratio);
        d[cut.name] = {{"center_t", fig.center_b_t},
                       {"mean_t", fig.mean_b_t},
                       {"max_t", fig.max_b_t},
                       {"center_unpaired_t", fig.center_unpaired_b_t},
                       {"suppression_ratio", fig.suppression_ratio}};
    }
    if (!found) throw std::invalid_argument("no chamber named " + chamber);
    std::printf("drive current %.4g A at %.4g Hz\n", lay.map_current_a,
                lay.heater.drive.frequency_hz);
    if (!out.empty()) {
        RunWriter w(pick_run_dir(out, "bfield"));
        w.write_text("bfield.json", d.dump(2) + "\n");
        w.set_config(lay.raw_json);
        auto manifest = w.finalize();
        std::printf("wrote %s\n", manifest.parent_path().c_str());
    }
    return 0;
}

int cmd_acceptance(bool serial) {
    auto report = run_acceptance(!serial, &std::cout);
    std::printf("%d/%zu passed; suite matches its documented expectation: %s\n",
                report.n_passed(), report.results.size(), report.as_expected() ? "yes" : "NO");
    return report.as_expected() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spin dynamics, rf spectra and thermal environment of miniature vapour cells"};
    app.require_subcommand(1);
    int rc = 0;

    std::string config = "wafer_cell.json";
    std::string layout = "cell_layout.json";
    std::string out, input, chamber, axis;
    std::uint64_t seed = 0;
    bool has_seed = false, noiseless = false, serial = false, also_fit = false;
    int workers = 1, components = 0, nx = 0, ny = 0, nz = 0;
    double temp_k = 0;

    auto add_seed = [&](CLI::App* c) {
        c->add_option("--seed", seed, "override the noise seed from the config")
            ->each([&](const std::string&) { has_seed = true; });
    };

    auto* vapor = app.add_subcommand("vapor", "vapour properties");
    vapor->require_subcommand(1);
    auto* props = vapor->add_subcommand("props", "print densities and rates at temperature");
    props->add_option("--config", config, "cell config name or path");
    props->add_option("--temperature", temp_k, "operating temperature, K");
    props->add_option("--out", out, "write props.json under this directory");
    props->callback([&] { rc = cmd_vapor(config, temp_k, out); });

    auto* spectrum = app.add_subcommand("spectrum", "synthesize and fit rf spectra");
    spectrum->require_subcommand(1);
    auto* synth = spectrum->add_subcommand("synth", "synthesize one sweep at the set point");
    synth->add_option("--config", config, "cell config name or path");
    synth->add_option("--out", out, "write spectrum.csv under this directory");
    add_seed(synth);
    synth->add_flag("--noiseless", noiseless, "drop the noise model");
    synth->add_flag("--fit", also_fit, "fit the synthesized sweep");
    synth->callback([&] { rc = cmd_synth(config, out, seed, has_seed, noiseless, also_fit); });
    auto* fitc = spectrum->add_subcommand("fit", "fit a spectrum csv");
    fitc->add_option("input", input, "spectrum csv (frequency_hz,x,y,flag)")->required();
    fitc->add_option("--components", components, "1 or 2; default picks by residual");
    fitc->add_option("--out", out, "write fit.json under this directory");
    fitc->callback([&] { rc = cmd_fit(input, components, out); });

    auto* scan = app.add_subcommand("scan", "sweep one axis, fit every point");
    scan->require_subcommand(1);
    for (const char* name : {"pump-power", "temperature", "larmor"}) {
        auto* sub = scan->add_subcommand(name, std::string("scan the ") + name + " axis");
        sub->add_option("--config", config, "cell config name or path");
        sub->add_option("--workers", workers, "fit worker threads")->check(CLI::Range(1, 64));
        sub->add_option("--out", out, "write records.csv/points.csv under this directory");
        add_seed(sub);
        sub->add_flag("--noiseless", noiseless, "drop the noise model");
        std::string ax = name == std::string("pump-power") ? "pump_power" : name;
        sub->callback([&, ax] { rc = cmd_scan(ax, config, workers, out, seed, has_seed, noiseless); });
    }

    auto* thermal = app.add_subcommand("thermal", "steady heater temperature map");
    thermal->require_subcommand(1);
    auto* tsolve = thermal->add_subcommand("solve", "solve the stack and report chambers");
    tsolve->add_option("--config", layout, "layout config name or path");
    tsolve->add_option("--out", out, "write field.txt and summary.json under this directory");
    tsolve->add_option("--nx", nx, "override grid cells in x");
    tsolve->add_option("--ny", ny, "override grid cells in y");
    tsolve->add_option("--nz", nz, "override grid cells in z");
    tsolve->add_flag("--serial", serial, "disable the parallel kernels");
    tsolve->callback([&] { rc = cmd_thermal(layout, out, nx, ny, nz, serial); });

    auto* bfield = app.add_subcommand("bfield", "heater stray field inside the chambers");
    bfield->require_subcommand(1);
    auto* bmap = bfield->add_subcommand("map", "sample |B| over a chamber volume");
    bmap->add_option("--config", layout, "layout config name or path");
    bmap->add_option("--chamber", chamber, "restrict to one chamber");
    bmap->add_option("--out", out, "write bfield.json under this directory");
    bmap->add_flag("--serial", serial, "disable the parallel kernels");
    bmap->callback([&] { rc = cmd_bfield(layout, chamber, out, serial); });

    auto* acc = app.add_subcommand("acceptance", "release checks");
    acc->require_subcommand(1);
    auto* arun = acc->add_subcommand("run", "run every check and compare to the expected state");
    arun->add_flag("--serial", serial, "disable the parallel kernels");
    arun->callback([&] { rc = cmd_acceptance(serial); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}

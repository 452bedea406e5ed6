#include "spincell/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace spincell {

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& bytes) { return fnv1a64(bytes.data(), bytes.size()); }

std::filesystem::path default_output_root() {
    if (const char* env = std::getenv("SPINCELL_OUT_ROOT"); env && *env)
        return std::filesystem::path(env);
    return std::filesystem::path("runs");
}

std::string spectrum_csv(const RfSpectrum& spectrum) {
    std::string out = "frequency_hz,x,y,flag\n";
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        out += format_g17(spectrum.frequencies_hz[i]);
        out += ',';
        out += format_g17(spectrum.x[i]);
        out += ',';
        out += format_g17(spectrum.y[i]);
        out += ',';
        out += std::to_string(spectrum.flags.empty() ? 0 : spectrum.flags[i]);
        out += '\n';
    }
    return out;
}

std::string scan_records_csv(const ScanResult& result) {
    std::string out =
        "value,repeat,seed,failed,model,amplitude,fwhm_hz,center_hz,phase,residual_rms,"
        "converged,error\n";
    for (const auto& r : result.records) {
        out += format_g17(r.value);
        out += ',' + std::to_string(r.repeat);
        out += ',' + std::to_string(r.seed);
        out += ',' + std::to_string(r.failed ? 1 : 0);
        out += ',' + std::to_string(r.model);
        out += ',' + format_g17(r.amplitude);
        out += ',' + format_g17(r.fwhm_hz);
        out += ',' + format_g17(r.center_hz);
        out += ',' + format_g17(r.phase);
        out += ',' + format_g17(r.residual_rms);
        out += ',' + std::to_string(r.converged ? 1 : 0);
        out += ',';
        for (char c : r.error) out += (c == ',' || c == '\n') ? ' ' : c;
        out += '\n';
    }
    return out;
}

std::string scan_points_csv(const ScanResult& result) {
    std::string out = "value,amplitude,fwhm_hz,center_hz,n_ok\n";
    for (const auto& p : result.points) {
        out += format_g17(p.value);
        out += ',' + format_g17(p.amplitude);
        out += ',' + format_g17(p.fwhm_hz);
        out += ',' + format_g17(p.center_hz);
        out += ',' + std::to_string(p.n_ok);
        out += '\n';
    }
    return out;
}

std::string fit_json(const LorentzianFit& fit) {
    nlohmann::json j;
    j["converged"] = fit.converged;
    j["degenerate"] = fit.degenerate;
    j["iterations"] = fit.iterations;
    j["residual_rms"] = fit.residual_rms;
    j["components"] = nlohmann::json::array();
    for (const auto& c : fit.components)
        j["components"].push_back({{"center_hz", c.center_hz},
                                   {"fwhm_hz", c.fwhm_hz},
                                   {"amplitude", c.amplitude},
                                   {"phase", c.phase}});
    j["covariance"] = fit.covariance;
    return j.dump(2) + "\n";
}

std::string field_slice_csv(const ThermalField& field, int k) {
    if (k < 0 || k >= field.nz) throw std::invalid_argument("slice index out of range");
    std::string out = "x,y,t_k\n";
    for (int i = 0; i < field.nx; ++i)
        for (int j = 0; j < field.ny; ++j) {
            out += format_g17((i + 0.5) * field.pitch[0]);
            out += ',' + format_g17((j + 0.5) * field.pitch[1]);
            out += ',' + format_g17(field.at(i, j, k));
            out += '\n';
        }
    return out;
}

std::string field_flat_text(const ThermalField& field) {
    std::string out = "spincell-grid 1\n";
    out += std::to_string(field.nx) + " " + std::to_string(field.ny) + " " +
           std::to_string(field.nz) + "\n";
    out += format_g17(field.pitch[0]) + " " + format_g17(field.pitch[1]) + " " +
           format_g17(field.pitch[2]) + "\n";
    out += format_g17(field.ambient_k) + " " + format_g17(field.input_power_w) + "\n";
    for (double t : field.t_k) out += format_g17(t) + "\n";
    return out;
}

ThermalField field_from_flat_text(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "spincell-grid" || version != 1)
        throw std::invalid_argument("not a spincell grid file");
    ThermalField f;
    in >> f.nx >> f.ny >> f.nz;
    in >> f.pitch[0] >> f.pitch[1] >> f.pitch[2];
    in >> f.ambient_k >> f.input_power_w;
    if (!in || f.nx < 1 || f.ny < 1 || f.nz < 1)
        throw std::invalid_argument("malformed grid header");
    std::size_t n = static_cast<std::size_t>(f.nx) * f.ny * f.nz;
    f.t_k.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!(in >> f.t_k[i])) throw std::invalid_argument("grid file truncated");
    return f;
}

namespace {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

RunWriter::RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

void RunWriter::write_text(const std::string& name, const std::string& content) {
    if (finalized_) throw std::logic_error("run already finalized");
    if (name.empty() || name.find('/') != std::string::npos || name == "manifest.json")
        throw std::invalid_argument("bad output file name: " + name);
    write_file_atomic(dir_ / name, content);
    entries_.push_back({name, fnv1a64(content), content.size()});
}

void RunWriter::set_config(std::string config_json) { config_json_ = std::move(config_json); }

void RunWriter::set_seed(std::uint64_t seed) {
    seed_ = seed;
    has_seed_ = true;
}

std::filesystem::path RunWriter::finalize() {
    if (finalized_) throw std::logic_error("run already finalized");
    nlohmann::json manifest;
    manifest["files"] = nlohmann::json::array();
    for (const auto& e : entries_) {
        char hex[20];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(e.hash));
        manifest["files"].push_back(
            {{"path", e.name}, {"bytes", e.bytes}, {"fnv1a64", hex}});
    }
    manifest["config"] = nlohmann::json::parse(config_json_);
    if (has_seed_) manifest["seed"] = seed_;
    std::filesystem::path path = dir_ / "manifest.json";
    write_file_atomic(path, manifest.dump(2) + "\n");
    finalized_ = true;
    return path;
}

}  // namespace spincell

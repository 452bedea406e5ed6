#pragma once

#include "spincell/lorentz_fit.hpp"
#include "spincell/scan.hpp"
#include "spincell/spectrum.hpp"
#include "spincell/thermal.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spincell {

std::string format_g17(double v);  // "%.17g", locale-independent

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64(const std::string& bytes);

// $SPINCELL_OUT_ROOT if set, else ./runs
std::filesystem::path default_output_root();

std::string spectrum_csv(const RfSpectrum& spectrum);  // frequency_hz,x,y,flag
std::string scan_records_csv(const ScanResult& result);
std::string scan_points_csv(const ScanResult& result);  // plot-ready long format
std::string fit_json(const LorentzianFit& fit);

// long-format slice of one z layer: x,y,t_k at cell centers
std::string field_slice_csv(const ThermalField& field, int k);
// whole grid as documented flat text: header lines, then one value per line
std::string field_flat_text(const ThermalField& field);
ThermalField field_from_flat_text(const std::string& text);

// collects files for one run; nothing is listed until finalize() writes the
// manifest, so an aborted run never looks complete
class RunWriter {
  public:
    explicit RunWriter(std::filesystem::path dir);
    const std::filesystem::path& dir() const { return dir_; }

    void write_text(const std::string& name, const std::string& content);
    void set_config(std::string config_json);
    void set_seed(std::uint64_t seed);
    std::filesystem::path finalize();  // returns the manifest path

  private:
    struct Entry {
        std::string name;
        std::uint64_t hash;
        std::size_t bytes;
    };
    std::filesystem::path dir_;
    std::vector<Entry> entries_;
    std::string config_json_ = "{}";
    std::uint64_t seed_ = 0;
    bool has_seed_ = false;
    bool finalized_ = false;
};

}  // namespace spincell

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "spincell/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& scratch() {
    static fs::path p = [] {
        fs::path d = fs::temp_directory_path() / "spincell_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return p;
}

struct RunOut {
    int code = -1;
    std::string text;
};

RunOut run_cli(const std::string& args) {
    static int counter = 0;
    fs::path log = scratch() / ("log" + std::to_string(counter++) + ".txt");
    std::string cmd = std::string(SPINCELL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    RunOut out;
    if (status != -1 && WIFEXITED(status)) out.code = WEXITSTATUS(status);
    std::ifstream in(log, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    out.text = buf.str();
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// every manifest entry must describe its file byte for byte
void check_manifest(const fs::path& dir, std::size_t expected_files) {
    json m = json::parse(slurp(dir / "manifest.json"));
    REQUIRE(m["files"].size() == expected_files);
    for (const auto& f : m["files"]) {
        std::string content = slurp(dir / f["path"].get<std::string>());
        CHECK(f["bytes"].get<std::size_t>() == content.size());
        char hex[20];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(spincell::fnv1a64(content)));
        CHECK(f["fnv1a64"].get<std::string>() == hex);
    }
}

}  // namespace

TEST_CASE("help and bad invocations") {
    auto help = run_cli("--help");
    CHECK(help.code == 0);
    CHECK(contains(help.text, "spectrum"));
    CHECK(contains(help.text, "thermal"));
    CHECK(run_cli("").code == 1);
    CHECK(run_cli("frobnicate").code == 1);
    CHECK(run_cli("spectrum").code == 1);  // needs a nested subcommand
}

TEST_CASE("vapor props prints the set point") {
    auto r = run_cli("vapor props --config wafer_cell.json");
    CHECK(r.code == 0);
    CHECK(contains(r.text, "383.15 K"));
    CHECK(contains(r.text, "optical depth"));
    auto mid = run_cli("vapor props --config wafer_cell.json --temperature 363.15");
    CHECK(mid.code == 0);
    CHECK(contains(mid.text, "transmission 0.3679"));  // unit optical depth
}

TEST_CASE("missing and malformed configs fail cleanly") {
    CHECK(run_cli("vapor props --config no_such_file.json").code == 1);
    fs::path broken = scratch() / "broken.json";
    write_file(broken, "{ not json at all");
    CHECK(run_cli("vapor props --config " + broken.string()).code == 2);
    fs::path hollow = scratch() / "hollow.json";
    write_file(hollow, "{}\n");
    CHECK(run_cli("vapor props --config " + hollow.string()).code == 1);
}

TEST_CASE("synth writes a verifiable bundle") {
    fs::path dir = scratch() / "synth1";
    auto r = run_cli("spectrum synth --config spherical_glass_cell.json --noiseless --fit --out " +
                     dir.string());
    CHECK(r.code == 0);
    CHECK(contains(r.text, "synthesized 161 points"));
    CHECK(contains(r.text, "converged yes"));
    check_manifest(dir, 2);

    std::string csv = slurp(dir / "spectrum.csv");
    CHECK(contains(csv, "frequency_hz,x,y,flag"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 162);  // header + 161 rows

    json fit = json::parse(slurp(dir / "fit.json"));
    CHECK(fit["converged"].get<bool>());
    CHECK(fit["components"].size() >= 1);

    json m = json::parse(slurp(dir / "manifest.json"));
    CHECK(m["seed"].get<std::uint64_t>() == 20260814ull);
    CHECK(contains(m["config"]["name"].get<std::string>(), "sphere"));
}

TEST_CASE("seed override reproduces spectra byte for byte") {
    fs::path a = scratch() / "seed_a", b = scratch() / "seed_b", c = scratch() / "seed_c";
    CHECK(run_cli("spectrum synth --config spherical_glass_cell.json --seed 4242 --out " +
                  a.string())
              .code == 0);
    CHECK(run_cli("spectrum synth --config spherical_glass_cell.json --seed 4242 --out " +
                  b.string())
              .code == 0);
    CHECK(run_cli("spectrum synth --config spherical_glass_cell.json --seed 4243 --out " +
                  c.string())
              .code == 0);
    CHECK(slurp(a / "spectrum.csv") == slurp(b / "spectrum.csv"));
    CHECK(slurp(a / "spectrum.csv") != slurp(c / "spectrum.csv"));
    CHECK(json::parse(slurp(a / "manifest.json"))["seed"].get<std::uint64_t>() == 4242ull);
}

TEST_CASE("fit command reads spectrum csv files") {
    fs::path csv = scratch() / "synth1" / "spectrum.csv";
    REQUIRE(fs::exists(csv));  // produced by the synth case above
    auto auto_fit = run_cli("spectrum fit " + csv.string());
    CHECK(auto_fit.code == 0);
    CHECK(contains(auto_fit.text, "model selection"));
    CHECK(contains(auto_fit.text, "converged yes"));

    fs::path dir = scratch() / "fit1";
    auto fixed = run_cli("spectrum fit " + csv.string() + " --components 1 --out " + dir.string());
    CHECK(fixed.code == 0);
    CHECK_FALSE(contains(fixed.text, "model selection"));
    check_manifest(dir, 1);

    CHECK(run_cli("spectrum fit " + (scratch() / "nope.csv").string()).code == 1);
    fs::path empty = scratch() / "empty.csv";
    write_file(empty, "frequency_hz,x,y,flag\n");
    CHECK(run_cli("spectrum fit " + empty.string()).code == 1);
}

TEST_CASE("scan output is identical across worker counts") {
    fs::path d1 = scratch() / "scan1", d2 = scratch() / "scan2";
    auto r1 = run_cli("scan pump-power --config spherical_glass_cell.json --workers 1 --out " +
                      d1.string());
    CHECK(r1.code == 0);
    CHECK(contains(r1.text, "pump_power"));
    CHECK(contains(r1.text, "relative narrowing"));
    auto r2 = run_cli("scan pump-power --config spherical_glass_cell.json --workers 4 --out " +
                      d2.string());
    CHECK(r2.code == 0);
    CHECK(slurp(d1 / "records.csv") == slurp(d2 / "records.csv"));
    CHECK(slurp(d1 / "points.csv") == slurp(d2 / "points.csv"));
    check_manifest(d1, 2);
}

TEST_CASE("thermal solve reports chambers and round-trips the field") {
    fs::path dir = scratch() / "thermal1";
    auto r = run_cli("thermal solve --config cell_layout.json --nx 40 --out " + dir.string());
    CHECK(r.code == 0);
    CHECK(contains(r.text, "peak"));
    CHECK(contains(r.text, "chamber interaction"));
    check_manifest(dir, 3);

    json summary = json::parse(slurp(dir / "summary.json"));
    double peak_c = summary["peak_k"].get<double>() - 273.15;
    CHECK(peak_c > 74.0);
    CHECK(peak_c < 82.0);

    auto field = spincell::field_from_flat_text(slurp(dir / "field.txt"));
    CHECK(field.nx == 40);
    CHECK(field.ny == 40);
    CHECK(field.nz == 12);
    CHECK(field.peak_k() == doctest::Approx(summary["peak_k"].get<double>()).epsilon(1e-12));
}

TEST_CASE("bfield map reports the suppression figure") {
    fs::path dir = scratch() / "bfield1";
    auto r = run_cli("bfield map --config cell_layout.json --chamber interaction --out " +
                     dir.string());
    CHECK(r.code == 0);
    CHECK(contains(r.text, "suppression"));
    check_manifest(dir, 1);
    json d = json::parse(slurp(dir / "bfield.json"));
    double sup = d["interaction"]["suppression_ratio"].get<double>();
    CHECK(sup > 17.5);
    CHECK(sup < 19.7);
    CHECK(run_cli("bfield map --config cell_layout.json --chamber attic").code == 1);
}

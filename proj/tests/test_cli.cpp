#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stable_degen/cli.hpp"
#include "stable_degen/errors.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace stable_degen;
using stable_degen::cli::parse_config;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = STABLE_DEGEN_CLI;
const std::string kConfigs = STABLE_DEGEN_CONFIGS;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("stable_degen_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

int run(const std::string& args) {
    const std::string cmd = "'" + kCli + "' " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = scratch(name);
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

std::string config(const std::string& name) { return kConfigs + "/" + name; }

}  // namespace

TEST_CASE("version and usage errors") {
    CHECK(run("--version") == 0);
    CHECK(run("") == cli::kExitUsage);
    CHECK(run("frobnicate --config x --out y") == cli::kExitUsage);
    CHECK(run("graphs --out y") == cli::kExitUsage);
}

TEST_CASE("malformed JSON exits 2 and writes nothing") {
    const fs::path cfg = write_config("bad.json", "{\"genus\": 2,,}");
    const fs::path out = scratch("bad_out");
    CHECK(run("graphs --config '" + cfg.string() + "' --out '" + out.string() + "'") == cli::kExitConfig);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("missing config file exits 2") {
    const fs::path out = scratch("missing_out");
    CHECK(run("graphs --config /nonexistent/cfg.json --out '" + out.string() + "'") == cli::kExitConfig);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("config validation errors exit 2 before computing") {
    const fs::path out = scratch("invalid_out");
    const std::pair<std::string, std::string> bad[] = {
        {"graphs", R"({"genus": 2, "colour": 1})"},
        {"graphs", R"({"command": "surface", "genus": 2})"},
        {"graphs", R"({"genus": 1})"},
        {"basis", R"({"model": "two_self_node", "m": 3, "t": 0.5})"},
        {"degenerate", R"({"model": "two_self_node", "m": 2, "epsilon": 3.0, "margulis_cap": 3.1,
                         "schedule": {"kind": "decades", "first": 0.1, "count": 3}})"},
        {"degenerate", R"({"model": "two_self_node", "m": 3, "epsilon": 3.0, "margulis_cap": 3.1,
                         "schedule": {"kind": "spiral"}})"},
        {"degenerate", R"({"model": "no_such_model", "m": 3, "epsilon": 3.0, "margulis_cap": 3.1,
                         "schedule": {"kind": "decades", "first": 0.1, "count": 3}})"},
    };
    int i = 0;
    for (const auto& [cmd, text] : bad) {
        const fs::path cfg = write_config("invalid" + std::to_string(i++) + ".json", text);
        CHECK(run(cmd + " --config '" + cfg.string() + "' --out '" + out.string() + "'") == cli::kExitConfig);
    }
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("parse_config in process") {
    CHECK_THROWS_AS(parse_config("graphs", Json{{"genus", 2}, {"extra", 1}}, false), ConfigError);
    const cli::RunConfig g = parse_config("graphs", Json{{"genus", 3}}, false);
    CHECK(g.genus == 3);
    const Json fam = Json::parse(slurp(config("g2_degenerate.json")));
    const cli::RunConfig d = parse_config("degenerate", fam, true);
    CHECK(d.paper_normalization);
    CHECK(d.family.schedule.size() == 6);
    CHECK(d.family.m == 3);
    CHECK(d.family.product.epsilon == 3.0);
    CHECK(d.family.ratio_cap == 1.25);
    CHECK_THROWS_AS(parse_config("robustness", fam, false), ConfigError);
}

TEST_CASE("graphs writes its artifact and a manifest") {
    const fs::path out = scratch("graphs_out");
    REQUIRE(run("graphs --config '" + config("g2_graphs.json") + "' --out '" + out.string() + "'") == 0);
    const Json graphs = Json::parse(slurp(out / "graphs.json"));
    CHECK(graphs.at("count") == 2);
    const Json manifest = Json::parse(slurp(out / "run.json"));
    CHECK(manifest.at("tool") == cli::kToolName);
    CHECK(manifest.at("version") == cli::kToolVersion);
    CHECK(manifest.at("command") == "graphs");
    CHECK(manifest.at("exit_code") == 0);
    CHECK(manifest.at("tolerances").contains("rank_gap"));
    const Json source = Json::parse(slurp(config("g2_graphs.json")));
    CHECK(manifest.at("config_hash") == io::hex64(io::fnv1a(source.dump())));
    const Json& art = manifest.at("artifacts").at(0);
    const std::string bytes = slurp(out / "graphs.json");
    CHECK(art.at("name") == "graphs.json");
    CHECK(art.at("bytes") == bytes.size());
    CHECK(art.at("fnv1a") == io::hex64(io::fnv1a(bytes)));
}

TEST_CASE("paper normalization changes only the reported conventions") {
    const fs::path a = scratch("surface_a"), b = scratch("surface_b");
    REQUIRE(run("surface --config '" + config("g2_surface.json") + "' --out '" + a.string() + "'") == 0);
    REQUIRE(run("surface --config '" + config("g2_surface.json") + "' --out '" + b.string() + "' --paper-normalization") == 0);
    const Json ja = Json::parse(slurp(a / "surface.json"));
    const Json jb = Json::parse(slurp(b / "surface.json"));
    CHECK(io::parse_real(ja.at("volume"), "volume") == doctest::Approx(4.0 * 3.141592653589793).epsilon(1e-15));
    CHECK(io::parse_real(jb.at("volume"), "volume") == 2.0);
    CHECK(ja.at("thick_thin").at("thin_volume") == jb.at("thick_thin").at("thin_volume"));
    CHECK(Json::parse(slurp(b / "run.json")).at("paper_normalization") == true);
}

TEST_CASE("basis and gram outputs are byte-identical across runs") {
    for (const std::string cmd : {"basis", "gram"}) {
        const fs::path a = scratch(cmd + "_a"), b = scratch(cmd + "_b");
        const std::string cfg = config("g2_" + cmd + ".json");
        REQUIRE(run(cmd + " --config '" + cfg + "' --out '" + a.string() + "'") == 0);
        REQUIRE(run(cmd + " --config '" + cfg + "' --out '" + b.string() + "'") == 0);
        for (const auto& entry : fs::directory_iterator(a)) {
            const std::string name = entry.path().filename().string();
            CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name);
        }
    }
}

TEST_CASE("basis reports the expected dimension") {
    const fs::path out = scratch("basis_dim");
    REQUIRE(run("basis --config '" + config("g2_basis.json") + "' --out '" + out.string() + "'") == 0);
    const Json j = Json::parse(slurp(out / "basis.json"));
    CHECK(j.at("dimension") == 5);
    CHECK(j.at("expected_dimension") == 5);
    CHECK(io::parse_real(j.at("gap"), "gap") >= 1e6);
}

TEST_CASE("degenerate writes the report and the step table") {
    const fs::path out = scratch("degenerate_out");
    REQUIRE(run("degenerate --config '" + config("g2_degenerate.json") + "' --out '" + out.string() + "'") == 0);
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "steps.csv"));
    const Json rep = Json::parse(slurp(out / "report.json"));
    CHECK(rep.at("complete") == true);
    CHECK(rep.at("flags").at("cauchy") == true);
    CHECK(rep.at("flags").at("ratio_bounded") == true);
    CHECK(rep.at("steps").size() == 6);
    const std::string csv = slurp(out / "steps.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    const Json manifest = Json::parse(slurp(out / "run.json"));
    CHECK(manifest.at("tolerances").contains("ratio_cap"));
    CHECK(manifest.at("artifacts").size() == 2);
}

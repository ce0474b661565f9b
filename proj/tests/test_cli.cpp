#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <set>
#include <fstream>
#include <sstream>

#include "eitmem/errors.hpp"
#include "eitmem/scenario_file.hpp"

using namespace eitmem;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kGoldens = GOLDENS_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("eitmem_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void dump(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

json load(const fs::path& p) { return json::parse(slurp(p)); }

int cli(const std::string& args, const fs::path& root) {
    const std::string cmd = "EITMEM_OUTPUT_ROOT='" + root.string() + "' '" + EITMEM_CLI + "' " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

}  // namespace

TEST_CASE("every shipped golden scenario validates") {
    int count = 0;
    for (const auto& e : fs::directory_iterator(kGoldens)) {
        const std::string n = e.path().filename().string();
        if (e.path().extension() != ".json" || n.find(".expected.") != std::string::npos) continue;
        CHECK_NOTHROW(load_scenario(e.path()));
        ++count;
    }
    CHECK(count >= 9);
    std::set<std::string> kinds;
    for (const auto& k : scenario_kinds()) kinds.insert(k.kind);
    CHECK(kinds.size() == 7);
}

TEST_CASE("strict schema") {
    const json base = load(kGoldens / "cavity_stirap.json");
    CHECK_NOTHROW(parse_scenario(base));
    json j = base;
    j["colour"] = "blue";
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
    j = base;
    j["params"]["gg"] = 1;
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
    j = base;
    j["version"] = "eitmem-scenario/0";
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
    j = base;
    j["kind"] = "teleport";
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
    j = base;
    j["params"]["g"] = "one";
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
    j = base;
    j["output"] = "../escape";
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
    json s = load(kGoldens / "stop_retrieve.json");
    s["params"]["control"]["shape"] = "zigzag";
    CHECK_THROWS_AS(parse_scenario(s), ValidationError);
    s = load(kGoldens / "stop_retrieve.json");
    s["params"]["nz"] = 100;  // CFL fixed at 1: gamma dt = 2 > 0.1
    CHECK_THROWS_AS(parse_scenario(s), ValidationError);
}

TEST_CASE("run: exit codes and artifacts") {
    const fs::path dir = scratch("run");
    const fs::path root = dir / "out";

    std::ofstream(dir / "bad.json") << "{\"version\": ";
    CHECK(cli("run " + (dir / "bad.json").string(), root) == exit_validation);
    CHECK_FALSE(fs::exists(root));

    json unknown = load(kGoldens / "cavity_stirap.json");
    unknown["extra"] = 1;
    dump(dir / "unknown.json", unknown);
    CHECK(cli("run " + (dir / "unknown.json").string(), root) == exit_validation);
    CHECK_FALSE(fs::exists(root));

    json diverge = load(kGoldens / "stop_retrieve.json");
    diverge["params"]["control"] = {{"shape", "constant"}, {"quantity", "rabi"}, {"value", 1e300}};
    dump(dir / "diverge.json", diverge);
    CHECK(cli("run " + (dir / "diverge.json").string(), root) == exit_numerical);
    CHECK((!fs::exists(root) || fs::is_empty(root)));

    CHECK(cli("run " + (kGoldens / "stop_retrieve.json").string(), root) == exit_ok);
    const fs::path out = root / "stop_retrieve";
    for (const char* f : {"field.csv", "spin.csv", "polariton.csv", "diagnostics.json", "summary.json", "margins.log"})
        CHECK(fs::exists(out / f));
    CHECK(first_line(out / "field.csv") == "t,z,re_E,im_E,re_E_dark,im_E_dark");
    CHECK(first_line(out / "spin.csv") == "t,z,re_S,im_S,re_P,im_P");
    CHECK(first_line(out / "polariton.csv") == "t,z,re_Psi,im_Psi,re_Phi,im_Phi");
    const json summary = load(out / "summary.json");
    CHECK(summary["schema"] == kSummaryVersion);
    CHECK(summary["metrics"].contains("solver.round_trip_amplitude_ratio"));
    CHECK(summary["metrics"]["polariton.margins_all_pass"] == 1.0);
    for (const auto& e : fs::directory_iterator(root)) CHECK(e.path().filename().string().find(".partial") == std::string::npos);

    CHECK(cli("list-scenarios", root) == exit_ok);
    CHECK(cli("frobnicate", root) == exit_validation);
    fs::remove_all(dir);
}

TEST_CASE("same scenario and seed give byte-identical summaries") {
    const fs::path dir = scratch("determinism");
    const ScenarioFile f = load_scenario(kGoldens / "memory_decoherence.json");
    const auto a = write_artifacts(f, execute(f), dir / "a");
    const auto b = write_artifacts(f, execute(f), dir / "b");
    CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
    CHECK(slurp(a / "decoherence.json") == slurp(b / "decoherence.json"));
    ScenarioFile g = f;
    g.seed += 1;
    CHECK(summary_json(g, execute(g)) != slurp(a / "summary.json"));

    const ScenarioFile s = load_scenario(kGoldens / "sudden_partial.json");
    CHECK(summary_json(s, execute(s)) == summary_json(s, execute(s)));
    fs::remove_all(dir);
}

TEST_CASE("verify: pristine goldens pass") {
    const auto rep = verify_goldens(kGoldens);
    for (const auto& e : rep.entries) {
        INFO(e.scenario);
        for (const auto& m : e.messages) INFO(m);
        CHECK(e.pass);
    }
    CHECK(rep.all_pass());
}

TEST_CASE("verify: doubled time step stays within tolerance") {
    const fs::path dir = scratch("perturbed");
    for (const char* name : {"stop_retrieve", "sudden_partial", "sudden_full", "roadblock"}) {
        json j = load(kGoldens / (std::string(name) + ".json"));
        // Unit Courant number: dt follows dz.
        if (j["params"].contains("nz")) j["params"]["nz"] = j["params"]["nz"].get<int>() / 2;
        if (j["params"].contains("dz")) j["params"]["dz"] = j["params"]["dz"].get<double>() * 2;
        dump(dir / (std::string(name) + ".json"), j);
        fs::copy_file(kGoldens / (std::string(name) + ".expected.json"), dir / (std::string(name) + ".expected.json"));
    }
    const auto rep = verify_goldens(dir);
    CHECK(rep.entries.size() == 4);
    for (const auto& e : rep.entries) {
        INFO(e.scenario);
        for (const auto& m : e.messages) INFO(m);
        CHECK(e.pass);
    }
    fs::remove_all(dir);
}

TEST_CASE("verify: corrupted or missing goldens fail by name") {
    const fs::path dir = scratch("corrupt");
    fs::copy_file(kGoldens / "cavity_stirap.json", dir / "cavity_stirap.json");
    json exp = load(kGoldens / "cavity_stirap.expected.json");
    exp["metrics"]["cavity.fidelity_X100"]["value"] = 0.5;
    dump(dir / "cavity_stirap.expected.json", exp);
    fs::copy_file(kGoldens / "stop_audit.json", dir / "stop_audit.json");

    const auto rep = verify_goldens(dir);
    REQUIRE(rep.entries.size() == 2);
    CHECK_FALSE(rep.all_pass());
    CHECK(rep.entries[0].scenario == "cavity_stirap");
    CHECK_FALSE(rep.entries[0].pass);
    REQUIRE(rep.entries[0].messages.size() == 1);
    CHECK(rep.entries[0].messages[0].find("cavity.fidelity_X100") != std::string::npos);
    CHECK(rep.entries[1].scenario == "stop_audit");
    CHECK_FALSE(rep.entries[1].pass);
    CHECK(rep.entries[1].messages[0].find("missing golden") != std::string::npos);

    CHECK(cli("verify " + dir.string(), dir / "out") == exit_mismatch);
    CHECK(cli("verify " + (dir / "nope").string(), dir / "out") == exit_validation);
    fs::remove_all(dir);
}

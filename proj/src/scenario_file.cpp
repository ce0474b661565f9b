#include "eitmem/scenario_file.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "eitmem/errors.hpp"

namespace eitmem {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool safe_relative(const std::string& s) {
    if (s.empty()) return false;
    const fs::path p(s);
    if (p.is_absolute()) return false;
    for (const auto& part : p)
        if (part == ".." || part == ".") return false;
    return true;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json parse_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(what + ": malformed JSON: " + e.what());
    }
}

}  // namespace

ScenarioFile parse_scenario(const json& j) {
    if (!j.is_object()) throw ValidationError("scenario: expected a JSON object");
    static const std::set<std::string> known{"version", "kind", "name", "output", "seed", "params"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ValidationError(k + ": unknown key");
    auto need_string = [&](const char* k) {
        if (!j.contains(k) || !j[k].is_string()) throw ValidationError(std::string(k) + ": required string");
        return j[k].get<std::string>();
    };
    ScenarioFile f;
    f.version = need_string("version");
    if (f.version != kScenarioVersion)
        throw ValidationError("version: expected '" + std::string(kScenarioVersion) + "', got '" + f.version + "'");
    f.kind = need_string("kind");
    f.name = need_string("name");
    f.output = j.contains("output") ? (j["output"].is_string() ? j["output"].get<std::string>() : "") : f.name;
    if (!safe_relative(f.output)) throw ValidationError("output: must be a plain relative directory name");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ValidationError("seed: expected a non-negative integer");
        f.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("params")) {
        if (!j["params"].is_object()) throw ValidationError("params: expected an object");
        f.params = j["params"];
    }
    validate_params(f);
    return f;
}

ScenarioFile load_scenario(const fs::path& path) {
    return parse_scenario(parse_text(read_file(path), path.string()));
}

std::string summary_json(const ScenarioFile& f, const ScenarioOutput& out) {
    ordered_json j;
    j["schema"] = kSummaryVersion;
    j["name"] = f.name;
    j["kind"] = f.kind;
    j["seed"] = f.seed;
    j["metrics"] = out.metrics;
    return j.dump(2) + "\n";
}

fs::path default_output_root() {
    if (const char* env = std::getenv("EITMEM_OUTPUT_ROOT"); env && *env) return env;
    return fs::current_path() / "eitmem-out";
}

fs::path write_artifacts(const ScenarioFile& f, const ScenarioOutput& out, const fs::path& root) {
    fs::create_directories(root);
    const fs::path target = root / f.output;
    fs::path stage = root / (f.output + ".partial");
    fs::remove_all(stage);
    try {
        fs::create_directories(stage);
        auto put = [&](const std::string& name, const std::string& content) {
            std::ofstream os(stage / name, std::ios::binary);
            os << content;
            if (!os) throw NumericalError("failed to write " + (stage / name).string());
        };
        for (const auto& a : out.files) put(a.filename, a.content);
        std::string log;
        for (const auto& line : out.margin_log) log += line + "\n";
        put("margins.log", log);
        put("summary.json", summary_json(f, out));
        fs::remove_all(target);
        fs::rename(stage, target);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(stage, ec);
        throw;
    }
    return target;
}

int run_scenario(const fs::path& path, const fs::path& root, std::ostream& log) {
    try {
        const ScenarioFile f = load_scenario(path);
        const ScenarioOutput out = execute(f);
        const fs::path dir = write_artifacts(f, out, root);
        log << "wrote " << dir.string() << "\n";
        for (const auto& [k, v] : out.metrics.items()) log << "  " << k << " = " << v.dump() << "\n";
        return exit_ok;
    } catch (const ValidationError& e) {
        log << "validation error: " << e.what() << "\n";
        return exit_validation;
    } catch (const std::exception& e) {
        log << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    }
}

bool VerifyReport::all_pass() const {
    for (const auto& e : entries)
        if (!e.pass) return false;
    return !entries.empty();
}

namespace {

bool is_expected_file(const fs::path& p) {
    const std::string s = p.filename().string();
    return s.size() > 14 && s.compare(s.size() - 14, 14, ".expected.json") == 0;
}

std::vector<fs::path> scenario_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ValidationError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json" && !is_expected_file(e.path()))
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

fs::path expected_path(const fs::path& scenario) {
    return scenario.parent_path() / (scenario.stem().string() + ".expected.json");
}

}  // namespace

VerifyReport verify_goldens(const fs::path& dir) {
    VerifyReport rep;
    const auto files = scenario_files(dir);
    if (files.empty()) {
        rep.entries.push_back({dir.string(), false, {"no golden scenarios found"}});
        return rep;
    }
    for (const auto& path : files) {
        VerifyEntry e;
        e.scenario = path.stem().string();
        try {
            const auto exp_path = expected_path(path);
            if (!fs::exists(exp_path)) throw ValidationError("missing golden " + exp_path.filename().string());
            const json exp = parse_text(read_file(exp_path), exp_path.string());
            if (!exp.is_object() || exp.value("schema", "") != kGoldenVersion || !exp.contains("metrics") ||
                !exp["metrics"].is_object())
                throw ValidationError(exp_path.filename().string() + ": not a golden expectation file");
            const ScenarioFile f = load_scenario(path);
            const ScenarioOutput out = execute(f);
            e.pass = true;
            for (const auto& [name, spec] : exp["metrics"].items()) {
                if (!spec.is_object() || !spec.contains("value") || !spec.contains("tol") || !spec["value"].is_number() ||
                    !spec["tol"].is_number())
                    throw ValidationError(exp_path.filename().string() + ": metric " + name + " needs numeric value and tol");
                if (!out.metrics.contains(name)) {
                    e.pass = false;
                    e.messages.push_back(name + ": not produced");
                    continue;
                }
                const double got = out.metrics[name].get<double>();
                const double want = spec["value"].get<double>(), tol = spec["tol"].get<double>();
                if (!(std::abs(got - want) <= tol)) {
                    e.pass = false;
                    std::ostringstream os;
                    os.precision(10);
                    os << name << ": got " << got << ", expected " << want << " +- " << tol;
                    e.messages.push_back(os.str());
                }
            }
        } catch (const std::exception& ex) {
            e.pass = false;
            e.messages.push_back(ex.what());
        }
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

void bless_goldens(const fs::path& dir, std::ostream& log) {
    for (const auto& path : scenario_files(dir)) {
        const ScenarioFile f = load_scenario(path);
        const ScenarioOutput out = execute(f);
        ordered_json j;
        j["schema"] = kGoldenVersion;
        ordered_json m = ordered_json::object();
        for (const auto& [name, v] : out.metrics.items()) {
            m[name]["value"] = v;
            m[name]["tol"] = out.tolerances[name];
        }
        j["metrics"] = m;
        std::ofstream(expected_path(path)) << j.dump(2) << "\n";
        log << "blessed " << path.filename().string() << "\n";
    }
}

}  // namespace eitmem

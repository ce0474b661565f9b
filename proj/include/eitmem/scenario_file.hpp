#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace eitmem {

inline constexpr const char* kScenarioVersion = "eitmem-scenario/1";
inline constexpr const char* kSummaryVersion = "eitmem-summary/1";
inline constexpr const char* kGoldenVersion = "eitmem-golden/1";

/// Process exit codes of the command-line front end.
enum ExitCode : int { exit_ok = 0, exit_mismatch = 1, exit_validation = 2, exit_numerical = 3 };

struct ScenarioFile {
    std::string version;
    std::string kind;
    std::string name;
    std::string output;  ///< directory below the output root
    std::uint64_t seed = 0;
    nlohmann::json params = nlohmann::json::object();
};

/// Strict parse: unknown keys and wrong types raise ValidationError. The
/// kind-specific block is checked by a dry parse of its parameters.
ScenarioFile parse_scenario(const nlohmann::json& j);
ScenarioFile load_scenario(const std::filesystem::path& path);

struct Artifact {
    std::string filename;
    std::string content;
};

struct ScenarioOutput {
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();  ///< name -> number
    /// Absolute tolerance per metric, used when writing golden expectations.
    nlohmann::ordered_json tolerances = nlohmann::ordered_json::object();
    void add(const std::string& name, double value, double tol);
    std::vector<Artifact> files;
    std::vector<std::string> margin_log;
};

struct ScenarioKindInfo {
    std::string kind;
    std::string description;
};

const std::vector<ScenarioKindInfo>& scenario_kinds();

/// Checks the kind-specific parameter block without running anything.
void validate_params(const ScenarioFile& f);
/// Runs the scenario and collects metrics and artifact contents in memory.
ScenarioOutput execute(const ScenarioFile& f);

/// summary.json content: deterministic for a fixed file and seed.
std::string summary_json(const ScenarioFile& f, const ScenarioOutput& out);

/// EITMEM_OUTPUT_ROOT if set, else ./eitmem-out.
std::filesystem::path default_output_root();

/// Writes all artifacts into a staging directory and renames it to
/// root / f.output. Nothing is left behind on failure.
std::filesystem::path write_artifacts(const ScenarioFile& f, const ScenarioOutput& out,
                                      const std::filesystem::path& root);

/// Full run command. Returns an ExitCode and reports to `log`.
int run_scenario(const std::filesystem::path& path, const std::filesystem::path& root, std::ostream& log);

struct VerifyEntry {
    std::string scenario;
    bool pass = false;
    std::vector<std::string> messages;
};

struct VerifyReport {
    std::vector<VerifyEntry> entries;
    bool all_pass() const;
};

/// Re-runs every <name>.json in `dir` and compares against <name>.expected.json.
VerifyReport verify_goldens(const std::filesystem::path& dir);
/// Writes <name>.expected.json next to each scenario from a fresh run, with
/// the tolerances declared by the scenario kind.
void bless_goldens(const std::filesystem::path& dir, std::ostream& log);

}  // namespace eitmem

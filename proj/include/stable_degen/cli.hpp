#pragma once

#include "stable_degen/degeneration.hpp"
#include "stable_degen/serialize.hpp"
#include "stable_degen/surface_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace stable_degen::cli {

inline constexpr const char* kToolName = "stable-degen";
inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitInvariant = 4,
    kExitFlags = 5,  // computation finished but a summary flag is false
};

inline const std::vector<std::string> kCommands = {"graphs", "surface",    "basis",      "gram",
                                                   "embed",  "degenerate", "robustness", "uniqueness"};

struct RunConfig {
    std::string command;
    io::Json source;            // the config as read; hashed for the manifest
    bool paper_normalization = false;

    int genus = 2;              // graphs, surface
    std::optional<surface::PantsGraph> graph;
    surface::FNCoordinates fn;
    surface::ThickThinConfig thick_thin;

    degen::FamilySpec family;   // model, m, truncation, product, samples, schedule
    std::vector<complex> t;     // basis, gram, embed: one per node, or a single shared value
    std::vector<complex> schedule_b;
    double eps2 = 0.0;          // robustness; 0 selects eps / 2
    double condition_cap = 0.0; // robustness; 0 disables the cap
    double tolerance = 1e-3;    // uniqueness
};

/// Parses and validates every parameter the command will use. Throws ConfigError.
RunConfig parse_config(const std::string& command, const io::Json& config, bool paper_normalization);

struct Artifact {
    std::string name;
    std::string content;
};

struct RunResult {
    int exit_code = kExitOk;
    std::string message;
    std::vector<Artifact> artifacts;  // run.json last
};

/// Computes in memory; artifacts are returned rather than written.
RunResult run_config(const RunConfig& cfg);

/// stable-degen <command> --config <path> --out <dir> [--paper-normalization]
int main_entry(int argc, char** argv);

}  // namespace stable_degen::cli

#pragma once

#include "onestep/activation.hpp"
#include "onestep/config.hpp"
#include "onestep/theory.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace onestep {

enum class Command { simulate, theory, taustar, spectrum, sweep, validate };
Command parse_command(std::string_view name);
std::string_view command_name(Command cmd);

const std::vector<std::string>& recipe_names();
// Built-in settings for a recipe (axis and values included).
RunConfig recipe_defaults(std::string_view recipe);

// CSV headers.
const std::vector<std::string>& risk_columns();
const std::vector<std::string>& theory_columns();
const std::vector<std::string>& spike_columns();
const std::vector<std::string>& histogram_columns();
const std::vector<std::string>& taustar_columns();
const std::vector<std::string>& largelr_columns();
const std::vector<std::string>& ck_spike_columns();

struct Models {
    ActivationProfile student;
    TeacherModel teacher;
    std::vector<std::string> notes;  // centering shifts, assumption flags
    bool outside_assumptions = false;
};

// Student and teacher from the config; centered when cfg.center is set.
Models build_models(const RunConfig& cfg);
TheoryParams theory_params(const Models& m);

struct ReplicaPlan {
    std::vector<int> steps{0, 1};  // ascending step counts to measure at
    bool risk = true;
    bool ge = false;  // Gaussian-equivalent fit next to the CK fit
    bool spectrum = false;
    bool keep_singular_values = false;
};

struct StepMeasurement {
    int step = 0;
    double risk = 0.0;
    double risk_ge = 0.0;
    double risk_ge_closed = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double overlap = 0.0;  // |<u1, beta*>|^2
};

struct ReplicaMeasurement {
    std::uint64_t seed = 0;
    std::vector<StepMeasurement> steps;
    std::vector<double> singular_values;  // at the last measured step
};

// One replica at one grid point; streams keyed by (seed, 0, role).
ReplicaMeasurement measure_replica(const RunConfig& point, const Models& models, std::uint64_t seed,
                                   const ReplicaPlan& plan);

struct RunOptions {
    std::filesystem::path out_dir = ".";
    int workers = 1;
    std::ostream* log = nullptr;
};

struct RunResult {
    std::vector<std::filesystem::path> outputs;
    std::filesystem::path manifest;
    std::vector<std::string> notes;
};

// Writes the command's CSV files and manifest.json into out_dir.
RunResult run(const RunConfig& cfg, Command cmd, const RunOptions& opt);

}  // namespace onestep

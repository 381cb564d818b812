#pragma once

#include "onestep/simulate.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace onestep {

// Everything a CLI run needs. Flat keys, dotted sections:
//   n d N eta_bar alpha lambda seed replicas n_test
//   quadrature.order
//   model.student model.teacher model.sigma_eps model.center
//   train.steps
//   sweep.recipe sweep.axis sweep.values
//   spectrum.bins spectrum.spike_buffer
//   largelr.r largelr.penalty_exponent
struct RunConfig {
    ExperimentConfig exp;
    std::string student = "tanh";
    std::string teacher = "relu";
    double sigma_eps = 0.0;
    bool center = true;
    int steps = 1;
    int quadrature_order = 200;
    std::string recipe = "custom";
    std::string axis;
    std::vector<double> values;
    int bins = 60;
    double spike_buffer = 5.0;
    double oracle_r = 0.25;
    double penalty_exponent = 0.5;

    // Keys that were not given and took their default value.
    std::vector<std::string> defaulted;

    void validate() const;  // throws ConfigError
};

enum class ConfigFormat { detect, keyvalue, json };

const std::vector<std::string>& config_keys();
const std::vector<std::string>& sweep_axes();

// Parses text on top of base (or on top of the defaults, in which case n, d
// and N are required). Unknown keys are reported all at once. A manifest
// JSON is accepted: its "config" object is used.
RunConfig parse_config(std::string_view text, ConfigFormat format = ConfigFormat::detect,
                       const RunConfig* base = nullptr);
RunConfig load_config(const std::filesystem::path& path, const RunConfig* base = nullptr);

// Normalized key = value text, one key per line, sorted as in config_keys().
std::string format_config(const RunConfig& cfg);
// Same content as a JSON object string.
std::string config_json(const RunConfig& cfg);

// Applies an axis value: psi1 / psi2 set n / N from d.
void apply_axis(RunConfig& cfg, std::string_view axis, double value);

// %.17g
std::string format_double(double v);

}  // namespace onestep

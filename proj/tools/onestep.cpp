// Command-line front end: onestep <command> [--recipe R] [--config FILE] [--out DIR] [--workers K] [--seed S]

#include "onestep/errors.hpp"
#include "onestep/harness.hpp"
#include "onestep/manifest.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Flags {
    std::string config;
    std::string recipe;
    std::string out = ".";
    int workers = 1;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

onestep::RunConfig resolve_config(const Flags& f) {
    using namespace onestep;
    RunConfig cfg;
    if (!f.recipe.empty()) {
        const RunConfig base = recipe_defaults(f.recipe);
        cfg = f.config.empty() ? base : load_config(f.config, &base);
    } else if (!f.config.empty()) {
        // A recipe named in the file supplies the defaults; otherwise n, d, N are required.
        const RunConfig probe_base = recipe_defaults("custom");
        const RunConfig probe = load_config(f.config, &probe_base);
        if (probe.recipe != "custom") {
            const RunConfig base = recipe_defaults(probe.recipe);
            cfg = load_config(f.config, &base);
        } else {
            cfg = load_config(f.config);
        }
    } else {
        throw ConfigError("either --config or --recipe is required");
    }
    if (f.seed) cfg.exp.seed = *f.seed;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"One-step feature learning laboratory"};
    app.set_version_flag("--version", onestep::version_string());
    app.require_subcommand(1);

    Flags flags;
    const char* descriptions[][2] = {
        {"simulate", "Monte Carlo ridge risk before and after training"},
        {"theory", "Closed-form risk improvement and its ingredients"},
        {"taustar", "Smoothed activation mismatch and its minimizer"},
        {"spectrum", "Singular values of the trained first layer"},
        {"sweep", "Run a recipe or a custom axis sweep"},
        {"validate", "Check a configuration and print it normalized"},
    };
    for (const auto& [name, desc] : descriptions) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", flags.config, "Configuration file (key = value or JSON)");
        sub->add_option("--recipe", flags.recipe, "Built-in recipe supplying defaults")
            ->check(CLI::IsMember(onestep::recipe_names()));
        sub->add_option("--out", flags.out, "Output directory");
        sub->add_option("--workers", flags.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", flags.seed, "Base seed; replica k uses seed + k");
        sub->add_flag("--quiet", flags.quiet, "Suppress notes on stderr");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const auto* sub = app.get_subcommands().front();
    try {
        const auto cmd = onestep::parse_command(sub->get_name());
        const auto cfg = resolve_config(flags);
        if (cmd == onestep::Command::validate) {
            std::cout << onestep::format_config(cfg);
            for (const auto& key : cfg.defaulted) std::cout << "# default: " << key << "\n";
            return 0;
        }
        onestep::RunOptions opt;
        opt.out_dir = flags.out;
        opt.workers = flags.workers;
        opt.log = flags.quiet ? nullptr : &std::cerr;
        const auto res = onestep::run(cfg, cmd, opt);
        for (const auto& p : res.outputs) std::cout << p.string() << "\n";
        std::cout << res.manifest.string() << "\n";
        return 0;
    } catch (const onestep::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const onestep::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

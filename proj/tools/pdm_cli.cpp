#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "pdm/cli.hpp"
#include "pdm/errors.hpp"

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool unsafe = false;
    std::optional<int> truncation;
    std::optional<int> kmax;
    std::optional<double> tol;
};

void add_common(CLI::App* sub, Flags& f, bool needs_config) {
    auto* c = sub->add_option("--config", f.config, "model/config file");
    if (needs_config) c->required();
    sub->add_option("--out", f.out, "output directory (default $PDM_OUT_DIR or pdm_out)");
    sub->add_option("--seed", f.seed, "random seed for the campaign stage");
    sub->add_flag("--unsafe-thresholds", f.unsafe, "run past the smallness checks");
    sub->add_option("--truncation", f.truncation, "override N")->check(CLI::PositiveNumber);
    sub->add_option("--kmax", f.kmax, "override K_max")->check(CLI::NonNegativeNumber);
    sub->add_option("--tol", f.tol, "iteration stop tolerance relative to Delta E")->check(CLI::PositiveNumber);
}

pdm::RunConfig load(const Flags& f) {
    pdm::RunConfig c = f.config.empty() ? pdm::RunConfig{} : pdm::read_config(f.config);
    if (f.truncation) c.model.truncation = *f.truncation;
    if (f.kmax) c.model.k_max = *f.kmax;
    if (f.tol) c.tol = *f.tol;
    if (f.seed) c.seed = *f.seed;
    if (f.unsafe) c.unsafe = true;
    c.out_dir = !f.out.empty() ? f.out : !c.out_dir.empty() ? c.out_dir : pdm::default_out_dir();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"progressive diagonalization runner"};
    app.require_subcommand(1);
    Flags f;
    auto* run = app.add_subcommand("run", "run the stages enabled in the config");
    add_common(run, f, true);
    auto* constants = app.add_subcommand("verify-constants", "scalar inequalities of the iteration at x1 = pi/8");
    add_common(constants, f, false);
    auto* gaps = app.add_subcommand("gap-report", "gap sums with tail enclosures");
    add_common(gaps, f, true);
    auto* thresholds = app.add_subcommand("thresholds", "smallness conditions and constants");
    add_common(thresholds, f, true);
    auto* simulate = app.add_subcommand("simulate", "propagate and record tail norms");
    add_common(simulate, f, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : pdm::exit_config;
    }

    pdm::RunConfig config;
    try {
        config = load(f);
    } catch (const pdm::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return pdm::exit_config;
    }
    if (constants->parsed()) config.stages = {"constants"};
    if (gaps->parsed()) config.stages = {"gaps"};
    if (thresholds->parsed()) config.stages = {"gaps", "thresholds"};
    if (simulate->parsed()) config.stages = {"simulate"};

    const pdm::RunOutcome out = pdm::run(config);
    std::cout << "report: " << config.out_dir << "/report.json\n";
    if (out.exit_code != pdm::exit_pass)
        std::cerr << "stage " << out.failed_stage << " failed (exit " << out.exit_code << "): " << out.failure << '\n';
    return out.exit_code;
}

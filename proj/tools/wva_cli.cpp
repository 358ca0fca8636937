// wva:  weak-value-amplification hypothesis-testing CLI.
//
// Subcommands emit CSV:
//   density     pointer densities on an x grid
//   errors      error probabilities / power over optional sweeps
//   contour     amplification-ratio grid over |A_w| x {g or c}
//   montecarlo  closed forms vs sampling oracle
//   appendixc   stationary family of the loss-accounting rule
//
// Exit codes: 0 success, 2 usage error, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wva/wva.hpp"

namespace {

struct Flags {
    double sigma = 1.0;
    double g = 1.5;
    double weak_value_re = 0.0;
    double weak_value_im = 5.0;
    std::string i_state;
    std::string f_state;
    double c = 0.0;
    bool c_given = false;
    double alpha = 0.05;
    double noise_s = 0.0;
    std::size_t samples = 1000000;
    std::uint64_t seed = 12345;
    std::string out;
    std::vector<std::string> sweeps;
};

void add_shared_flags(CLI::App* cmd, Flags& fl) {
    cmd->add_option("--sigma", fl.sigma, "Probe width sigma > 0");
    cmd->add_option("--g", fl.g, "Coupling strength");
    cmd->add_option("--weak-value-re", fl.weak_value_re,
                    "Re A_w of the constructed postselection");
    cmd->add_option("--weak-value-im", fl.weak_value_im,
                    "Im A_w of the constructed postselection");
    cmd->add_option("--i-state", fl.i_state,
                    "Preselected state as re+,im+,re-,im- (auto-normalized)");
    cmd->add_option("--f-state", fl.f_state,
                    "Explicit final state as re+,im+,re-,im- (overrides the "
                    "weak-value flags)");
    cmd->add_option("--c", fl.c, "Decision threshold on |x|/sigma")
        ->each([&fl](const std::string&) { fl.c_given = true; });
    cmd->add_option("--alpha", fl.alpha,
                    "Significance level (sets c when --c is absent)");
    cmd->add_option("--noise-s", fl.noise_s,
                    "Additive Gaussian readout noise s >= 0");
    cmd->add_option("--samples", fl.samples, "Monte Carlo sample count");
    cmd->add_option("--seed", fl.seed, "Monte Carlo seed");
    cmd->add_option("--out", fl.out,
                    "Output file (default stdout; relative paths resolve "
                    "under $WVA_OUT_DIR when set)");
    cmd->add_option("--sweep", fl.sweeps,
                    "Sweep axis as <axis>:<start>:<stop>:<steps>, axis in "
                    "{g, c, aw, s}; repeat for a second axis");
}

wva::Scenario to_scenario(const Flags& fl) {
    wva::Scenario sc;
    if (!fl.i_state.empty()) sc.i_state = wva::parse_state(fl.i_state);
    if (!fl.f_state.empty()) sc.f_state = wva::parse_state(fl.f_state);
    sc.weak_value_target = {fl.weak_value_re, fl.weak_value_im};
    sc.sigma = fl.sigma;
    sc.g = fl.g;
    sc.s = fl.noise_s;
    if (fl.c_given) sc.c = fl.c;
    sc.alpha = fl.alpha;
    sc.samples = fl.samples;
    sc.seed = fl.seed;
    for (const auto& text : fl.sweeps)
        sc.sweeps.push_back(wva::parse_sweep(text));
    if (sc.sweeps.size() > 2)
        throw std::invalid_argument("at most 2 sweep axes are supported");
    return sc;
}

std::filesystem::path resolve_out(const std::string& out) {
    std::filesystem::path path(out);
    if (path.is_relative())
        if (const char* dir = std::getenv("WVA_OUT_DIR"))
            path = std::filesystem::path(dir) / path;
    return path;
}

int run(const std::string& command, const Flags& fl) {
    const wva::Scenario sc = to_scenario(fl);

    std::ostringstream body;
    if (command == "density")
        wva::cmd_density(sc, body);
    else if (command == "errors")
        wva::cmd_errors(sc, body);
    else if (command == "contour")
        wva::cmd_contour(sc, body);
    else if (command == "montecarlo")
        wva::cmd_montecarlo(sc, body);
    else
        wva::cmd_appendixc(sc, body);

    if (fl.out.empty()) {
        std::cout << body.str();
    } else {
        const auto path = resolve_out(fl.out);
        std::ofstream file(path);
        if (!file)
            throw std::invalid_argument("cannot open output file: " +
                                        path.string());
        file << body.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak-value-amplification hypothesis-testing toolkit"};
    app.require_subcommand(1);

    Flags fl;
    const char* names[] = {"density", "errors", "contour", "montecarlo",
                           "appendixc"};
    const char* descs[] = {
        "Pointer densities over an x grid (CSV)",
        "Error probabilities and power, with optional sweeps (CSV)",
        "Amplification-ratio grid over |A_w| x {g or c} (CSV)",
        "Closed forms vs the sampling oracle (CSV)",
        "Stationary family of the loss-accounting rule (CSV)"};
    for (int k = 0; k < 5; ++k)
        add_shared_flags(app.add_subcommand(names[k], descs[k]), fl);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        return run(app.get_subcommands().front()->get_name(), fl);
    } catch (const wva::QuadratureFailure& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const wva::NoConvergence& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const wva::DivisionDegenerate& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const wva::EnvelopeViolation& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

// bosefeed: reproduce the feedback experiments and validations from a
// JSON config.  Subcommands: fig2, fig3, validate, single.
//
// Exit codes: 0 success, 2 config error, 3 numerical-tolerance failure,
// 4 capacity cap.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <bosefeed/bosefeed.hpp>
#include <bosefeed/experiments.hpp>
#include <bosefeed/runconfig.hpp>
#include <bosefeed/validation.hpp>

namespace {

using namespace bosefeed;

RunConfig load_config(const std::string& path, const std::string& experiment) {
    RunConfig rc;
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open config file: " + path);
        json j;
        try {
            is >> j;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
        rc = parse_config(j);
    }
    rc.experiment = experiment;
    rc.validate();
    return rc;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream os(out_path, std::ios::binary);
        if (!os) throw ConfigError("cannot open output file: " + out_path);
        os << text;
    }
}

int run_figure(const RunConfig& rc, const std::string& out_path) {
    const bool fig2 = rc.experiment == "fig2";
    const auto rows = fig2 ? run_fig2(rc) : run_fig3(rc);
    const std::string header = fig2 ? "N,sigma_over_dp0,var_p_scaled"
                                    : "N,sigma_over_dp0,uncertainty_product_scaled";
    std::string text = header + "\n";
    for (const auto& r : rows)
        text += std::to_string(r.n_atoms) + "," + format_g17(r.sigma_over_dp0) + "," +
                format_g17(r.value) + "\n";
    emit(text, out_path);
    return 0;
}

int run_validation(const RunConfig& rc, const std::string& out_path,
                   bool flip_kick_sign) {
    ValidationOptions opt;
    opt.omega = rc.omega;
    opt.flip_kick_sign = flip_kick_sign;
    const auto reports = run_acceptance(opt);
    const json j = report_to_json(reports);
    emit(j.dump(2) + "\n", out_path);
    for (const auto& rep : reports)
        std::fprintf(stderr, "[%s] criterion %d: %s (%.2fs)\n",
                     rep.passed() ? "pass" : "FAIL", rep.id, rep.title.c_str(),
                     rep.seconds);
    return j.at("passed").get<bool>() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed correlation-function simulation of collective feedback "
                 "on a trapped Bose gas"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    bool print_config = false;
    bool flip_kick_sign = false;

    for (const std::string name : {"fig2", "fig3", "validate", "single"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--out", out_path, "output path (default: stdout)");
        sub->add_flag("--print-config", print_config,
                      "print the fully-defaulted config and exit");
        if (name == "validate")
            sub->add_flag("--debug-flip-kick-sign", flip_kick_sign,
                          "perturb the kick sign (harness sanity; must fail)");
    }

    try {
        app.parse(argc, argv);
        const std::string experiment = app.get_subcommands().front()->get_name();
        const RunConfig rc = load_config(config_path, experiment);

        if (print_config) {
            std::cout << to_json(rc).dump(2) << "\n";
            return 0;
        }
        const std::string out = out_path.empty() ? rc.out_path : out_path;
        if (experiment == "fig2" || experiment == "fig3") return run_figure(rc, out);
        if (experiment == "single") {
            emit(run_single(rc).dump(2) + "\n", out);
            return 0;
        }
        return run_validation(rc, out, flip_kick_sign);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const CapacityError& e) {
        std::fprintf(stderr, "capacity error: %s\n", e.what());
        return 4;
    } catch (const ToleranceError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bosefeed/config.hpp"
#include "bosefeed/errors.hpp"

namespace bosefeed {

using nlohmann::json;

struct NePolicy {
    enum class Mode { equal_n, fixed };
    Mode mode = Mode::equal_n;
    int value = 0;  // for fixed

    int resolve(int n_atoms) const {
        return mode == Mode::equal_n ? n_atoms : value;
    }
};

struct OracleConfig {
    int n_modes = 16;
    int a_nodes = 201;
    long cap = 5000;
    double trace_tol = 1e-8;
    double leak_tol = 1e-6;
};

// One structured document drives every experiment; all defaults are explicit
// in --print-config.
struct RunConfig {
    std::string experiment = "fig2";  // fig2 | fig3 | validate | single
    double omega = 1.0;
    std::vector<double> sigma_over_dp0 = {1.0, 1.5, 2.0};
    std::vector<int> n_atoms = {1, 2, 3, 4, 5, 6, 8, 10, 15, 20, 30, 50, 100};
    double s = -1.0;
    double a0 = 0.0;
    NePolicy n_e_policy;
    int dim = 40;
    OracleConfig oracle;
    QuadSpec quad;
    std::string out_path;

    void validate() const {
        if (experiment != "fig2" && experiment != "fig3" &&
            experiment != "validate" && experiment != "single")
            throw ConfigError("unknown experiment: " + experiment);
        if (!(omega > 0.0)) throw ConfigError("omega must be > 0");
        if (sigma_over_dp0.empty()) throw ConfigError("sigma_over_dp0 list is empty");
        for (double s_ : sigma_over_dp0)
            if (!(s_ > 0.0)) throw ConfigError("sigma_over_dp0 entries must be > 0");
        if (n_atoms.empty()) throw ConfigError("n_atoms list is empty");
        for (int n : n_atoms)
            if (n < 1) throw ConfigError("n_atoms entries must be >= 1");
        if (dim < 2) throw ConfigError("dim must be >= 2");
        if (n_e_policy.mode == NePolicy::Mode::fixed && n_e_policy.value < 1)
            throw ConfigError("fixed N_e must be >= 1");
        if (oracle.n_modes < 2) throw ConfigError("oracle.n_modes must be >= 2");
        if (oracle.a_nodes < 32) throw ConfigError("oracle.a_nodes must be >= 32");
        FeedbackConfig probe;
        probe.sigma = 1.0;
        probe.n_e = 1;
        probe.quad = quad;
        probe.validate();
    }

    FeedbackConfig feedback_for(int n, double sigma) const {
        FeedbackConfig cfg;
        cfg.sigma = sigma;
        cfg.response = {s, a0};
        cfg.n_e = n_e_policy.resolve(n);
        cfg.quad = quad;
        return cfg;
    }
};

inline json to_json(const RunConfig& c) {
    json j;
    j["experiment"] = c.experiment;
    j["omega"] = c.omega;
    j["sigma_over_dp0"] = c.sigma_over_dp0;
    j["n_atoms"] = c.n_atoms;
    j["s"] = c.s;
    j["A0"] = c.a0;
    if (c.n_e_policy.mode == NePolicy::Mode::equal_n)
        j["N_e_policy"] = {{"mode", "equal-N"}};
    else
        j["N_e_policy"] = {{"mode", "fixed"}, {"value", c.n_e_policy.value}};
    j["dim"] = c.dim;
    j["oracle"] = {{"n_modes", c.oracle.n_modes},
                   {"a_nodes", c.oracle.a_nodes},
                   {"cap", c.oracle.cap},
                   {"trace_tol", c.oracle.trace_tol},
                   {"leak_tol", c.oracle.leak_tol}};
    j["quad"] = {{"n_A", c.quad.n_a},
                 {"n_Aprime", c.quad.n_aprime},
                 {"n_Adoubleprime", c.quad.n_adoubleprime},
                 {"n_k", c.quad.n_k},
                 {"n_alpha", c.quad.n_alpha},
                 {"range_mult", c.quad.range_mult},
                 {"alpha_range", c.quad.alpha_range}};
    j["out_path"] = c.out_path;
    return j;
}

inline RunConfig parse_config(const json& j) {
    RunConfig c;
    try {
        if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
        if (j.contains("omega")) c.omega = j.at("omega").get<double>();
        if (j.contains("sigma_over_dp0"))
            c.sigma_over_dp0 = j.at("sigma_over_dp0").get<std::vector<double>>();
        if (j.contains("n_atoms")) c.n_atoms = j.at("n_atoms").get<std::vector<int>>();
        if (j.contains("s")) c.s = j.at("s").get<double>();
        if (j.contains("A0")) c.a0 = j.at("A0").get<double>();
        if (j.contains("N_e_policy")) {
            const auto& p = j.at("N_e_policy");
            const std::string mode = p.at("mode").get<std::string>();
            if (mode == "equal-N") {
                c.n_e_policy.mode = NePolicy::Mode::equal_n;
            } else if (mode == "fixed") {
                c.n_e_policy.mode = NePolicy::Mode::fixed;
                c.n_e_policy.value = p.at("value").get<int>();
            } else {
                throw ConfigError("N_e_policy.mode must be 'equal-N' or 'fixed'");
            }
        }
        if (j.contains("dim")) c.dim = j.at("dim").get<int>();
        if (j.contains("oracle")) {
            const auto& o = j.at("oracle");
            if (o.contains("n_modes")) c.oracle.n_modes = o.at("n_modes").get<int>();
            if (o.contains("a_nodes")) c.oracle.a_nodes = o.at("a_nodes").get<int>();
            if (o.contains("cap")) c.oracle.cap = o.at("cap").get<long>();
            if (o.contains("trace_tol")) c.oracle.trace_tol = o.at("trace_tol").get<double>();
            if (o.contains("leak_tol")) c.oracle.leak_tol = o.at("leak_tol").get<double>();
        }
        if (j.contains("quad")) {
            const auto& q = j.at("quad");
            if (q.contains("n_A")) c.quad.n_a = q.at("n_A").get<int>();
            if (q.contains("n_Aprime")) c.quad.n_aprime = q.at("n_Aprime").get<int>();
            if (q.contains("n_Adoubleprime"))
                c.quad.n_adoubleprime = q.at("n_Adoubleprime").get<int>();
            if (q.contains("n_k")) c.quad.n_k = q.at("n_k").get<int>();
            if (q.contains("n_alpha")) c.quad.n_alpha = q.at("n_alpha").get<int>();
            if (q.contains("range_mult")) c.quad.range_mult = q.at("range_mult").get<double>();
            if (q.contains("alpha_range")) c.quad.alpha_range = q.at("alpha_range").get<double>();
        }
        if (j.contains("out_path")) c.out_path = j.at("out_path").get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace bosefeed

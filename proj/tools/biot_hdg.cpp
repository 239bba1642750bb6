#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "biot_hdg/biot_hdg.hpp"

namespace {

using namespace biot_hdg;

/// Options that can also come from a key=value config file. Flags given on
/// the command line win over file values.
class ConfigurableOptions {
public:
    explicit ConfigurableOptions(CLI::App* app) : app_(app) {
        app_->add_option("--config", config_path_, "key=value config file (command-line flags override)");
    }

    template <class T>
    CLI::Option* add(const std::string& key, T& target, const std::string& help) {
        CLI::Option* opt = app_->add_option("--" + key, target, help)->capture_default_str();
        setters_[key] = {opt, [&target, key](const std::string& value) {
                             if (!CLI::detail::lexical_conversion<T, T>({value}, target))
                                 throw CLI::ConversionError(key, value);
                         }};
        return opt;
    }

    void apply_config() const {
        if (config_path_.empty()) return;
        for (const auto& [key, value] : read_config(config_path_)) {
            const auto it = setters_.find(key);
            if (it == setters_.end()) throw IoError("unknown config key '" + key + "' in " + config_path_);
            if (it->second.first->count() == 0) it->second.second(value);
        }
    }

private:
    CLI::App* app_;
    std::string config_path_;
    std::map<std::string, std::pair<CLI::Option*, std::function<void(const std::string&)>>> setters_;
};

Variant parse_variant(const std::string& s) {
    if (s == "standard") return Variant::standard;
    if (s == "relaxed") return Variant::relaxed;
    throw CLI::ValidationError("--variant", "expected standard or relaxed");
}

StabilizationLength parse_length(const std::string& s) {
    if (s == "diameter") return StabilizationLength::diameter;
    if (s == "jacobian") return StabilizationLength::jacobian_root;
    throw CLI::ValidationError("--length", "expected diameter or jacobian");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"HDG solver for quasi-static Biot consolidation"};
    app.require_subcommand(1);

    // converge
    CLI::App* converge = app.add_subcommand("converge", "convergence study on the manufactured solution");
    ConfigurableOptions conv_opts(converge);
    ConvergenceOptions conv;
    std::string conv_variant = "standard", conv_length = "jacobian", conv_out;
    double conv_dt = 0.0;
    conv_opts.add("k", conv.k, "polynomial degree (1..3)")->check(CLI::Range(1, 3));
    conv_opts.add("levels", conv.levels, "number of meshes starting at h=1/first-n")->check(CLI::Range(1, 6));
    conv_opts.add("first-n", conv.first_n, "subdivisions of the coarsest mesh");
    conv_opts.add("bdf", conv.bdf, "BDF steps (1..5)")->check(CLI::Range(1, 5));
    conv_opts.add("variant", conv_variant, "standard or relaxed");
    conv_opts.add("tau0", conv.tau0, "stabilization constant (tau = tau0 k^2)");
    conv_opts.add("lambda", conv.lambda, "Lame lambda");
    conv_opts.add("kappa", conv.kappa, "permeability");
    conv_opts.add("length", conv_length, "stabilization length: diameter or jacobian");
    conv_opts.add("dt", conv_dt, "fixed time step (0: dt = h^max((k+1)/3,1))");
    conv_opts.add("out", conv_out, "CSV output path (stdout if empty)");

    // barry-mercer
    CLI::App* bm_cmd = app.add_subcommand("barry-mercer", "pulsating point source benchmark");
    ConfigurableOptions bm_opts(bm_cmd);
    BarryMercerOptions bm;
    std::string bm_prefix = "barry_mercer";
    std::vector<double> snapshots = bm.snapshots;
    bool deformed = false;
    bm_opts.add("k", bm.k, "polynomial degree");
    bm_opts.add("n", bm.n, "mesh subdivisions per side");
    bm_opts.add("bdf", bm.bdf, "BDF steps");
    bm_opts.add("kappa", bm.config.kappa, "permeability");
    bm_opts.add("snapshots", snapshots, "normalized times beta*t to record");
    bm_opts.add("out-prefix", bm_prefix, "prefix for VTK and diagonal CSV files");
    bm_cmd->add_flag("--deformed", deformed, "write the deformed configuration in VTK files");

    // oscillation-check
    CLI::App* osc_cmd = app.add_subcommand("oscillation-check", "one backward-Euler step at low permeability");
    ConfigurableOptions osc_opts(osc_cmd);
    OscillationOptions osc;
    std::string osc_out;
    osc_opts.add("n", osc.n, "mesh subdivisions per side");
    osc_opts.add("kappa", osc.kappa, "permeability");
    osc_opts.add("dt", osc.dt, "time step");
    osc_opts.add("threshold", osc.threshold, "allowed undershoot relative to the maximum");
    osc_opts.add("out", osc_out, "CSV path for the diagonal profile");

    CLI11_PARSE(app, argc, argv);

    try {
        if (converge->parsed()) {
            conv_opts.apply_config();
            conv.variant = parse_variant(conv_variant);
            conv.length = parse_length(conv_length);
            if (conv_dt > 0.0) conv.dt = conv_dt;
            const ErrorReport report = run_convergence_study(conv, [](const ErrorRow& r) {
                std::fprintf(stderr, "h=1/%d  steps=%d  triple=%.4e  l2_u=%.4e  l2_p=%.4e\n", r.n, r.steps,
                             r.err.triple, r.err.l2_u, r.err.l2_p);
            });
            if (conv_out.empty())
                write_csv(std::cout, report);
            else
                emit_csv(report, conv_out);
        } else if (bm_cmd->parsed()) {
            bm_opts.apply_config();
            bm.snapshots = snapshots;
            const auto res = run_barry_mercer(bm, [&](const Discretization& disc, const BarryMercerSnapshot& s) {
                char tag[64];
                std::snprintf(tag, sizeof tag, "_that%.4f", s.t_hat);
                emit_vtk(disc, s.state.x, bm_prefix + tag + ".vtk", deformed);
                emit_line_samples(s.diagonal, bm_prefix + tag + "_diagonal.csv");
            });
            std::printf("beta = %.6f, dt = %.6e\n", res.beta, res.dt);
            for (const auto& s : res.snapshots)
                std::printf("t_hat = %.6f  t = %.6e  p_h(x0) = %.6e\n", s.t_hat, s.t, s.source_pressure);
        } else if (osc_cmd->parsed()) {
            osc_opts.apply_config();
            const auto res = oscillation_check(osc);
            if (!osc_out.empty()) emit_line_samples(res.diagonal, osc_out);
            std::printf("min p = %.6e  max p = %.6e  min/max = %.4f  %s\n", res.min_pressure, res.max_pressure,
                        res.ratio, res.passed ? "PASS" : "FAIL");
            return res.passed ? 0 : 2;
        }
    } catch (const biot_hdg::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

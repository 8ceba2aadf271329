// qcavity: excitation dynamics of a two-level atom between two atomic Bragg
// mirrors on a 1D waveguide, solved by cross-validating methods.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 tolerance failure (compare).
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include <qcavity/cli_io.hpp>

namespace {

using namespace qcavity;

struct CommonArgs {
    std::string config_path, out_path, format = "csv", svg_path;
    std::string preset_label, method = "auto";
    int n_atoms = 100;
    double tau = 0.0, phi = 0.0, gamma0 = 0.0;
    double gamma_rate = 0.0, distance_m = 0.0, vg_mps = 0.0;
    double t_max = 3.0;
    std::size_t points = 2001;
    double dt = 0.0;
    int k_max = 0;
    bool extended = false;
    int pole_count = 64;
    std::uint64_t seed = 0;
    bool reproducible = false;
};

void add_common_flags(CLI::App* cmd, CommonArgs& a, bool with_params = true) {
    cmd->add_option("--config", a.config_path, "JSON config file (flags override it)");
    cmd->add_option("--out", a.out_path, "output path (default stdout)");
    cmd->add_option("--format", a.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--svg", a.svg_path, "also write an SVG plot here");
    cmd->add_option("--seed", a.seed, "random seed");
    cmd->add_flag("--reproducible", a.reproducible, "omit timestamps from output");
    if (with_params) {
        cmd->add_option("--preset", a.preset_label, "cesium|quantum_dot|superconducting");
        cmd->add_option("--n-atoms", a.n_atoms, "atoms per mirror N");
        cmd->add_option("--tau", a.tau, "gamma d / v_g");
        cmd->add_option("--gamma-rate", a.gamma_rate, "gamma in 1/s (with --distance-m, --vg-mps)");
        cmd->add_option("--distance-m", a.distance_m, "mirror separation d in meters");
        cmd->add_option("--vg-mps", a.vg_mps, "group velocity in m/s");
        cmd->add_option("--phi", a.phi, "cavity phase offset (theta = pi + phi)");
        cmd->add_option("--gamma0", a.gamma0, "environment decay gamma0/gamma");
    }
}

// Flags override config-file values only when actually given on the line.
RunConfig build_config(const CommonArgs& a, CLI::App* cmd) {
    RunConfig cfg;
    bool file_has_n = false;
    if (!a.config_path.empty()) {
        std::ifstream in(a.config_path);
        if (!in) throw ConfigError("cannot open config file " + a.config_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
        cfg = parse_run_config(j);
        file_has_n = j.contains("params") && (j["params"].contains("n_atoms") ||
                                              j["params"].contains("preset"));
    }
    auto has = [&](const char* name) {
        const CLI::Option* o = cmd->get_option_no_throw(name);
        return o != nullptr && o->count() > 0;
    };

    if (has("--preset")) {
        cfg.preset_label = a.preset_label;
        cfg.params = preset(a.preset_label).params(has("--n-atoms") ? a.n_atoms : 100);
    } else if (cfg.preset_label && has("--n-atoms")) {
        cfg.params = preset(*cfg.preset_label).params(a.n_atoms);
    } else {
        if (has("--n-atoms"))
            cfg.params.n_atoms = a.n_atoms;
        else if (!file_has_n)
            cfg.params.n_atoms = a.n_atoms;  // documented default of 100
        if (has("--tau")) {
            cfg.params.delay_tau = a.tau;
        } else if (has("--gamma-rate")) {
            if (!(a.distance_m > 0.0) || !(a.vg_mps > 0.0))
                throw ConfigError("--gamma-rate needs --distance-m and --vg-mps");
            cfg.params.delay_tau = a.gamma_rate * a.distance_m / a.vg_mps;
        }
    }
    if (has("--phi")) cfg.params.phase_offset = a.phi;
    if (has("--gamma0")) cfg.params.env_rate = a.gamma0;
    if (has("--method")) cfg.method = method_from_string(a.method);
    if (has("--t-max")) cfg.grid.t_max = a.t_max;
    if (has("--points")) cfg.grid.n_points = a.points;
    if (has("--out")) cfg.outputs.out_path = a.out_path;
    if (has("--format")) cfg.outputs.format = a.format;
    if (has("--svg")) cfg.outputs.svg_path = a.svg_path;
    if (has("--seed")) cfg.seed = a.seed;
    if (has("--reproducible")) cfg.reproducible = true;
    if (has("--dt")) cfg.dt = a.dt;
    if (has("--k-max")) cfg.k_max = a.k_max;
    if (has("--extended")) cfg.series_precision = SeriesPrecision::extended;
    if (has("--pole-count")) cfg.pole_count = a.pole_count;
    return cfg;
}

struct OutStream {
    std::ofstream file;
    std::ostream* os = &std::cout;
    explicit OutStream(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw ConfigError("cannot open output path " + path);
            os = &file;
        }
    }
};

void emit_error(const std::string& type, const std::string& message) {
    nlohmann::json j{{"error", {{"type", type}, {"message", message}}}};
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum-cavity dynamics with atomic Bragg mirrors"};
    app.require_subcommand(1);

    CommonArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "time evolution of the central atom");
    add_common_flags(sim, sim_args);
    sim->add_option("--method", sim_args.method,
                    "dde|series|spectral|spectral-main|approx|detuned|auto");
    sim->add_option("--t-max", sim_args.t_max, "horizon in units of 1/gamma");
    sim->add_option("--points", sim_args.points, "output grid size");
    sim->add_option("--dt", sim_args.dt, "dde step override");
    sim->add_option("--k-max", sim_args.k_max, "series truncation override");
    sim->add_flag("--extended", sim_args.extended, "extended-precision series mode");
    sim->add_option("--pole-count", sim_args.pole_count, "poles per side for spectral");

    CommonArgs refl_args;
    ReflectanceRequest refl;
    std::string delta_range = "-10:10:201";
    auto* rf = app.add_subcommand("reflectance", "mirror reflectance spectrum");
    add_common_flags(rf, refl_args);
    rf->add_option("--delta-range", delta_range, "min:max[:points] in units of gamma");
    rf->add_option("--spacing-tau", refl.spacing_tau, "gamma d_m / v_g");
    rf->add_option("--phase-l", refl.phase_l, "Bragg order l");
    rf->add_option("--sigma", refl.sigma, "rms position fluctuation / d_m");
    rf->add_option("--samples", refl.samples, "disorder ensemble size");
    rf->add_flag("--lorentzian", refl.lorentzian, "use the closed form instead");

    CommonArgs pole_args;
    int pole_count = 32;
    auto* pl = app.add_subcommand("poles", "macroscopic-limit pole set");
    add_common_flags(pl, pole_args);
    pl->add_option("--count", pole_count, "poles per side");

    CommonArgs fom_args;
    auto* fm = app.add_subcommand("fom", "figures of merit");
    add_common_flags(fm, fom_args);

    CommonArgs sweep_args;
    SweepSpec sweep_spec;
    auto* sw = app.add_subcommand("sweep", "parameter sweep with fitted statistics");
    add_common_flags(sw, sweep_args);
    sw->add_option("--axis", sweep_spec.axis,
                   "n_atoms|delay_tau|phase_offset|env_rate")
        ->required();
    sw->add_option("--from", sweep_spec.from)->required();
    sw->add_option("--to", sweep_spec.to)->required();
    sw->add_option("--steps", sweep_spec.steps)->required();
    sw->add_flag("--log", sweep_spec.log_spaced, "log-spaced axis");
    sw->add_option("--method", sweep_args.method, "method per point (default auto)");
    sw->add_option("--t-max", sweep_args.t_max);
    sw->add_option("--points", sweep_args.points);

    CommonArgs cmp_args;
    std::string cmp_methods = "dde,approx";
    auto* cp = app.add_subcommand("compare", "cross-method distances on a shared grid");
    add_common_flags(cp, cmp_args);
    cp->add_option("--methods", cmp_methods, "comma-separated method list");
    cp->add_option("--t-max", cmp_args.t_max);
    cp->add_option("--points", cmp_args.points);
    cp->add_option("--dt", cmp_args.dt);
    cp->add_flag("--extended", cmp_args.extended);

    CommonArgs preset_args;
    auto* pr = app.add_subcommand("presets", "experimental platform table as JSON");
    add_common_flags(pr, preset_args, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("config", e.what());
        return 2;
    }

    try {
        if (sim->parsed()) {
            RunConfig cfg = build_config(sim_args, sim);
            OutStream out(cfg.outputs.out_path);
            run_simulate(cfg, *out.os);
        } else if (rf->parsed()) {
            RunConfig cfg = build_config(refl_args, rf);
            refl.n_atoms = cfg.params.n_atoms;
            // delta ranges parse as min:max[:points]
            {
                std::string s = delta_range;
                for (auto& c : s)
                    if (c == ':') c = ' ';
                std::istringstream is(s);
                if (!(is >> refl.delta_min >> refl.delta_max))
                    throw ConfigError("bad --delta-range, expected min:max[:points]");
                long pts = 201;
                if (is >> pts) refl.n_points = static_cast<size_t>(pts);
            }
            OutStream out(cfg.outputs.out_path);
            write_reflectance(*out.os, cfg, refl);
        } else if (pl->parsed()) {
            RunConfig cfg = build_config(pole_args, pl);
            OutStream out(cfg.outputs.out_path);
            write_poles(*out.os, cfg, pole_count);
        } else if (fm->parsed()) {
            RunConfig cfg = build_config(fom_args, fm);
            OutStream out(cfg.outputs.out_path);
            write_fom(*out.os, cfg, cfg.outputs.format == "json");
        } else if (sw->parsed()) {
            RunConfig cfg = build_config(sweep_args, sw);
            OutStream out(cfg.outputs.out_path);
            const auto rows = sweep(cfg, sweep_spec);
            write_sweep(*out.os, cfg, sweep_spec, rows);
        } else if (cp->parsed()) {
            RunConfig cfg = build_config(cmp_args, cp);
            std::vector<Method> methods;
            std::string s = cmp_methods;
            for (auto& c : s)
                if (c == ',') c = ' ';
            std::istringstream is(s);
            std::string tok;
            while (is >> tok) methods.push_back(method_from_string(tok));
            const CompareReport rep = compare(cfg, methods);
            OutStream out(cfg.outputs.out_path);
            write_compare_report(*out.os, rep, cfg, cfg.outputs.format == "json");
            if (!rep.all_within) return 4;
        } else if (pr->parsed()) {
            RunConfig cfg = build_config(preset_args, pr);
            OutStream out(cfg.outputs.out_path);
            *out.os << presets_json().dump(2) << "\n";
        }
    } catch (const ConfigError& e) {
        emit_error("config", e.what());
        return 2;
    } catch (const NumericalError& e) {
        emit_error("numerical", e.what());
        return 3;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 3;
    }
    return 0;
}

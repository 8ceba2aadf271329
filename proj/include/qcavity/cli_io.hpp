// Command-line front end machinery: run configuration, method dispatch,
// parameter sweeps, cross-method comparison and CSV/JSON/SVG emission.
// The CLI binary in tools/ is a thin wrapper over these functions so tests
// can drive them directly.
#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "common.hpp"
#include "dde_core.hpp"
#include "laplace_series.hpp"
#include "mirror_optics.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace qcavity {

enum class Method { dde, series, spectral, approx, detuned, spectral_main, auto_ };

inline Method method_from_string(const std::string& s) {
    if (s == "dde") return Method::dde;
    if (s == "series") return Method::series;
    if (s == "spectral") return Method::spectral;
    if (s == "approx") return Method::approx;
    if (s == "detuned") return Method::detuned;
    if (s == "spectral-main" || s == "spectral_main") return Method::spectral_main;
    if (s == "auto") return Method::auto_;
    throw ConfigError("unknown method '" + s +
                      "' (dde, series, spectral, spectral-main, approx, detuned, auto)");
}

inline std::string method_name(Method m) {
    switch (m) {
        case Method::dde: return "dde";
        case Method::series: return "series";
        case Method::spectral: return "spectral";
        case Method::approx: return "approx";
        case Method::detuned: return "detuned";
        case Method::spectral_main: return "spectral-main";
        case Method::auto_: return "auto";
    }
    return "?";
}

struct GridSpec {
    double t_max = 3.0;
    size_t n_points = 2001;
};

struct OutputSpec {
    std::string out_path;        // empty -> stdout
    std::string format = "csv";  // csv | json
    std::string svg_path;        // empty -> no plot
};

struct RunConfig {
    CavityParams params;
    std::optional<std::string> preset_label;
    Method method = Method::auto_;
    GridSpec grid;
    OutputSpec outputs;
    std::uint64_t seed = 0;
    bool reproducible = false;
    std::optional<double> dt;
    std::optional<int> k_max;
    SeriesPrecision series_precision = SeriesPrecision::standard;
    int pole_count = 64;
};

// ---------------------------------------------------------------------------
// configuration

// Single JSON document mirroring RunConfig. Physical inputs are accepted
// either as tau directly or as (gamma_rate_per_s, distance_m,
// group_velocity_m_per_s).
inline RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig cfg;
    if (j.contains("params")) {
        const auto& p = j.at("params");
        if (p.contains("preset")) {
            cfg.preset_label = p.at("preset").get<std::string>();
            cfg.params = preset(*cfg.preset_label)
                             .params(p.value("n_atoms", 1));
        } else {
            cfg.params.n_atoms = p.value("n_atoms", 1);
            if (p.contains("delay_tau")) {
                cfg.params.delay_tau = p.at("delay_tau").get<double>();
            } else if (p.contains("gamma_rate_per_s")) {
                const double gamma = p.at("gamma_rate_per_s").get<double>();
                const double d = p.at("distance_m").get<double>();
                const double vg = p.at("group_velocity_m_per_s").get<double>();
                if (!(gamma > 0.0) || !(d > 0.0) || !(vg > 0.0))
                    throw ConfigError("gamma, distance and group velocity must be positive");
                cfg.params.delay_tau = gamma * d / vg;
            }
        }
        cfg.params.phase_offset = p.value("phase_offset", cfg.params.phase_offset);
        cfg.params.env_rate = p.value("env_rate", cfg.params.env_rate);
    }
    if (j.contains("method")) cfg.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("grid")) {
        cfg.grid.t_max = j.at("grid").value("t_max", cfg.grid.t_max);
        cfg.grid.n_points = j.at("grid").value("n_points", cfg.grid.n_points);
    }
    if (j.contains("outputs")) {
        cfg.outputs.out_path = j.at("outputs").value("out", cfg.outputs.out_path);
        cfg.outputs.format = j.at("outputs").value("format", cfg.outputs.format);
        cfg.outputs.svg_path = j.at("outputs").value("svg", cfg.outputs.svg_path);
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.reproducible = j.value("reproducible", cfg.reproducible);
    if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
    if (j.contains("k_max")) cfg.k_max = j.at("k_max").get<int>();
    if (j.value("extended_precision", false))
        cfg.series_precision = SeriesPrecision::extended;
    cfg.pole_count = j.value("pole_count", cfg.pole_count);
    return cfg;
}

// ---------------------------------------------------------------------------
// method dispatch

inline bool method_valid(Method m, const CavityParams& p, const GridSpec& g,
                         const SeriesOptions& opt, std::string* why = nullptr) {
    p.validate();
    switch (m) {
        case Method::dde: return true;
        case Method::series: {
            const int k_needed = static_cast<int>(std::floor(g.t_max / p.delay_tau)) + 1;
            if (k_needed > opt.limit()) {
                if (why) *why = "k_max=" + std::to_string(k_needed) +
                                " above K_limit=" + std::to_string(opt.limit());
                return false;
            }
            return true;
        }
        case Method::spectral:
            if (p.n_atoms < 10.0 / p.delay_tau) {
                if (why) *why = "macroscopic pole sum needs N >= 10/tau";
                return false;
            }
            return true;
        case Method::approx:
        case Method::detuned:
        case Method::spectral_main:
            if (p.delay_tau > 0.1) {
                if (why) *why = "closed form limited to the regime tau << 1";
                return false;
            }
            return true;
        case Method::auto_: return true;
    }
    return false;
}

// auto -> series when the horizon fits under K_limit, else dde
inline Method resolve_method(Method m, const CavityParams& p, const GridSpec& g,
                             const SeriesOptions& opt, std::string* note = nullptr) {
    if (m != Method::auto_) return m;
    const int k_needed = static_cast<int>(std::floor(g.t_max / p.delay_tau)) + 1;
    if (k_needed <= opt.limit()) {
        if (note) *note = "auto -> series (k_max=" + std::to_string(k_needed) + ")";
        return Method::series;
    }
    if (note)
        *note = "auto -> dde (k_max=" + std::to_string(k_needed) + " above K_limit=" +
                std::to_string(opt.limit()) + ")";
    return Method::dde;
}

inline Trajectory run_method(Method m, const RunConfig& cfg,
                             const std::vector<double>& grid) {
    const CavityParams& p = cfg.params;
    const DerivedGroups g = derive_groups(p);
    const SeriesOptions sopt{cfg.series_precision, cfg.k_max};
    switch (m) {
        case Method::dde: {
            IntegratorConfig ic;
            ic.t_max = grid.back();
            if (cfg.dt) ic.dt = *cfg.dt;
            Trajectory full = integrate_cavity(p, ic);
            // resample the dense solution onto the requested grid
            Trajectory out;
            out.t = grid;
            out.states.resize(grid.size());
            for (size_t i = 0; i < grid.size(); ++i) {
                size_t idx = static_cast<size_t>(llround(grid[i] / full.meta.dt));
                idx = std::min(idx, full.size() - 1);
                out.states[i] = full.states[idx];
                out.t[i] = full.t[idx];
            }
            out.meta = full.meta;
            return out;
        }
        case Method::series:
            return series_c0(p, grid, cfg.k_max, sopt);
        case Method::spectral: {
            std::string why;
            if (!method_valid(m, p, cfg.grid, sopt, &why)) throw ConfigError(why);
            Trajectory tr = macroscopic_c0(p.delay_tau, g.detuning, grid, cfg.pole_count);
            tr.meta.params = p;
            return tr;
        }
        case Method::approx: return rabi_approx(p, grid);
        case Method::detuned: return detuned_general_c0(p, grid);
        case Method::spectral_main: return spectral_main_c0(p, grid);
        case Method::auto_: break;
    }
    throw ConfigError("method must be resolved before dispatch");
}

// ---------------------------------------------------------------------------
// writers

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void write_meta_lines(std::ostream& os, const std::string& subcommand,
                             const RunConfig& cfg,
                             const std::vector<std::string>& notes) {
    os << "# qcavity " << subcommand << "\n";
    const CavityParams& p = cfg.params;
    os << "# params: n_atoms=" << p.n_atoms << " delay_tau=" << fmt_double(p.delay_tau)
       << " phase_offset=" << fmt_double(p.phase_offset)
       << " env_rate=" << fmt_double(p.env_rate) << "\n";
    if (p.delay_tau > 0.0) {  // cavity groups are meaningless for a bare mirror
        const DerivedGroups g = derive_groups(p);
        const FiguresOfMerit f = figures_of_merit(p);
        os << "# derived: a=" << fmt_double(g.a) << " detuning=" << fmt_double(g.detuning)
           << " kappa=" << fmt_double(f.kappa) << " rabi_freq=" << fmt_double(f.rabi_freq)
           << " critical_n=" << fmt_double(f.critical_n) << "\n";
    }
    os << "# units: gamma=1, time in 1/gamma; preset rates read as ordinary frequencies\n";
    os << "# seed: " << cfg.seed << "\n";
    for (const auto& n : notes) os << "# note: " << n << "\n";
    if (!cfg.reproducible) {
        const std::time_t now = std::time(nullptr);
        char buf[64];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        os << "# generated_at: " << buf << "\n";
    }
}

}  // namespace detail

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr,
                                 const RunConfig& cfg,
                                 const std::vector<std::string>& notes) {
    detail::write_meta_lines(os, "simulate", cfg, notes);
    os << "# method: " << tr.meta.method;
    if (tr.meta.dt > 0) os << " dt=" << detail::fmt_double(tr.meta.dt);
    for (const auto& [k, v] : tr.meta.extra) os << " " << k << "=" << v;
    os << "\n";
    os << "t_gamma,re_c0,im_c0,p0,re_cm,im_cm\n";
    for (size_t i = 0; i < tr.size(); ++i) {
        const auto& s = tr.states[i];
        os << detail::fmt_double(tr.t[i]) << ',' << detail::fmt_double(s.c0.real()) << ','
           << detail::fmt_double(s.c0.imag()) << ',' << detail::fmt_double(std::norm(s.c0))
           << ',' << detail::fmt_double(s.cm.real()) << ','
           << detail::fmt_double(s.cm.imag()) << "\n";
    }
}

inline void write_trajectory_json(std::ostream& os, const Trajectory& tr,
                                  const RunConfig& cfg,
                                  const std::vector<std::string>& notes) {
    nlohmann::json j;
    j["meta"] = {{"method", tr.meta.method},
                 {"dt", tr.meta.dt},
                 {"n_atoms", cfg.params.n_atoms},
                 {"delay_tau", cfg.params.delay_tau},
                 {"phase_offset", cfg.params.phase_offset},
                 {"env_rate", cfg.params.env_rate},
                 {"seed", cfg.seed},
                 {"notes", notes}};
    for (const auto& [k, v] : tr.meta.extra) j["meta"][k] = v;
    j["columns"] = {"t_gamma", "re_c0", "im_c0", "p0", "re_cm", "im_cm"};
    auto& rows = j["rows"];
    rows = nlohmann::json::array();
    for (size_t i = 0; i < tr.size(); ++i) {
        const auto& s = tr.states[i];
        rows.push_back({tr.t[i], s.c0.real(), s.c0.imag(), std::norm(s.c0), s.cm.real(),
                        s.cm.imag()});
    }
    os << j.dump(2) << "\n";
}

// Minimal SVG line plot of p0 with the decaying envelope overlay.
inline void write_trajectory_svg(std::ostream& os, const Trajectory& tr,
                                 const CavityParams& params) {
    const int w = 900, h = 520, ml = 60, mr = 20, mt = 30, mb = 45;
    const double t_max = tr.t.back();
    const FiguresOfMerit f = figures_of_merit(params);
    const double env_rate = f.kappa + params.env_rate;
    auto xm = [&](double t) { return ml + t / t_max * (w - ml - mr); };
    auto ym = [&](double p) { return mt + (1.0 - p) * (h - mt - mb); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double t = t_max * i / 5.0, p = i / 5.0;
        os << "<line x1=\"" << xm(t) << "\" y1=\"" << ym(0) << "\" x2=\"" << xm(t)
           << "\" y2=\"" << ym(0) + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << xm(t) << "\" y=\"" << h - 18
           << "\" font-size=\"12\" text-anchor=\"middle\">" << detail::fmt_double(t)
           << "</text>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << ym(p) + 4
           << "\" font-size=\"12\" text-anchor=\"end\">" << detail::fmt_double(p)
           << "</text>\n";
    }
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr
       << "\" height=\"" << h - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (w / 2) << "\" y=\"" << h - 4
       << "\" font-size=\"13\" text-anchor=\"middle\">gamma t</text>\n";
    os << "<text x=\"" << (w / 2) << "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">"
       << "excitation probability (" << tr.meta.method << ")</text>\n";

    auto polyline = [&](const char* style, auto value) {
        os << "<polyline fill=\"none\" " << style << " points=\"";
        const size_t stride = std::max<size_t>(1, tr.size() / 2000);
        for (size_t i = 0; i < tr.size(); i += stride)
            os << xm(tr.t[i]) << ',' << ym(value(i)) << ' ';
        os << "\"/>\n";
    };
    polyline("stroke=\"#1f77b4\" stroke-width=\"1.2\"",
             [&](size_t i) { return std::min(1.0, tr.p0(i)); });
    polyline("stroke=\"black\" stroke-width=\"1\" stroke-dasharray=\"6,4\"",
             [&](size_t i) { return std::exp(-env_rate * tr.t[i]); });
    os << "</svg>\n";
}

// ---------------------------------------------------------------------------
// simulate

inline Trajectory run_simulate(const RunConfig& cfg, std::ostream& os) {
    cfg.params.validate();
    if (cfg.grid.n_points < 2 || cfg.grid.n_points > 100000)
        throw ConfigError("grid n_points must be in [2, 1e5]");
    const SeriesOptions sopt{cfg.series_precision, cfg.k_max};
    std::vector<std::string> notes;
    std::string note;
    const Method m = resolve_method(cfg.method, cfg.params, cfg.grid, sopt, &note);
    if (!note.empty()) notes.push_back(note);
    std::string why;
    if ((m == Method::approx || m == Method::detuned || m == Method::spectral_main) &&
        !method_valid(m, cfg.params, cfg.grid, sopt, &why))
        notes.push_back("warning: " + why);

    const std::vector<double> grid = uniform_grid(cfg.grid.t_max, cfg.grid.n_points);
    Trajectory tr = run_method(m, cfg, grid);
    if (cfg.outputs.format == "json")
        write_trajectory_json(os, tr, cfg, notes);
    else
        write_trajectory_csv(os, tr, cfg, notes);
    if (!cfg.outputs.svg_path.empty()) {
        std::ofstream svg(cfg.outputs.svg_path);
        if (!svg) throw ConfigError("cannot open svg path " + cfg.outputs.svg_path);
        write_trajectory_svg(svg, tr, cfg.params);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// compare

struct MethodPairDistance {
    std::string method_a, method_b;
    double sup = 0.0, l2 = 0.0;
    double tolerance = 0.0;
    bool within = false;
};

struct CompareReport {
    std::string regime;
    double a = 0.0;
    std::vector<std::string> methods;
    std::vector<std::string> skipped;  // "method: reason"
    std::vector<MethodPairDistance> pairs;
    bool all_within = true;
    FiguresOfMerit fom{};
};

inline std::string classify_regime(double a) {
    if (a < 0.1) return "markovian";
    if (a <= 10.0) return "transition";
    return "macroscopic";
}

namespace detail {

inline double method_tolerance(Method m, const std::string& regime,
                               const CavityParams& p) {
    if (m == Method::dde || m == Method::series) return 1e-5;
    if (regime == "markovian")
        // the closed forms keep only the cos term; the dropped sin/(2 Omega)
        // piece contributes ~1/(2 sqrt(2N)) on top of the O(a) envelope error
        return 0.02 + 0.5 / std::sqrt(2.0 * p.n_atoms);
    if (regime == "transition") return 0.03;
    return 0.02 + p.delay_tau / 6.0;
}

}  // namespace detail

inline CompareReport compare(const RunConfig& cfg, const std::vector<Method>& methods) {
    cfg.params.validate();
    const DerivedGroups g = derive_groups(cfg.params);
    CompareReport rep;
    rep.a = g.a;
    rep.regime = classify_regime(g.a);
    rep.fom = figures_of_merit(cfg.params);
    const SeriesOptions sopt{cfg.series_precision, cfg.k_max};

    std::vector<Method> valid;
    for (Method m : methods) {
        if (m == Method::auto_)
            throw ConfigError("compare takes explicit methods, not auto");
        std::string why;
        if (method_valid(m, cfg.params, cfg.grid, sopt, &why)) {
            valid.push_back(m);
        } else {
            rep.skipped.push_back(method_name(m) + ": " + why);
        }
    }
    if (valid.size() < 2)
        throw ConfigError("compare needs at least two methods valid for this regime");

    // shared grid: the dde sample times when dde participates, uniform otherwise
    std::vector<double> grid = uniform_grid(cfg.grid.t_max, cfg.grid.n_points);
    std::vector<Trajectory> runs;
    auto it_dde = std::find(valid.begin(), valid.end(), Method::dde);
    if (it_dde != valid.end()) {
        Trajectory d = run_method(Method::dde, cfg, grid);
        grid = d.t;
        runs.resize(valid.size());
        runs[it_dde - valid.begin()] = std::move(d);
        for (size_t i = 0; i < valid.size(); ++i)
            if (valid[i] != Method::dde) runs[i] = run_method(valid[i], cfg, grid);
    } else {
        for (Method m : valid) runs.push_back(run_method(m, cfg, grid));
    }

    for (size_t i = 0; i < valid.size(); ++i) rep.methods.push_back(method_name(valid[i]));
    for (size_t i = 0; i < valid.size(); ++i)
        for (size_t j = i + 1; j < valid.size(); ++j) {
            const TrajectoryDistance d = trajectory_distance(runs[i], runs[j]);
            MethodPairDistance pd;
            pd.method_a = method_name(valid[i]);
            pd.method_b = method_name(valid[j]);
            pd.sup = d.sup;
            pd.l2 = d.l2;
            pd.tolerance = std::max(
                detail::method_tolerance(valid[i], rep.regime, cfg.params),
                detail::method_tolerance(valid[j], rep.regime, cfg.params));
            pd.within = pd.sup <= pd.tolerance;
            rep.all_within = rep.all_within && pd.within;
            rep.pairs.push_back(pd);
        }
    return rep;
}

inline void write_compare_report(std::ostream& os, const CompareReport& rep,
                                 const RunConfig& cfg, bool as_json) {
    if (as_json) {
        nlohmann::json j;
        j["regime"] = rep.regime;
        j["a"] = rep.a;
        j["methods"] = rep.methods;
        j["skipped"] = rep.skipped;
        j["all_within_tolerance"] = rep.all_within;
        j["figures_of_merit"] = {{"kappa", rep.fom.kappa},
                                 {"rabi_freq", rep.fom.rabi_freq},
                                 {"critical_n", rep.fom.critical_n},
                                 {"cycles_ratio", rep.fom.cycles_ratio}};
        auto& pairs = j["pairs"];
        pairs = nlohmann::json::array();
        for (const auto& p : rep.pairs)
            pairs.push_back({{"a", p.method_a},
                             {"b", p.method_b},
                             {"sup", p.sup},
                             {"l2", p.l2},
                             {"tolerance", p.tolerance},
                             {"within", p.within}});
        os << j.dump(2) << "\n";
        return;
    }
    detail::write_meta_lines(os, "compare", cfg, {});
    os << "# regime: " << rep.regime << " (a=" << detail::fmt_double(rep.a) << ")\n";
    for (const auto& s : rep.skipped) os << "# skipped: " << s << "\n";
    os << "method_a,method_b,sup,l2,tolerance,within\n";
    for (const auto& p : rep.pairs)
        os << p.method_a << ',' << p.method_b << ',' << detail::fmt_double(p.sup) << ','
           << detail::fmt_double(p.l2) << ',' << detail::fmt_double(p.tolerance) << ','
           << (p.within ? 1 : 0) << "\n";
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
    double axis_value = 0.0;
    std::string statistic;
    double value = 0.0;
};

struct SweepSpec {
    std::string axis;  // n_atoms | delay_tau | phase_offset | env_rate
    double from = 0.0;
    double to = 0.0;
    int steps = 0;
    bool log_spaced = false;
};

inline std::vector<double> sweep_values(const SweepSpec& s) {
    if (s.steps < 0) throw ConfigError("sweep steps must be >= 0");
    std::vector<double> v;
    if (s.steps == 0) return v;
    if (s.steps == 1) {
        v.push_back(s.from);
        return v;
    }
    if (s.log_spaced && (!(s.from > 0.0) || !(s.to > 0.0)))
        throw ConfigError("log-spaced sweep needs positive endpoints");
    for (int i = 0; i < s.steps; ++i) {
        const double f = static_cast<double>(i) / (s.steps - 1);
        v.push_back(s.log_spaced
                        ? std::exp(std::log(s.from) + f * (std::log(s.to) - std::log(s.from)))
                        : s.from + f * (s.to - s.from));
    }
    return v;
}

inline CavityParams with_axis(const CavityParams& base, const std::string& axis,
                              double value) {
    CavityParams p = base;
    if (axis == "n_atoms")
        p.n_atoms = std::max(1, static_cast<int>(llround(value)));
    else if (axis == "delay_tau")
        p.delay_tau = value;
    else if (axis == "phase_offset")
        p.phase_offset = value;
    else if (axis == "env_rate")
        p.env_rate = value;
    else
        throw ConfigError("sweep axis must be n_atoms, delay_tau, phase_offset or env_rate");
    return p;
}

// One row per (axis value, statistic). Points run concurrently; output rows
// stay ordered by axis index. Per-point failures are recorded and the sweep
// continues.
inline std::vector<std::vector<SweepRow>> sweep(const RunConfig& cfg, const SweepSpec& spec) {
    const std::vector<double> values = sweep_values(spec);
    std::vector<std::vector<SweepRow>> rows(values.size());

    auto run_point = [&](size_t i) {
        std::vector<SweepRow> out;
        const double v = values[i];
        try {
            RunConfig pc = cfg;
            pc.params = with_axis(cfg.params, spec.axis, v);
            pc.params.validate();
            const SeriesOptions sopt{pc.series_precision, pc.k_max};
            const Method m = resolve_method(pc.method, pc.params, pc.grid, sopt);
            const std::vector<double> grid = uniform_grid(pc.grid.t_max, pc.grid.n_points);
            const Trajectory tr = run_method(m, pc, grid);
            const OscillationFit fit = fit_oscillation(tr);
            const FiguresOfMerit f = figures_of_merit(pc.params);
            out.push_back({v, "frequency", fit.frequency});
            out.push_back({v, "amp_decay_rate", fit.amp_decay_rate});
            out.push_back({v, "prob_decay_rate", fit.prob_decay_rate});
            out.push_back({v, "n_peaks", static_cast<double>(fit.n_peaks)});
            out.push_back({v, "kappa_model", f.kappa});
            out.push_back({v, "rabi_model", f.rabi_freq});
        } catch (const std::exception&) {
            out.push_back({v, "error", 1.0});
        }
        return out;
    };

    std::vector<std::future<std::vector<SweepRow>>> futs;
    futs.reserve(values.size());
    for (size_t i = 0; i < values.size(); ++i)
        futs.push_back(std::async(std::launch::async | std::launch::deferred, run_point, i));
    for (size_t i = 0; i < values.size(); ++i) rows[i] = futs[i].get();
    return rows;
}

inline void write_sweep(std::ostream& os, const RunConfig& cfg, const SweepSpec& spec,
                        const std::vector<std::vector<SweepRow>>& rows) {
    if (cfg.outputs.format == "json") {
        nlohmann::json j;
        j["meta"] = {{"axis", spec.axis}, {"seed", cfg.seed}};
        j["columns"] = {"axis", "axis_value", "statistic", "value"};
        auto& out = j["rows"];
        out = nlohmann::json::array();
        for (const auto& point : rows)
            for (const auto& r : point)
                out.push_back({spec.axis, r.axis_value, r.statistic, r.value});
        os << j.dump(2) << "\n";
        return;
    }
    detail::write_meta_lines(os, "sweep", cfg, {"axis=" + spec.axis});
    os << "axis,axis_value,statistic,value\n";
    for (const auto& point : rows)
        for (const auto& r : point)
            os << spec.axis << ',' << detail::fmt_double(r.axis_value) << ',' << r.statistic
               << ',' << detail::fmt_double(r.value) << "\n";
}

// ---------------------------------------------------------------------------
// reflectance

struct ReflectanceRequest {
    int n_atoms = 1;
    double delta_min = -10.0, delta_max = 10.0;
    size_t n_points = 201;
    double spacing_tau = 1e-5;
    int phase_l = 1;
    double sigma = 0.0;  // rms position fluctuation as a fraction of d_m
    int samples = 1000;
    bool lorentzian = false;
};

inline void write_reflectance(std::ostream& os, const RunConfig& cfg,
                              const ReflectanceRequest& req) {
    if (req.n_points < 1) throw ConfigError("reflectance needs at least one point");
    std::vector<double> deltas(req.n_points);
    for (size_t i = 0; i < req.n_points; ++i)
        deltas[i] = req.n_points == 1
                        ? req.delta_min
                        : req.delta_min + (req.delta_max - req.delta_min) *
                                              static_cast<double>(i) /
                                              static_cast<double>(req.n_points - 1);

    std::vector<std::string> notes;
    notes.push_back(req.lorentzian ? "model=lorentzian" : "model=multiple-scattering");
    if (req.sigma > 0.0)
        notes.push_back("disorder: sigma=" + detail::fmt_double(req.sigma) +
                        "*d_m, samples=" + std::to_string(req.samples) +
                        ", intensity averaging");
    const bool as_json = cfg.outputs.format == "json";

    std::vector<double> refl(deltas.size());
    std::vector<double> err;
    if (req.sigma > 0.0 && !req.lorentzian) {
        const DisorderResult r =
            disorder_averaged_reflectance(req.n_atoms, req.spacing_tau, req.sigma,
                                          deltas, req.samples, cfg.seed, req.phase_l);
        refl = r.mean;
        err = r.stderr_;
    } else {
        const AtomChain chain = bragg_chain(req.n_atoms, req.spacing_tau, req.phase_l);
        for (size_t i = 0; i < deltas.size(); ++i)
            refl[i] = req.lorentzian ? lorentzian_reflectance(deltas[i], req.n_atoms)
                                     : chain_scattering(chain, deltas[i]).reflectance;
    }

    if (as_json) {
        nlohmann::json j;
        j["meta"] = {{"n_atoms", req.n_atoms}, {"spacing_tau", req.spacing_tau},
                     {"notes", notes}, {"seed", cfg.seed}};
        j["columns"] = err.empty()
                           ? nlohmann::json{"delta_over_gamma", "reflectance"}
                           : nlohmann::json{"delta_over_gamma", "reflectance", "stderr"};
        auto& rows = j["rows"];
        rows = nlohmann::json::array();
        for (size_t i = 0; i < deltas.size(); ++i) {
            if (err.empty())
                rows.push_back({deltas[i], refl[i]});
            else
                rows.push_back({deltas[i], refl[i], err[i]});
        }
        os << j.dump(2) << "\n";
        return;
    }
    detail::write_meta_lines(os, "reflectance", cfg, notes);
    if (err.empty()) {
        os << "delta_over_gamma,reflectance\n";
        for (size_t i = 0; i < deltas.size(); ++i)
            os << detail::fmt_double(deltas[i]) << ',' << detail::fmt_double(refl[i])
               << "\n";
    } else {
        os << "delta_over_gamma,reflectance,stderr\n";
        for (size_t i = 0; i < deltas.size(); ++i)
            os << detail::fmt_double(deltas[i]) << ',' << detail::fmt_double(refl[i])
               << ',' << detail::fmt_double(err[i]) << "\n";
    }
}

// ---------------------------------------------------------------------------
// poles / fom / presets

inline void write_poles(std::ostream& os, const RunConfig& cfg, int count) {
    const DerivedGroups g = derive_groups(cfg.params);
    const PoleSet set = macroscopic_poles(cfg.params.delay_tau, g.detuning, count);
    if (cfg.outputs.format == "json") {
        nlohmann::json j;
        j["meta"] = {{"delay_tau", cfg.params.delay_tau},
                     {"detuning", g.detuning},
                     {"tail_bound", set.tail_bound}};
        j["columns"] = {"index", "re_s", "im_s", "re_weight", "im_weight"};
        auto& rows = j["rows"];
        rows = nlohmann::json::array();
        for (size_t i = 0; i < set.poles.size(); ++i)
            rows.push_back({set.indices[i], set.poles[i].real(), set.poles[i].imag(),
                            set.weights[i].real(), set.weights[i].imag()});
        os << j.dump(2) << "\n";
        return;
    }
    detail::write_meta_lines(os, "poles", cfg, {});
    os << "# tail_bound: " << detail::fmt_double(set.tail_bound) << "\n";
    os << "index,re_s,im_s,re_weight,im_weight\n";
    for (size_t i = 0; i < set.poles.size(); ++i)
        os << set.indices[i] << ',' << detail::fmt_double(set.poles[i].real()) << ','
           << detail::fmt_double(set.poles[i].imag()) << ','
           << detail::fmt_double(set.weights[i].real()) << ','
           << detail::fmt_double(set.weights[i].imag()) << "\n";
}

inline void write_fom(std::ostream& os, const RunConfig& cfg, bool as_json) {
    const DerivedGroups g = derive_groups(cfg.params);
    const FiguresOfMerit f = figures_of_merit(cfg.params);
    if (as_json) {
        nlohmann::json j{{"a", g.a},
                         {"detuning", g.detuning},
                         {"half_trip", g.half_trip},
                         {"round_trip", g.round_trip},
                         {"kappa", f.kappa},
                         {"rabi_freq", f.rabi_freq},
                         {"critical_n", f.critical_n},
                         {"cycles_ratio", f.cycles_ratio}};
        if (std::isfinite(f.cooperativity))
            j["cooperativity"] = f.cooperativity;
        else
            j["cooperativity"] = "inf";
        os << j.dump(2) << "\n";
        return;
    }
    detail::write_meta_lines(os, "fom", cfg, {});
    os << "quantity,value\n";
    os << "a," << detail::fmt_double(g.a) << "\n";
    os << "detuning," << detail::fmt_double(g.detuning) << "\n";
    os << "kappa," << detail::fmt_double(f.kappa) << "\n";
    os << "rabi_freq," << detail::fmt_double(f.rabi_freq) << "\n";
    os << "critical_n," << detail::fmt_double(f.critical_n) << "\n";
    os << "cooperativity,"
       << (std::isfinite(f.cooperativity) ? detail::fmt_double(f.cooperativity) : "inf")
       << "\n";
    os << "cycles_ratio," << detail::fmt_double(f.cycles_ratio) << "\n";
}

inline nlohmann::json presets_json() {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : presets())
        arr.push_back({{"label", p.label},
                       {"omega_a_ghz", p.omega_a},
                       {"two_gamma_mhz", p.two_gamma},
                       {"gamma_ratio", p.gamma_ratio},
                       {"vg_over_c", p.vg_over_c},
                       {"d_mm", p.d_mm},
                       {"tau", p.tau}});
    return arr;
}

}  // namespace qcavity

#include <doctest.h>

#include <cmath>
#include <sstream>

#include <qcavity/cli_io.hpp>

using namespace qcavity;

TEST_CASE("config document parses and flags mirror it") {
    const auto j = nlohmann::json::parse(R"({
        "params": {"n_atoms": 100, "delay_tau": 0.01, "phase_offset": 0.3141, "env_rate": 0.2},
        "method": "approx",
        "grid": {"t_max": 2.0, "n_points": 501},
        "outputs": {"format": "json"},
        "seed": 7,
        "reproducible": true
    })");
    const RunConfig cfg = parse_run_config(j);
    CHECK(cfg.params.n_atoms == 100);
    CHECK(cfg.params.delay_tau == 0.01);
    CHECK(cfg.params.env_rate == 0.2);
    CHECK(cfg.method == Method::approx);
    CHECK(cfg.grid.n_points == 501);
    CHECK(cfg.outputs.format == "json");
    CHECK(cfg.seed == 7);
    CHECK(cfg.reproducible);
}

TEST_CASE("physical inputs convert to tau once at the boundary") {
    const auto j = nlohmann::json::parse(R"({
        "params": {"n_atoms": 10, "gamma_rate_per_s": 1.6e7,
                   "distance_m": 1e-3, "group_velocity_m_per_s": 2.998e7}
    })");
    const RunConfig cfg = parse_run_config(j);
    CHECK(cfg.params.delay_tau == doctest::Approx(5.337e-4).epsilon(1e-3));
}

TEST_CASE("preset reference in a config document") {
    const auto j = nlohmann::json::parse(
        R"({"params": {"preset": "quantum_dot", "n_atoms": 100}})");
    const RunConfig cfg = parse_run_config(j);
    CHECK(cfg.params.delay_tau == 0.01);
    CHECK(cfg.params.env_rate == doctest::Approx(2.0 / 63.0).epsilon(1e-12));
}

TEST_CASE("auto method resolution") {
    RunConfig cfg;
    cfg.params.n_atoms = 100;
    cfg.params.delay_tau = 0.5;
    cfg.grid.t_max = 3.0;
    const SeriesOptions opt{};
    std::string note;
    CHECK(resolve_method(Method::auto_, cfg.params, cfg.grid, opt, &note) ==
          Method::series);
    CHECK(note.find("series") != std::string::npos);

    cfg.params.delay_tau = 1e-4;  // k_max = 30001
    CHECK(resolve_method(Method::auto_, cfg.params, cfg.grid, opt, &note) == Method::dde);

    SUBCASE("spectral gate wants a macroscopic mirror") {
        cfg.params.delay_tau = 0.02;
        cfg.params.n_atoms = 100;  // < 10/tau = 500
        std::string why;
        CHECK_FALSE(method_valid(Method::spectral, cfg.params, cfg.grid, opt, &why));
        cfg.params.n_atoms = 5000;
        CHECK(method_valid(Method::spectral, cfg.params, cfg.grid, opt, &why));
    }
}

TEST_CASE("simulate writes the fixed schema and is reproducible") {
    RunConfig cfg;
    cfg.params.n_atoms = 100;
    cfg.params.delay_tau = 0.01;
    cfg.method = Method::approx;
    cfg.grid = {2.0, 201};
    cfg.reproducible = true;

    std::ostringstream a, b;
    run_simulate(cfg, a);
    run_simulate(cfg, b);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("t_gamma,re_c0,im_c0,p0,re_cm,im_cm\n") != std::string::npos);
    CHECK(a.str().find("generated_at") == std::string::npos);

    SUBCASE("timestamp appears without --reproducible") {
        cfg.reproducible = false;
        std::ostringstream c;
        run_simulate(cfg, c);
        CHECK(c.str().find("generated_at") != std::string::npos);
    }
    SUBCASE("json format carries the same columns") {
        cfg.outputs.format = "json";
        std::ostringstream c;
        run_simulate(cfg, c);
        const auto j = nlohmann::json::parse(c.str());
        CHECK(j["columns"].size() == 6);
        CHECK(j["rows"].size() == 201);
        CHECK(j["meta"]["method"] == "approx");
    }
}

TEST_CASE("simulated preset cavity decays at (kappa + gamma0)/2 per amplitude") {
    RunConfig cfg;
    cfg.params = preset("cesium").params(1887);
    cfg.method = Method::approx;
    cfg.grid = {1.0, 20001};
    std::ostringstream os;
    const Trajectory tr = run_simulate(cfg, os);
    const auto fit = fit_oscillation(tr);
    const auto f = figures_of_merit(cfg.params);
    CHECK(fit.amp_decay_rate ==
          doctest::Approx((f.kappa + cfg.params.env_rate) / 2.0).epsilon(0.05));
}

TEST_CASE("figures-of-merit output") {
    RunConfig cfg;
    cfg.params.n_atoms = 100;
    cfg.params.delay_tau = 0.01;
    cfg.reproducible = true;
    std::ostringstream os;
    write_fom(os, cfg, false);
    CHECK(os.str().find("kappa,0.25\n") != std::string::npos);
    CHECK(os.str().find("rabi_freq,10\n") != std::string::npos);
    CHECK(os.str().find("cooperativity,inf\n") != std::string::npos);

    std::ostringstream js;
    write_fom(js, cfg, true);
    const auto j = nlohmann::json::parse(js.str());
    CHECK(j["critical_n"] == doctest::Approx(100.0));
    CHECK(j["cooperativity"] == "inf");
}

TEST_CASE("reflectance of a single atom is the unit-width Lorentzian") {
    RunConfig cfg;
    cfg.params.n_atoms = 1;
    cfg.reproducible = true;
    ReflectanceRequest req;
    req.n_atoms = 1;
    req.delta_min = -10.0;
    req.delta_max = 10.0;
    req.n_points = 2001;
    std::ostringstream os;
    write_reflectance(os, cfg, req);
    CHECK(os.str().find("delta_over_gamma,reflectance\n") != std::string::npos);
    // parse back and find the half-maximum detuning
    std::istringstream in(os.str());
    std::string line;
    double best_delta = 0.0, best_gap = 1e9;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'd') continue;
        const auto comma = line.find(',');
        const double d = std::stod(line.substr(0, comma));
        const double r = std::stod(line.substr(comma + 1));
        if (d > 0 && std::fabs(r - 0.5) < best_gap) {
            best_gap = std::fabs(r - 0.5);
            best_delta = d;
        }
    }
    CHECK(std::fabs(best_delta - 1.0) < 0.1);
}

TEST_CASE("pole listing carries the tail bound") {
    RunConfig cfg;
    cfg.params.n_atoms = 5000;
    cfg.params.delay_tau = 0.02;
    cfg.reproducible = true;
    std::ostringstream os;
    write_poles(os, cfg, 4);
    CHECK(os.str().find("# tail_bound: 0.00333333") != std::string::npos);
    CHECK(os.str().find("index,re_s,im_s,re_weight,im_weight\n") != std::string::npos);

    SUBCASE("json format carries the same fields") {
        cfg.outputs.format = "json";
        std::ostringstream js;
        write_poles(js, cfg, 4);
        const auto j = nlohmann::json::parse(js.str());
        CHECK(j["meta"]["tail_bound"] == doctest::Approx(0.02 / 6.0));
        CHECK(j["rows"].size() == 8);
    }
}

TEST_CASE("sweep emits long-format rows and survives per-point failures") {
    RunConfig cfg;
    cfg.params.n_atoms = 100;
    cfg.params.delay_tau = 0.01;
    cfg.method = Method::approx;
    cfg.grid = {2.0, 2001};
    cfg.reproducible = true;

    SUBCASE("empty range gives a bare header") {
        SweepSpec spec{"n_atoms", 10, 100, 0, false};
        std::ostringstream os;
        write_sweep(os, cfg, spec, sweep(cfg, spec));
        const auto s = os.str();
        CHECK(s.find("axis,axis_value,statistic,value\n") != std::string::npos);
        CHECK(s.rfind("axis,axis_value,statistic,value\n") + 32 == s.size());
    }
    SUBCASE("frequency follows the generalized Rabi law across phi") {
        // a >> 1: Omega = sqrt(Omega0^2 + (phi/tau/2)^2)
        cfg.params.n_atoms = 5000;
        cfg.params.delay_tau = 0.02;
        cfg.method = Method::dde;
        cfg.grid = {2.0, 2001};
        SweepSpec spec{"phase_offset", -pi / 8.0, pi / 4.0, 4, false};
        const auto rows = sweep(cfg, spec);
        const double omega0 = std::sqrt(2.0 / 0.02);
        for (const auto& point : rows) {
            double freq = 0.0, value = 0.0;
            for (const auto& r : point) {
                if (r.statistic == "frequency") freq = r.value;
                if (r.statistic == "error") value = r.value;
                REQUIRE(r.statistic != "error");
            }
            (void)value;
            const double delta = point[0].axis_value / 0.02;
            const double want = std::sqrt(omega0 * omega0 + delta * delta / 4.0);
            CHECK(std::fabs(freq / want - 1.0) < 0.03);
        }
    }
    SUBCASE("bad axis values are recorded, not fatal") {
        SweepSpec spec{"delay_tau", -0.5, 0.01, 2, false};  // first point invalid
        const auto rows = sweep(cfg, spec);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0][0].statistic == "error");
        CHECK(rows[1][0].statistic != "error");
    }
}

TEST_CASE("fitted loss rate crosses kappa(N_c) near the critical mirror size") {
    RunConfig cfg;
    cfg.params = preset("cesium").params(100);
    cfg.params.env_rate = 0.0;  // isolate the cavity loss channel
    cfg.method = Method::dde;
    cfg.grid = {8.0, 4001};
    SweepSpec spec{"n_atoms", 100, 10000, 9, true};
    const auto rows = sweep(cfg, spec);
    // interpolate log N against fitted probability decay rate = kappa
    double n_cross = 0.0;
    double prev_n = 0.0, prev_k = 0.0;
    for (const auto& point : rows) {
        double k = 0.0;
        for (const auto& r : point)
            if (r.statistic == "prob_decay_rate") k = r.value;
        const double n = point[0].axis_value;
        if (prev_k > 0.25 && k <= 0.25) {
            const double f = (prev_k - 0.25) / (prev_k - k);
            n_cross = std::exp(std::log(prev_n) + f * (std::log(n) - std::log(prev_n)));
        }
        prev_n = n;
        prev_k = k;
    }
    const double n_c = 1.0 / cfg.params.delay_tau;
    REQUIRE(n_cross > 0.0);
    CHECK(n_cross > n_c / 2.0);
    CHECK(n_cross < n_c * 2.0);
}

TEST_CASE("compare: exact methods coincide, invalid ones are skipped") {
    RunConfig cfg;
    cfg.params.n_atoms = 100;
    cfg.params.delay_tau = 0.5;
    cfg.grid = {3.0, 1001};
    const CompareReport rep =
        compare(cfg, {Method::dde, Method::series, Method::approx});
    CHECK(rep.regime == "macroscopic");  // a = 50
    REQUIRE(rep.skipped.size() == 1);    // approx outside tau << 1
    CHECK(rep.skipped[0].find("approx") != std::string::npos);
    REQUIRE(rep.pairs.size() == 1);
    CHECK(rep.pairs[0].sup <= 1e-6);
    CHECK(rep.all_within);

    SUBCASE("distance of a method against itself is exactly zero") {
        const CompareReport self = compare(cfg, {Method::series, Method::series});
        CHECK(self.pairs[0].sup == 0.0);
        CHECK(self.pairs[0].l2 == 0.0);
    }
    SUBCASE("report serializes to json") {
        std::ostringstream os;
        write_compare_report(os, rep, cfg, true);
        const auto j = nlohmann::json::parse(os.str());
        CHECK(j["regime"] == "macroscopic");
        CHECK(j["pairs"].size() == 1);
    }
}

TEST_CASE("markovian and transition compare recipes") {
    SUBCASE("tau = 2e-4: dde vs approx within the markovian tolerance") {
        RunConfig cfg;
        cfg.params.n_atoms = 100;
        cfg.params.delay_tau = 2e-4;
        cfg.grid = {3.0, 1501};
        const CompareReport rep = compare(cfg, {Method::dde, Method::approx});
        CHECK(rep.regime == "markovian");
        // floor set by the dropped sin/(2 Omega) term, ~0.035 at N = 100
        CHECK(rep.pairs[0].sup > 0.02);
        CHECK(rep.pairs[0].sup <= rep.pairs[0].tolerance);
        CHECK(rep.all_within);
    }
    SUBCASE("tau = 0.01: dde, approx and spectral-main pairwise within 0.03") {
        RunConfig cfg;
        cfg.params.n_atoms = 100;
        cfg.params.delay_tau = 0.01;
        cfg.grid = {2.0, 1501};
        const CompareReport rep =
            compare(cfg, {Method::dde, Method::approx, Method::spectral_main});
        CHECK(rep.regime == "transition");
        for (const auto& p : rep.pairs) CHECK(p.sup <= 0.03);
        CHECK(rep.all_within);
    }
}

TEST_CASE("configuration errors are rejected up front") {
    RunConfig cfg;
    cfg.params.n_atoms = 100;
    cfg.params.delay_tau = 0.5;
    cfg.grid = {2.0, 1000001};  // above the output cap
    std::ostringstream os;
    CHECK_THROWS_AS(run_simulate(cfg, os), ConfigError);

    cfg.grid = {2.0, 101};
    CHECK_THROWS_AS(compare(cfg, {Method::dde, Method::auto_}), ConfigError);
    // only one method valid for this regime
    CHECK_THROWS_AS(compare(cfg, {Method::dde, Method::approx}), ConfigError);
    // requesting the macroscopic pole sum outside its window
    cfg.method = Method::spectral;
    cfg.params.n_atoms = 3;
    CHECK_THROWS_AS(run_simulate(cfg, os), ConfigError);
}

TEST_CASE("svg plotting is optional and never gates the csv") {
    RunConfig cfg;
    cfg.params.n_atoms = 100;
    cfg.params.delay_tau = 0.01;
    cfg.method = Method::approx;
    cfg.grid = {2.0, 201};
    cfg.reproducible = true;
    cfg.outputs.svg_path = "/tmp/qcavity_test_plot.svg";
    std::ostringstream os;
    run_simulate(cfg, os);
    std::ifstream svg(cfg.outputs.svg_path);
    REQUIRE(svg.good());
    std::stringstream buf;
    buf << svg.rdbuf();
    CHECK(buf.str().find("<svg") != std::string::npos);
    CHECK(buf.str().find("polyline") != std::string::npos);
}

#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "abf/config.hpp"
#include "abf/errors.hpp"

using namespace abf;

TEST_CASE("defaults parse from an empty config") {
    const ExperimentConfig cfg = parse_config_string("");
    CHECK(cfg.engine == Engine::Pde);
    CHECK(cfg.method == BiasMethod::Abf);
    CHECK(cfg.seed == 42);
    CHECK(cfg.potential == PotentialKind::CosineSeparable);
    CHECK(cfg.beta == 1.0);
    CHECK(cfg.resolution == std::vector<int>{64, 64});
    CHECK(cfg.m == 1);
    CHECK(cfg.dt == 0.0);
    CHECK(cfg.bins == std::vector<int>{32});
    CHECK(cfg.observables == std::vector<std::string>{"cos_x"});
    CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("a full config round-trips through render and parse") {
    ExperimentConfig cfg;
    cfg.engine = Engine::Sweep;
    cfg.method = BiasMethod::Pabf;
    cfg.seed = 991;
    cfg.threads = 3;
    cfg.label = "sweep with spaces";
    cfg.potential = PotentialKind::CosineCoupled;
    cfg.perturbation = PerturbationKind::Rotational;
    cfg.epsilon = 0.05;
    cfg.beta = 1.75;
    cfg.resolution = {48, 48};
    cfg.dt = 5e-5;
    cfg.t_end = 0.25;
    cfg.output_stride = 7;
    cfg.initial = InitialKind::SkewedXY;
    cfg.init_amplitude = 0.25;
    cfg.n_particles = 5000;
    cfg.bins = {16};
    cfg.schedule = {0.1, 0.2};
    cfg.solver = StationaryMethod::TimeMarch;
    cfg.tol = 1e-8;
    cfg.epsilons = {0.01, 0.03};
    cfg.norm_p = 4.0;
    cfg.reference = ReferenceKind::FixedPoint;
    cfg.fit_start = 0.05;
    cfg.observables = {"cos_x", "sin_x"};

    const std::string text = render_config(cfg);
    const ExperimentConfig back = parse_config_string(text);
    CHECK(back.engine == cfg.engine);
    CHECK(back.method == cfg.method);
    CHECK(back.seed == cfg.seed);
    CHECK(back.threads == cfg.threads);
    CHECK(back.label == cfg.label);
    CHECK(back.potential == cfg.potential);
    CHECK(back.perturbation == cfg.perturbation);
    CHECK(back.epsilon == cfg.epsilon);
    CHECK(back.beta == cfg.beta);
    CHECK(back.resolution == cfg.resolution);
    CHECK(back.dt == cfg.dt);
    CHECK(back.t_end == cfg.t_end);
    CHECK(back.output_stride == cfg.output_stride);
    CHECK(back.initial == cfg.initial);
    CHECK(back.init_amplitude == cfg.init_amplitude);
    CHECK(back.n_particles == cfg.n_particles);
    CHECK(back.bins == cfg.bins);
    CHECK(back.schedule == cfg.schedule);
    CHECK(back.solver == cfg.solver);
    CHECK(back.tol == cfg.tol);
    CHECK(back.epsilons == cfg.epsilons);
    CHECK(back.norm_p == cfg.norm_p);
    CHECK(back.reference == cfg.reference);
    CHECK(back.fit_start == cfg.fit_start);
    CHECK(back.observables == cfg.observables);
}

TEST_CASE("parser reads sections, comments, arrays, and quoted strings") {
    const std::string text =
        "# leading comment\n"
        "[experiment]\n"
        "engine = particles   # trailing comment\n"
        "label = \"three body problem\"\n"
        "\n"
        "[grid]\n"
        "resolution = [32, 32]\n"
        "\n"
        "[run]\n"
        "schedule = [0.1, 0.5, 1.0]\n";
    const ExperimentConfig cfg = parse_config_string(text);
    CHECK(cfg.engine == Engine::Particles);
    CHECK(cfg.label == "three body problem");
    CHECK(cfg.resolution == std::vector<int>{32, 32});
    CHECK(cfg.schedule == std::vector<double>{0.1, 0.5, 1.0});
}

TEST_CASE("unknown keys and sections are errors that cite the line") {
    try {
        parse_config_string("[experiment]\nengine = pde\nwight = 3\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
        CHECK(std::string(e.what()).find("wight") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_string("[physics]\nbeta = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("beta = 1\n"), ConfigError);              // key before section
    CHECK_THROWS_AS(parse_config_string("[force]\nbeta\n"), ConfigError);         // missing '='
    CHECK_THROWS_AS(parse_config_string("[force]\nbeta = fast\n"), ConfigError);  // not a number
    CHECK_THROWS_AS(parse_config_string("[experiment]\nengine = warp\n"), ConfigError);
}

TEST_CASE("provenance section is accepted and ignored") {
    const ExperimentConfig cfg = parse_config_string(
        "[provenance]\nversion = \"0.3\"\ncommand = \"abflab run\"\n[force]\nbeta = 2.0\n");
    CHECK(cfg.beta == 2.0);
}

TEST_CASE("overrides apply by dotted key") {
    ExperimentConfig cfg;
    apply_override(cfg, "force.beta", "2.5");
    apply_override(cfg, "experiment.method", "pabf");
    apply_override(cfg, "grid.resolution", "[16, 16]");
    apply_override(cfg, "run.t_end", "0.5");
    CHECK(cfg.beta == 2.5);
    CHECK(cfg.method == BiasMethod::Pabf);
    CHECK(cfg.resolution == std::vector<int>{16, 16});
    CHECK(cfg.t_end == 0.5);
    CHECK_THROWS_AS(apply_override(cfg, "force", "1"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "run.warp", "1"), ConfigError);
}

TEST_CASE("validation rejects inconsistent physics") {
    ExperimentConfig cfg;

    SUBCASE("grid dimension must match the force dimension") {
        cfg.resolution = {32, 32, 32};
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    }
    SUBCASE("explicit dt must satisfy the stability bound") {
        cfg.dt = 1.0;
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    }
    SUBCASE("beta must be positive") {
        cfg.beta = -1.0;
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    }
    SUBCASE("sweep amplitudes must keep the perturbation inside the unit ball") {
        cfg.engine = Engine::Sweep;
        cfg.perturbation = PerturbationKind::Rotational;
        cfg.epsilons = {0.1, 5.0};
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    }
    SUBCASE("sweep epsilons must ascend") {
        cfg.engine = Engine::Sweep;
        cfg.perturbation = PerturbationKind::Rotational;
        cfg.epsilons = {0.05, 0.01};
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    }
    SUBCASE("initial amplitude must leave the density positive") {
        cfg.init_amplitude = 1.5;
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    }
    SUBCASE("bins must be positive") {
        cfg.engine = Engine::Particles;
        cfg.dt = 1e-4;
        cfg.bins = {0};
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    }
    SUBCASE("unknown observable names are rejected") {
        cfg.observables = {"cos_x", "momentum"};
        CHECK_THROWS_AS(validate_config(cfg), ConfigError);
    }
}

TEST_CASE("enum name round-trips") {
    for (Engine e : {Engine::Pde, Engine::Particles, Engine::Stationary, Engine::Sweep,
                     Engine::Diagnose})
        CHECK(engine_from_name(engine_name(e)) == e);
    for (InitialKind k : {InitialKind::Uniform, InitialKind::SkewedX, InitialKind::SkewedXY})
        CHECK(initial_kind_from_name(initial_kind_name(k)) == k);
    for (ReferenceKind k :
         {ReferenceKind::Conservative, ReferenceKind::FixedPoint, ReferenceKind::Uniform})
        CHECK(reference_kind_from_name(reference_kind_name(k)) == k);
    CHECK_THROWS_AS(engine_from_name("bogus"), ConfigError);
    CHECK_THROWS_AS(initial_kind_from_name("bogus"), ConfigError);
    CHECK_THROWS_AS(reference_kind_from_name("bogus"), ConfigError);
}

TEST_CASE("config files parse from disk and missing files raise io errors") {
    const std::string dir = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp");
    const std::string path = dir + "/abf_test_config.toml";
    {
        std::FILE* f = std::fopen(path.c_str(), "w");
        REQUIRE(f != nullptr);
        std::fputs("[force]\nbeta = 3.25\n", f);
        std::fclose(f);
    }
    CHECK(parse_config_file(path).beta == 3.25);
    CHECK_THROWS_AS(parse_config_file(dir + "/abf_no_such_config.toml"), IoError);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dirichlet_mc/analysis.hpp"
#include "dirichlet_mc/poisson.hpp"
#include "dirichlet_mc/presets.hpp"
#include "dirichlet_mc/quadrature.hpp"
#include "dirichlet_mc/sampling.hpp"

using namespace dmc;
using namespace dmc::poisson;

TEST_CASE("interval model calculus: flat structure, linear h", "[poisson]") {
    auto model = make_interval_model(
        [](double) { return 1.0; }, [](double) { return 0.0; }, 0.0, 1.0, 1.0,
        [](double x) { return x; }, [](double) { return 1.0; },
        [](double) { return 0.0; });
    for (const double x : {0.1, 0.5, 0.9}) {
        REQUIRE(model.gamma_h(x) == 1.0);
        REQUIRE(model.a_h(x) == 0.0);
        REQUIRE(model.gamma_h_gamma_h(x) == 0.0);
    }
}

TEST_CASE("interval model calculus: flat structure, quadratic h", "[poisson]") {
    auto model = make_interval_model(
        [](double) { return 1.0; }, [](double) { return 0.0; }, 0.0, 1.0, 1.0,
        [](double x) { return x * x; }, [](double x) { return 2.0 * x; },
        [](double) { return 2.0; });
    for (const double x : {0.2, 0.5, 0.8}) {
        REQUIRE(model.gamma_h(x) == Catch::Approx(4.0 * x * x));
        REQUIRE(model.a_h(x) == Catch::Approx(1.0));
        REQUIRE(model.gamma_h_gamma_h(x) == Catch::Approx(16.0 * x * x));
        // independent bilinear-form oracle gamma[u,v] = c u' v' with
        // v = gamma[h] differentiated numerically
        const double step = 1e-6;
        const double v_x = (model.gamma_h(x + step) - model.gamma_h(x - step)) / (2 * step);
        REQUIRE(model.gamma_h_gamma_h(x) == Catch::Approx(2.0 * x * v_x).epsilon(1e-7));
    }
}

TEST_CASE("interval model calculus: weighted structure", "[poisson]") {
    auto model = make_interval_model(
        [](double x) { return x * x; }, [](double x) { return 2.0 * x; }, 0.0, 1.0,
        1.0, [](double x) { return x; }, [](double) { return 1.0; },
        [](double) { return 0.0; });
    for (const double x : {0.3, 0.7}) {
        REQUIRE(model.gamma_h(x) == Catch::Approx(x * x));
        REQUIRE(model.a_h(x) == Catch::Approx(x));
        REQUIRE(model.gamma_h_gamma_h(x) == Catch::Approx(2.0 * x * x * x));
        const double step = 1e-6;
        const double v_x = (model.gamma_h(x + step) - model.gamma_h(x - step)) / (2 * step);
        REQUIRE(model.gamma_h_gamma_h(x) == Catch::Approx(x * x * 1.0 * v_x).epsilon(1e-7));
    }
}

TEST_CASE("interval model rejects inconsistent derivatives", "[poisson]") {
    REQUIRE_THROWS_AS(make_interval_model([](double x) { return x * x; },
                                          [](double) { return 0.0; },   // wrong c_x
                                          0.0, 1.0, 1.0, [](double x) { return x; },
                                          [](double) { return 1.0; },
                                          [](double) { return 0.0; }),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(make_interval_model([](double) { return 1.0; },
                                          [](double) { return 0.0; }, 0.0, 1.0,
                                          -2.0,   // bad mass
                                          [](double x) { return x; },
                                          [](double) { return 1.0; },
                                          [](double) { return 0.0; }),
                      std::invalid_argument);
}

TEST_CASE("two-point configuration reproduces the closed-form arithmetic",
          "[poisson]") {
    // points drawn from {2, 3}; gamma[h] = p and gamma[h, gamma[h]] = 3p - 5
    // give per-point values (2, 3) and (1, 4)
    PoissonModel model;
    model.mass = 2.0;
    model.point_sampler = [](RngStream& rng) { return rng.uniform() < 0.5 ? 2.0 : 3.0; };
    model.h = [](double p) { return p; };
    model.gamma_h = [](double p) { return p; };
    model.a_h = [](double) { return 0.0; };
    model.gamma_h_gamma_h = [](double p) { return 3.0 * p - 5.0; };
    bool found = false;
    for (std::uint32_t i = 0; i < 200 && !found; ++i) {
        RngStream rng = derive_substream(500, 0, i);
        const ExtendedSample s = sample_poisson_functional(model, rng);
        if (s.gamma == 5.0) {   // one point of each kind
            found = true;
            REQUIRE(s.x == 5.0);
            REQUIRE(s.gamma_gamma == 5.0);   // N(gamma[h, gamma[h]]) = 1 + 4
            REQUIRE(s.gamma_inv_shift(0.0) == Catch::Approx(-5.0 / 25.0));
            REQUIRE_FALSE(s.degenerate);
        }
    }
    REQUIRE(found);
}

TEST_CASE("empty configuration is degenerate", "[poisson]") {
    auto provider = presets::poisson_interval();
    bool found = false;
    for (std::uint32_t i = 0; i < 400 && !found; ++i) {
        RngStream rng = derive_substream(501, 0, i);
        const ExtendedSample s = provider->sample_extended(rng);
        if (s.gamma == 0.0 && s.x == 0.0) {
            found = true;
            REQUIRE(s.a == 0.0);
            REQUIRE(s.gamma_gamma == 0.0);
            REQUIRE(s.degenerate);
        }
    }
    REQUIRE(found);
}

TEST_CASE("constant h carries no error", "[poisson]") {
    PoissonModel model;
    model.mass = 4.0;
    model.point_sampler = [](RngStream& rng) { return rng.uniform(); };
    model.h = [](double) { return 1.0; };
    model.gamma_h = [](double) { return 0.0; };
    model.a_h = [](double) { return 0.0; };
    model.gamma_h_gamma_h = [](double) { return 0.0; };
    for (std::uint32_t i = 0; i < 50; ++i) {
        RngStream rng = derive_substream(502, 0, i);
        const ExtendedSample s = sample_poisson_functional(model, rng);
        REQUIRE(s.x == std::floor(s.x));   // x counts the points
        REQUIRE(s.gamma == 0.0);
        REQUIRE(s.a == 0.0);
    }
}

TEST_CASE("negative gamma[h] is rejected", "[poisson]") {
    PoissonModel model;
    model.mass = 8.0;
    model.point_sampler = [](RngStream& rng) { return rng.uniform(); };
    model.h = [](double) { return 1.0; };
    model.gamma_h = [](double) { return -1.0; };
    model.a_h = [](double) { return 0.0; };
    model.gamma_h_gamma_h = [](double) { return 0.0; };
    RngStream rng = derive_substream(503, 0, 0);
    REQUIRE_THROWS_AS(sample_poisson_functional(model, rng), std::domain_error);
}

TEST_CASE("per-sample resummation identity on the interval preset", "[poisson]") {
    auto provider = presets::poisson_interval();
    const PoissonModel& model = provider->model();
    for (std::uint32_t i = 0; i < 1000; ++i) {
        RngStream rng = derive_substream(504, 7, i);
        const ExtendedSample s = provider->sample_extended(rng);
        // replay the same stream to recover the drawn configuration
        RngStream replay = derive_substream(504, 7, i);
        const std::uint64_t count = replay.poisson(model.mass);
        double x = 0.0, gamma = 0.0, a = 0.0, gg = 0.0;
        for (std::uint64_t k = 0; k < count; ++k) {
            const double p = model.point_sampler(replay);
            x += model.h(p);
            gamma += model.gamma_h(p);
            a += model.a_h(p);
            gg += model.gamma_h_gamma_h(p);
        }
        REQUIRE(s.x == x);
        REQUIRE(s.gamma == gamma);
        REQUIRE(s.a == a);
        REQUIRE(s.gamma_gamma == gg);
        if (s.gamma > 0.0) {
            // derived Gamma[X, 1/Gamma[X]] times gamma^2 resums the per-point values
            REQUIRE(-s.gamma_inv_shift(0.0) * s.gamma * s.gamma ==
                    Catch::Approx(gg).epsilon(1e-12));
        }
    }
}

TEST_CASE("first moment matches the intensity integral", "[poisson]") {
    auto provider = presets::poisson_interval();   // mass 3, h(x) = x, uniform window
    const double target = analysis::quadrature_oracle(
        [](double x) { return 3.0 * x; }, 0.0, 1.0, 1e-12);
    const auto samples = sample_batch(*provider, 100000, 505, 0);
    std::vector<double> xs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) xs[i] = samples[i].x;
    const MeanStderr m = mean_and_se(xs);
    REQUIRE(std::abs(m.mean - target) <= 3.0 * m.se);
}

TEST_CASE("integration by parts holds on the interval preset", "[poisson]") {
    auto provider = presets::poisson_interval();
    const std::vector<analysis::TestFunction> phis = {
        {"cos", [](double x) { return -std::sin(x); },
         [](double x) { return -std::cos(x); }}};
    const auto checks = analysis::ibp_residual(*provider, phis, 50000, 506);
    REQUIRE(std::abs(checks[0].mean) <= 3.0 * checks[0].se);
}

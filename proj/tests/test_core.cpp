#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "dirichlet_mc/core.hpp"
#include "dirichlet_mc/presets.hpp"
#include "dirichlet_mc/sampling.hpp"

using namespace dmc;

TEST_CASE("validate_triplet passes a clean scalar sample", "[core]") {
    const TripletSample s{{0.0}, {1.0}, {0.0}};
    const auto r = validate_triplet(s, 0.0);
    REQUIRE(r.pass);
    REQUIRE(r.min_eigenvalue == 1.0);
    REQUIRE(r.max_asymmetry == 0.0);
}

TEST_CASE("validate_triplet rejects an indefinite matrix", "[core]") {
    const TripletSample s{{0.0, 0.0}, {0.0, 1.0, 1.0, 0.0}, {0.0, 0.0}};
    const auto r = validate_triplet(s, 1e-9);
    REQUIRE_FALSE(r.pass);
    REQUIRE(r.min_eigenvalue == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("validate_triplet tolerates roundoff-scale asymmetry", "[core]") {
    const TripletSample s{{0.0, 0.0}, {1e-13, 1e-14, 0.0, 1e-13}, {0.0, 0.0}};
    const auto r = validate_triplet(s, 1e-9);
    REQUIRE(r.pass);
    REQUIRE(r.max_asymmetry == Catch::Approx(1e-14));
}

TEST_CASE("validate_triplet flags non-finite entries", "[core]") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const TripletSample s{{nan}, {1.0}, {0.0}};
    const auto r = validate_triplet(s, 1e-9);
    REQUIRE(r.has_nonfinite);
    REQUIRE_FALSE(r.pass);
}

TEST_CASE("derived Gamma[X, 1/(eps+Gamma)] comes from gamma_gamma", "[core]") {
    ExtendedSample s;
    s.gamma = 2.0;
    s.gamma_gamma = 3.0;
    REQUIRE(s.gamma_inv_shift(0.0) == Catch::Approx(-3.0 / 4.0));
    REQUIRE(s.gamma_inv_shift(1.0) == Catch::Approx(-3.0 / 9.0));
}

TEST_CASE("payload attachment uses the chain rule", "[core]") {
    ExtendedSample s;
    s.x = 0.7;
    s.gamma = 2.5;
    attach_payload(
        s, [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); });
    REQUIRE(*s.payload_g == Catch::Approx(std::cos(0.7)));
    REQUIRE(*s.gamma_xg == Catch::Approx(-std::sin(0.7) * 2.5));
}

TEST_CASE("product provider assembles a block-diagonal structure", "[core]") {
    auto p1 = presets::gauss_const_sigma();
    auto p2 = presets::gauss_const_sigma();
    ProductProvider prod(p1, p2);
    REQUIRE(prod.dimension() == 2);
    RngStream rng = derive_substream(5, 0, 0);
    const TripletSample s = prod.sample_triplet(rng);
    REQUIRE(s.dim() == 2);
    REQUIRE(s.gamma[1] == 0.0);
    REQUIRE(s.gamma[2] == 0.0);
    REQUIRE(validate_triplet(s, 1e-9).pass);
}

TEST_CASE("worker count never changes the sampled content", "[core]") {
    auto provider = presets::gauss_const_sigma();
    const auto serial = sample_batch(*provider, 5000, 21, 3, 1);
    const auto threaded = sample_batch(*provider, 5000, 21, 3, 4);
    REQUIRE(serial.size() == threaded.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        REQUIRE(serial[i].x == threaded[i].x);
        REQUIRE(serial[i].gamma == threaded[i].gamma);
        REQUIRE(serial[i].a == threaded[i].a);
    }
}

TEST_CASE("pairwise sum and moment helpers", "[core]") {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1);
    REQUIRE(pairwise_sum(v) == Catch::Approx(1000.0 * 1001.0 / 2.0));
    const MeanStderr m = mean_and_se(v);
    REQUIRE(m.mean == Catch::Approx(500.5));
    const VarianceEstimate var = variance_and_se(v);
    REQUIRE(var.value == Catch::Approx(1000.0 * 1001.0 / 12.0).epsilon(1e-12));
}

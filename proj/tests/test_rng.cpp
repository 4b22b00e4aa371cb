#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dirichlet_mc/rng.hpp"
#include "dirichlet_mc/sampling.hpp"

using namespace dmc;

TEST_CASE("equal stream ids replay identical sequences", "[rng]") {
    RngStream a = derive_substream(42, 0, 0);
    RngStream b = derive_substream(42, 0, 0);
    for (int i = 0; i < 64; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct stream indices differ immediately", "[rng]") {
    RngStream a = derive_substream(42, 0, 0);
    RngStream b = derive_substream(42, 0, 1);
    REQUIRE(a.next_u64() != b.next_u64());
}

TEST_CASE("distinct workers and seeds differ", "[rng]") {
    RngStream a = derive_substream(42, 1, 0);
    RngStream b = derive_substream(43, 1, 0);
    REQUIRE(a.next_u64() != b.next_u64());
    RngStream c = derive_substream(42, 2, 0);
    RngStream d = derive_substream(42, 3, 0);
    REQUIRE(c.next_u64() != d.next_u64());
}

TEST_CASE("uniform ranges", "[rng]") {
    RngStream rng = derive_substream(7, 0, 0);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const double v = rng.uniform_pos();
        REQUIRE(v > 0.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("normal moments", "[rng]") {
    RngStream rng = derive_substream(11, 0, 0);
    const std::size_t n = 200000;
    std::vector<double> z(n);
    for (auto& v : z) v = rng.normal();
    const MeanStderr m = mean_and_se(z);
    REQUIRE(std::abs(m.mean) <= 3.0 * m.se);
    const VarianceEstimate var = variance_and_se(z);
    REQUIRE(std::abs(var.value - 1.0) <= 3.0 * var.se);
    // fourth moment pins the shape beyond mean/variance
    std::vector<double> z4(n);
    for (std::size_t i = 0; i < n; ++i) z4[i] = z[i] * z[i] * z[i] * z[i];
    const MeanStderr m4 = mean_and_se(z4);
    REQUIRE(std::abs(m4.mean - 3.0) <= 4.0 * m4.se);
}

TEST_CASE("poisson mean and variance, small and chunked mean", "[rng]") {
    for (const double lambda : {3.0, 40.0}) {
        RngStream rng = derive_substream(13, 0, lambda < 10 ? 0u : 1u);
        const std::size_t n = 100000;
        std::vector<double> k(n);
        for (auto& v : k) v = static_cast<double>(rng.poisson(lambda));
        const MeanStderr m = mean_and_se(k);
        REQUIRE(std::abs(m.mean - lambda) <= 4.0 * m.se);
        const VarianceEstimate var = variance_and_se(k);
        REQUIRE(std::abs(var.value - lambda) <= 4.0 * var.se);
    }
}

TEST_CASE("inverse normal cdf", "[rng]") {
    REQUIRE(std::abs(inverse_normal_cdf(0.5)) < 1e-14);
    REQUIRE(inverse_normal_cdf(0.975) == Catch::Approx(1.959963984540054).epsilon(1e-10));
    REQUIRE(inverse_normal_cdf(0.025) == Catch::Approx(-1.959963984540054).epsilon(1e-10));
    // round trip through the exact CDF
    for (const double p : {1e-8, 1e-3, 0.2, 0.7, 0.999, 1.0 - 1e-9}) {
        const double x = inverse_normal_cdf(p);
        const double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
        REQUIRE(back == Catch::Approx(p).epsilon(1e-9));
    }
    REQUIRE_THROWS_AS(inverse_normal_cdf(0.0), std::domain_error);
    REQUIRE_THROWS_AS(inverse_normal_cdf(1.0), std::domain_error);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dirichlet_mc/mcspace.hpp"
#include "dirichlet_mc/presets.hpp"
#include "dirichlet_mc/sampling.hpp"

using namespace dmc;
using namespace dmc::mcspace;

namespace {

//! F(U) = U_0^2 + sin(U_0 U_1): smooth with genuinely mixed second partials.
McFunctional mixed_model() {
    McFunctional f;
    f.m = 2;
    f.k = 0;
    f.F = [](const Coords& u, const Coords&) {
        return u[0] * u[0] + std::sin(u[0] * u[1]);
    };
    f.dF = [](std::size_t i, const Coords& u, const Coords&) {
        const double c = std::cos(u[0] * u[1]);
        return i == 0 ? 2.0 * u[0] + u[1] * c : u[0] * c;
    };
    f.d2F = [](std::size_t i, std::size_t j, const Coords& u, const Coords&) {
        const double s = std::sin(u[0] * u[1]);
        const double c = std::cos(u[0] * u[1]);
        if (i == 0 && j == 0) return 2.0 - u[1] * u[1] * s;
        if (i == 1 && j == 1) return -u[0] * u[0] * s;
        return c - u[0] * u[1] * s;   // mixed
    };
    f.has_full_d2F = true;
    return f;
}

} // namespace

TEST_CASE("coordinate weights at the pinned points", "[mcspace]") {
    REQUIRE(coordinate_weights(0.0) == std::pair{0.0, 0.0});
    REQUIRE(coordinate_weights(1.0) == std::pair{0.0, 0.0});
    const auto [w_half, wp_half] = coordinate_weights(0.5);
    REQUIRE(w_half == Catch::Approx(0.0625));
    REQUIRE(wp_half == 0.0);
    const auto [w_q, wp_q] = coordinate_weights(0.25);
    REQUIRE(w_q == Catch::Approx(0.03515625));
    REQUIRE(wp_q == Catch::Approx(0.1875));
    REQUIRE_THROWS_AS(coordinate_weights(-0.1), std::domain_error);
    REQUIRE_THROWS_AS(coordinate_weights(1.1), std::domain_error);
}

TEST_CASE("coordinate weight derivative matches finite differences", "[mcspace]") {
    for (double u = 0.05; u < 1.0; u += 0.1) {
        const double step = 1e-6;
        const double fd =
            (coordinate_weights(u + step).first - coordinate_weights(u - step).first) /
            (2 * step);
        REQUIRE(coordinate_weights(u).second == Catch::Approx(fd).margin(1e-9));
    }
}

TEST_CASE("identity functional: per-sample closed form", "[mcspace]") {
    auto provider = presets::mc_identity();
    for (std::uint32_t i = 0; i < 1000; ++i) {
        RngStream rng = derive_substream(600, 0, i);
        const ExtendedSample s = provider->sample_extended(rng);
        const auto [w, wp] = coordinate_weights(s.x);
        REQUIRE(s.gamma == Catch::Approx(w).margin(1e-16));
        REQUIRE(s.a == Catch::Approx(0.5 * wp).margin(1e-16));
        REQUIRE(s.gamma_gamma == Catch::Approx(w * wp).margin(1e-16));
        REQUIRE(s.gamma >= 0.0);
        REQUIRE(s.gamma > 0.0);   // boundary hits are a null event
    }
}

TEST_CASE("two-coordinate sum matches the weight oracle", "[mcspace]") {
    McFunctional f;
    f.m = 2;
    f.k = 0;
    f.F = [](const Coords& u, const Coords&) { return u[0] + u[1]; };
    f.dF = [](std::size_t, const Coords&, const Coords&) { return 1.0; };
    f.d2F = [](std::size_t, std::size_t, const Coords&, const Coords&) { return 0.0; };
    f.has_full_d2F = true;
    McProvider provider(f, "sum");
    for (std::uint32_t i = 0; i < 500; ++i) {
        RngStream rng = derive_substream(601, 0, i);
        const ExtendedSample s = provider.sample_extended(rng);
        // recover the coordinates from the same stream
        RngStream replay = derive_substream(601, 0, i);
        const double u0 = replay.uniform(), u1 = replay.uniform();
        const auto [w0, wp0] = coordinate_weights(u0);
        const auto [w1, wp1] = coordinate_weights(u1);
        REQUIRE(s.x == u0 + u1);
        REQUIRE(s.gamma == Catch::Approx(w0 + w1).margin(1e-16));
        REQUIRE(s.a == Catch::Approx(0.5 * (wp0 + wp1)).margin(1e-16));
        REQUIRE(s.gamma_gamma == Catch::Approx(wp0 * w0 + wp1 * w1).margin(1e-15));
    }
}

TEST_CASE("square functional: hand chain rule", "[mcspace]") {
    McFunctional f;
    f.m = 1;
    f.k = 0;
    f.F = [](const Coords& u, const Coords&) { return u[0] * u[0]; };
    f.dF = [](std::size_t, const Coords& u, const Coords&) { return 2.0 * u[0]; };
    f.d2F = [](std::size_t, std::size_t, const Coords&, const Coords&) { return 2.0; };
    f.has_full_d2F = true;
    McProvider provider(f, "square");
    for (std::uint32_t i = 0; i < 500; ++i) {
        RngStream rng = derive_substream(602, 0, i);
        const ExtendedSample s = provider.sample_extended(rng);
        RngStream replay = derive_substream(602, 0, i);
        const double u = replay.uniform();
        const auto [w, wp] = coordinate_weights(u);
        REQUIRE(s.x == u * u);
        REQUIRE(s.gamma == Catch::Approx(4.0 * u * u * w).margin(1e-15));
        REQUIRE(s.a == Catch::Approx(w + u * wp).margin(1e-15));
        // gamma_gamma = F' (2 F' F'' w + F'^2 w') w
        const double expect = 2.0 * u * (4.0 * u * 2.0 * w + 4.0 * u * u * wp) * w;
        REQUIRE(s.gamma_gamma == Catch::Approx(expect).margin(1e-15));
    }
}

TEST_CASE("second-order state matches the finite-difference oracle", "[mcspace]") {
    const McFunctional f = mixed_model();
    McProvider provider(f, "mixed");
    std::size_t interior = 0;
    for (std::uint32_t i = 0; i < 200; ++i) {
        RngStream rng = derive_substream(603, 0, i);
        const ExtendedSample s = provider.sample_extended(rng);
        RngStream replay = derive_substream(603, 0, i);
        Coords u = {replay.uniform(), replay.uniform()};
        if (u[0] < 0.05 || u[0] > 0.95 || u[1] < 0.05 || u[1] > 0.95) continue;
        ++interior;
        auto gamma_of = [&](const Coords& uu) {
            double g = 0.0;
            for (std::size_t j = 0; j < 2; ++j) {
                const double df = f.dF(j, uu, {});
                g += df * df * coordinate_weights(uu[j]).first;
            }
            return g;
        };
        const double delta = 1e-5;
        double oracle = 0.0;
        for (std::size_t j = 0; j < 2; ++j) {
            Coords up = u, dn = u;
            up[j] += delta;
            dn[j] -= delta;
            const double dgamma = (gamma_of(up) - gamma_of(dn)) / (2.0 * delta);
            oracle += f.dF(j, u, {}) * dgamma * coordinate_weights(u[j]).first;
        }
        REQUIRE(s.gamma_gamma ==
                Catch::Approx(oracle).epsilon(1e-6).margin(1e-10));
    }
    REQUIRE(interior > 100);
}

TEST_CASE("extended sampling demands full mixed partials", "[mcspace]") {
    McFunctional f = mixed_model();
    f.has_full_d2F = false;
    RngStream rng = derive_substream(604, 0, 0);
    REQUIRE_THROWS_AS(sample_mc_extended(f, rng), std::logic_error);
    // triplet sampling still fine
    REQUIRE_NOTHROW(sample_mc_triplet(f, rng));
}

TEST_CASE("partials self-test catches a wrong derivative", "[mcspace]") {
    McFunctional good = mixed_model();
    RngStream r1 = derive_substream(605, 0, 0);
    REQUIRE(partials_selftest(good, 32, r1).pass);
    McFunctional bad = mixed_model();
    bad.dF = [](std::size_t, const Coords&, const Coords&) { return 0.0; };
    RngStream r2 = derive_substream(605, 0, 1);
    REQUIRE_FALSE(partials_selftest(bad, 32, r2).pass);
}

TEST_CASE("irregular coordinates pass through without error weight", "[mcspace]") {
    McFunctional f;
    f.m = 1;
    f.k = 1;
    // V_0 drives a discontinuous branch; X stays smooth in U_0
    f.F = [](const Coords& u, const Coords& v) {
        return v[0] < 0.5 ? u[0] : u[0] + 2.0;
    };
    f.dF = [](std::size_t, const Coords&, const Coords&) { return 1.0; };
    f.d2F = [](std::size_t, std::size_t, const Coords&, const Coords&) { return 0.0; };
    McProvider provider(f, "branch");
    for (std::uint32_t i = 0; i < 200; ++i) {
        RngStream rng = derive_substream(606, 0, i);
        const ScalarTriplet s = provider.sample_scalar(rng);
        RngStream replay = derive_substream(606, 0, i);
        const double u = replay.uniform();
        REQUIRE(s.gamma == Catch::Approx(coordinate_weights(u).first).margin(1e-16));
    }
}

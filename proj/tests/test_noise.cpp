#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "she/harness.hpp"
#include "she/noise.hpp"

using namespace she;

TEST_CASE("spectral multiplier", "[noise]") {
    auto grid = build_grid(1, 16);

    SECTION("mode 0 is 1 for any delta") {
        for (double d : {0.0, 0.05, 0.3}) {
            auto m = build_multiplier(grid, d);
            CHECK(m.value[grid->index_of({0, 0, 0})] == 1.0);
        }
    }

    SECTION("delta^2 alpha = 1 gives 1/2 at order 1") {
        const double delta = 1.0 / (2.0 * std::numbers::pi);  // delta^2 alpha(1) = 1
        auto m = build_multiplier(grid, delta, 1);
        CHECK(m.value[grid->index_of({1, 0, 0})] == Catch::Approx(0.5));
    }

    SECTION("delta = 0 means white noise (all ones)") {
        auto m = build_multiplier(grid, 0.0);
        for (double v : m.value) CHECK(v == 1.0);
    }

    SECTION("values in (0,1], nonincreasing in |m|") {
        auto m = build_multiplier(grid, 0.2, 2);
        double prev = 1.0;
        for (int k = 0; k <= 8; ++k) {
            const double v = m.value[grid->index_of({k, 0, 0})];
            CHECK(v > 0.0);
            CHECK(v <= prev + 1e-15);
            prev = v;
        }
    }

    SECTION("argument validation") {
        CHECK_THROWS_AS(build_multiplier(grid, -0.1), std::invalid_argument);
        CHECK_THROWS_AS(build_multiplier(grid, 0.1, 0), std::invalid_argument);
    }
}

TEST_CASE("noise path increments", "[noise]") {
    auto grid = build_grid(1, 16);
    NoisePath path(grid, 99, 1e-3, 8, 1);
    std::vector<std::complex<double>> a(grid->num_points()), b(grid->num_points());

    SECTION("replay is bit-exact") {
        path.raw_increment(3, 0, a.data());
        path.raw_increment(3, 0, b.data());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
        NoisePath again(grid, 99, 1e-3, 8, 1);
        again.raw_increment(3, 0, b.data());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }

    SECTION("steps and seeds decorrelate") {
        path.raw_increment(0, 0, a.data());
        path.raw_increment(1, 0, b.data());
        CHECK(a[1] != b[1]);
        NoisePath other(grid, 100, 1e-3, 8, 1);
        other.raw_increment(0, 0, b.data());
        CHECK(a[1] != b[1]);
    }

    SECTION("conjugate symmetry, self-conjugate modes real") {
        path.raw_increment(2, 0, a.data());
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto c = a[grid->conjugate_index(i)];
            CHECK(a[i].real() == c.real());
            CHECK(a[i].imag() == -c.imag());
        }
        CHECK(a[grid->index_of({0, 0, 0})].imag() == 0.0);
        CHECK(a[grid->index_of({8, 0, 0})].imag() == 0.0);
    }

    SECTION("out-of-range access throws") {
        CHECK_THROWS_AS(path.raw_increment(8, 0, a.data()), std::out_of_range);
        CHECK_THROWS_AS(path.raw_increment(0, 1, a.data()), std::out_of_range);
    }

    SECTION("sample_increment applies the multiplier") {
        auto mult = build_multiplier(grid, 0.3);
        Field f = sample_increment(path, 1, mult);
        path.raw_increment(1, 0, a.data());
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(f.spectral(0)[i] == a[i] * mult.value[i]);
    }
}

TEST_CASE("empirical per-mode variance matches dt m_delta^2", "[noise][mc]") {
    auto grid = build_grid(1, 16);
    const auto chk = covariance_check(grid, 0.2, 1, 100000, 20260808);
    INFO("failures " << chk.failures << " of " << chk.modes << ", max z " << chk.max_z);
    CHECK(chk.pass);
}

TEST_CASE("weighted inner product", "[noise]") {
    auto grid = build_grid(1, 16);
    auto mult = build_multiplier(grid, 0.15);
    std::mt19937 eng(5);
    std::normal_distribution<double> dist;
    std::vector<double> fv(grid->num_points()), gv(grid->num_points());
    for (auto& x : fv) x = dist(eng);
    for (auto& x : gv) x = dist(eng);
    Field f = Field::from_physical(grid, fv);
    Field g = Field::from_physical(grid, gv);

    SECTION("positive semidefinite and dominated by the L2 norm") {
        const double q = weighted_inner(f, f, mult);
        CHECK(q >= 0.0);
        CHECK(q <= l2_norm(f) * l2_norm(f) + 1e-12);
    }

    SECTION("symmetric") {
        CHECK(weighted_inner(f, g, mult) == Catch::Approx(weighted_inner(g, f, mult)).margin(1e-13));
    }

    SECTION("delta = 0 reduces to the plain L2 inner product") {
        auto white = build_multiplier(grid, 0.0);
        double dot = 0.0;
        for (std::size_t p = 0; p < grid->num_points(); ++p) dot += fv[p] * gv[p];
        dot /= static_cast<double>(grid->num_points());
        CHECK(weighted_inner(f, g, white) == Catch::Approx(dot).margin(1e-12));
    }

    SECTION("constant fields give the product of levels") {
        Field a = Field::constant(grid, 2.0);
        Field b = Field::constant(grid, -1.5);
        CHECK(weighted_inner(a, b, mult) == Catch::Approx(-3.0).margin(1e-12));
    }

    SECTION("grid mismatch rejected") {
        auto other = build_grid(1, 32);
        Field h = Field::constant(other, 1.0);
        CHECK_THROWS_AS(weighted_inner(f, h, mult), std::invalid_argument);
    }
}

TEST_CASE("covariance kernel", "[noise]") {
    auto grid = build_grid(1, 32);
    auto mult = build_multiplier(grid, 0.1);

    SECTION("maximal and positive at the origin") {
        const double r0 = covariance_kernel(mult, std::array<double, 1>{0.0});
        CHECK(r0 > 0.0);
        for (double z : {0.03, 0.11, 0.29, 0.47})
            CHECK(covariance_kernel(mult, std::array<double, 1>{z}) < r0);
        double sum = 0.0;
        for (double v : mult.value) sum += v * v;
        CHECK(r0 == Catch::Approx(sum));
    }

    SECTION("even in z") {
        for (double z : {0.07, 0.21, 0.38}) {
            const double a = covariance_kernel(mult, std::array<double, 1>{z});
            const double b = covariance_kernel(mult, std::array<double, 1>{-z});
            CHECK(a == Catch::Approx(b).margin(1e-12));
        }
    }

    SECTION("white noise gives a discrete delta scaled by the mode count") {
        auto white = build_multiplier(grid, 0.0);
        const double n = static_cast<double>(grid->num_points());
        CHECK(covariance_kernel(white, std::array<double, 1>{0.0}) == Catch::Approx(n));
        CHECK(covariance_kernel(white, std::array<double, 1>{1.0 / n}) ==
              Catch::Approx(0.0).margin(1e-9));
    }

    SECTION("matches the closed-form resolvent autocorrelation") {
        auto fine = build_multiplier(build_grid(1, 256), 0.2);
        for (double z : {0.0, 0.1, 0.25}) {
            const double spectral = covariance_kernel(fine, std::array<double, 1>{z});
            const double direct = oracle::covariance_r(z, 0.2);
            CHECK(spectral == Catch::Approx(direct).margin(1e-8));
        }
    }
}

TEST_CASE("reference blow-up rates", "[noise]") {
    CHECK(k_reference(2, 2, 0.1) == Catch::Approx(100.0));
    CHECK(k_reference(1, 3, 0.1) == Catch::Approx(10.0));
    CHECK(k_reference(1, 2, std::exp(-1.0)) == Catch::Approx(1.0));
    CHECK(k_reference(1, 1, 0.3) == 1.0);
    CHECK(k_reference(2, 1, 0.25) == Catch::Approx(4.0));
    CHECK_THROWS_AS(k_reference(3, 1, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(k_reference(2, 2, 0.7), std::invalid_argument);
}

TEST_CASE("convolution variance", "[noise]") {
    SECTION("mode-0-only multiplier integrates to t") {
        auto grid = build_grid(1, 8);
        SpectralMultiplier m;
        m.grid = grid;
        m.delta = 0.0;
        m.value.assign(grid->num_points(), 0.0);
        m.value[grid->index_of({0, 0, 0})] = 1.0;
        CHECK(convolution_variance(m, 0.37) == Catch::Approx(0.37));
    }

    SECTION("zero at t = 0, negative t rejected, nondecreasing in t") {
        auto mult = build_multiplier(build_grid(1, 64), 0.05);
        CHECK(convolution_variance(mult, 0.0) == 0.0);
        CHECK_THROWS_AS(convolution_variance(mult, -1.0), std::invalid_argument);
        double prev = 0.0;
        for (double t : {0.01, 0.05, 0.1, 0.25, 0.5}) {
            const double k = convolution_variance(mult, t);
            CHECK(k >= prev);
            prev = k;
        }
    }

    SECTION("matches quadrature of the covariance double integral") {
        const double delta = 0.05, t = 0.25;
        const double quad = oracle::quad_convolution_variance(delta, t);
        const double fine = convolution_variance(build_multiplier(build_grid(1, 256), delta), t);
        const double coarse = convolution_variance(build_multiplier(build_grid(1, 64), delta), t);
        INFO("quad " << quad << " fine " << fine << " coarse " << coarse);
        CHECK(std::abs(fine - quad) <= 1e-8);
        // N = 64 truncates the spectral tail at ~1.4e-8
        CHECK(std::abs(coarse - quad) <= 3e-8);
    }

    SECTION("sup over t bounded by a flat multiple of K_1 across delta, d = 2") {
        auto grid = build_grid(2, 32);
        double rmin = 0.0, rmax = 0.0;
        bool first = true;
        for (double delta : {0.25, 0.125, 0.0625, 0.03125, 0.015625}) {
            const double k = convolution_variance(build_multiplier(grid, delta), 0.25);
            const double ratio = k / k_reference(1, 2, delta);
            if (first || ratio < rmin) rmin = ratio;
            if (first || ratio > rmax) rmax = ratio;
            first = false;
        }
        CHECK(rmax / rmin <= 4.0);
    }
}

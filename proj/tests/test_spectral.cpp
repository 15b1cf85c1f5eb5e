#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "she/field.hpp"
#include "she/torus_grid.hpp"

using namespace she;

namespace {

Field random_field(const std::shared_ptr<const TorusGrid>& grid, unsigned seed) {
    std::mt19937 eng(seed);
    std::normal_distribution<double> dist;
    std::vector<double> v(grid->num_points());
    for (auto& x : v) x = dist(eng);
    return Field::from_physical(grid, std::move(v));
}

}  // namespace

TEST_CASE("grid construction and eigenvalues", "[spectral]") {
    const double pi2 = 4.0 * std::numbers::pi * std::numbers::pi;

    SECTION("d=1 N=4 eigenvalue table") {
        auto grid = build_grid(1, 4);
        REQUIRE(grid->num_points() == 4);
        // m in {0, 1, 2, -1} in FFT index order
        CHECK(grid->eigenvalue(grid->index_of({0, 0, 0})) == 0.0);
        CHECK(grid->eigenvalue(grid->index_of({1, 0, 0})) == Catch::Approx(pi2));
        CHECK(grid->eigenvalue(grid->index_of({-1, 0, 0})) == Catch::Approx(pi2));
        CHECK(grid->eigenvalue(grid->index_of({2, 0, 0})) == Catch::Approx(4.0 * pi2));
    }

    SECTION("d=2 N=4 mode count and alpha((1,1))") {
        auto grid = build_grid(2, 4);
        REQUIRE(grid->num_points() == 16);
        CHECK(grid->eigenvalue(grid->index_of({1, 1, 0})) == Catch::Approx(2.0 * pi2));
    }

    SECTION("rejects bad arguments") {
        CHECK_THROWS_AS(build_grid(0, 8), std::invalid_argument);
        CHECK_THROWS_AS(build_grid(4, 8), std::invalid_argument);
        CHECK_THROWS_AS(build_grid(1, 7), std::invalid_argument);
        CHECK_THROWS_AS(build_grid(1, 2), std::invalid_argument);
    }

    SECTION("two-sided power scaling of sorted positive eigenvalues, d=1 N=64") {
        auto grid = build_grid(1, 64);
        std::vector<double> alphas;
        for (std::size_t i = 0; i < grid->num_points(); ++i)
            if (grid->eigenvalue(i) > 0.0) alphas.push_back(grid->eigenvalue(i));
        std::sort(alphas.begin(), alphas.end());
        const double c = pi2 + 1.0;
        for (std::size_t j = 1; j <= alphas.size(); ++j) {
            const double jj = static_cast<double>(j);
            CHECK(alphas[j - 1] >= jj * jj / c);
            CHECK(alphas[j - 1] <= c * jj * jj);
        }
    }

    SECTION("alpha(0) = 0 and alpha > 0 elsewhere") {
        auto grid = build_grid(3, 4);
        for (std::size_t i = 0; i < grid->num_points(); ++i) {
            const auto m = grid->wavevector(i);
            if (m[0] == 0 && m[1] == 0 && m[2] == 0)
                CHECK(grid->eigenvalue(i) == 0.0);
            else
                CHECK(grid->eigenvalue(i) > 0.0);
        }
    }
}

TEST_CASE("transforms", "[spectral]") {
    auto grid = build_grid(1, 16);

    SECTION("constant field has only mode 0") {
        Field f = transform(Field::constant(grid, 1.0), Representation::spectral);
        auto c = f.spectral(0);
        CHECK(c[0].real() == Catch::Approx(1.0));
        for (std::size_t i = 1; i < grid->num_points(); ++i) CHECK(std::abs(c[i]) < 1e-14);
    }

    SECTION("cos(2 pi x) splits into modes +-1") {
        std::vector<double> v(grid->num_points());
        for (std::size_t p = 0; p < grid->num_points(); ++p)
            v[p] = std::cos(2.0 * std::numbers::pi * grid->coordinate(p, 0));
        Field f = transform(Field::from_physical(grid, std::move(v)), Representation::spectral);
        auto c = f.spectral(0);
        CHECK(c[grid->index_of({1, 0, 0})].real() == Catch::Approx(0.5));
        CHECK(c[grid->index_of({-1, 0, 0})].real() == Catch::Approx(0.5));
        CHECK(std::abs(c[0]) < 1e-14);
    }

    SECTION("round trip is the identity within 1e-12") {
        Field f = random_field(grid, 7);
        Field back = transform(transform(f, Representation::spectral), Representation::physical);
        for (std::size_t p = 0; p < grid->num_points(); ++p)
            CHECK(back.physical(0)[p] == Catch::Approx(f.physical(0)[p]).margin(1e-12));
    }

    SECTION("idempotent when target equals current representation") {
        Field f = random_field(grid, 8);
        Field same = transform(f, Representation::physical);
        for (std::size_t p = 0; p < grid->num_points(); ++p)
            CHECK(same.physical(0)[p] == f.physical(0)[p]);
    }

    SECTION("conjugate symmetry of real input") {
        Field f = transform(random_field(grid, 9), Representation::spectral);
        auto c = f.spectral(0);
        for (std::size_t i = 0; i < grid->num_points(); ++i) {
            const auto conj = c[grid->conjugate_index(i)];
            CHECK(c[i].real() == Catch::Approx(conj.real()).margin(1e-13));
            CHECK(c[i].imag() == Catch::Approx(-conj.imag()).margin(1e-13));
        }
    }

    SECTION("Parseval: physical L2 norm equals coefficient norm") {
        Field f = random_field(grid, 10);
        Field s = transform(f, Representation::spectral);
        CHECK(l2_norm(f) == Catch::Approx(l2_norm(s)).margin(1e-12));
    }
}

TEST_CASE("heat propagation", "[spectral]") {
    auto grid = build_grid(1, 32);
    Field f = transform(random_field(grid, 11), Representation::spectral);

    SECTION("t = 0 is the identity") {
        Field g = heat_propagate(f, 0.0);
        for (std::size_t i = 0; i < grid->num_points(); ++i)
            CHECK(g.spectral(0)[i] == f.spectral(0)[i]);
    }

    SECTION("constant fields are invariant") {
        Field c = transform(Field::constant(grid, 2.5), Representation::spectral);
        Field g = heat_propagate(c, 0.7);
        CHECK(g.spectral(0)[0].real() == Catch::Approx(2.5));
        CHECK(l2_norm(g) == Catch::Approx(2.5).margin(1e-13));
    }

    SECTION("single mode decays by exp(-4 pi^2 t)") {
        Field s = Field::zeros(grid, Representation::spectral);
        s.spectral(0)[grid->index_of({1, 0, 0})] = 0.5;
        s.spectral(0)[grid->index_of({-1, 0, 0})] = 0.5;
        Field g = heat_propagate(s, 0.1);
        const double factor = std::exp(-0.4 * std::numbers::pi * std::numbers::pi);
        CHECK(g.spectral(0)[grid->index_of({1, 0, 0})].real() == Catch::Approx(0.5 * factor));
    }

    SECTION("semigroup property") {
        Field a = heat_propagate(f, 0.3);
        Field b = heat_propagate(heat_propagate(f, 0.1), 0.2);
        for (std::size_t i = 0; i < grid->num_points(); ++i)
            CHECK(std::abs(a.spectral(0)[i] - b.spectral(0)[i]) < 1e-12);
    }

    SECTION("mean invariant under propagation") {
        CHECK(spatial_mean(heat_propagate(f, 0.5)) == Catch::Approx(spatial_mean(f)).margin(1e-13));
    }

    SECTION("negative time rejected") {
        CHECK_THROWS_AS(heat_propagate(f, -0.1), std::invalid_argument);
    }
}

TEST_CASE("gradient and divergence", "[spectral]") {
    auto grid = build_grid(2, 8);

    SECTION("gradient of constant vanishes") {
        Field c = transform(Field::constant(grid, 3.0), Representation::spectral);
        Field g = gradient(c);
        for (const auto& v : g.spectral()) CHECK(std::abs(v) < 1e-14);
    }

    SECTION("divergence of gradient = minus the Laplacian away from Nyquist") {
        Field f = Field::zeros(grid, Representation::spectral);
        std::vector<std::size_t> modes = {grid->index_of({1, 2, 0}), grid->index_of({-1, -2, 0}),
                                          grid->index_of({3, 0, 0}), grid->index_of({-3, 0, 0})};
        for (auto i : modes) f.spectral(0)[i] = 1.0;
        Field lap = divergence(gradient(f));
        for (auto i : modes)
            CHECK(lap.spectral(0)[i].real() == Catch::Approx(-grid->eigenvalue(i)));
    }

    SECTION("divergence image has zero mean") {
        std::mt19937 eng(3);
        std::normal_distribution<double> dist;
        Field v = Field::zeros(grid, Representation::physical, 2);
        for (auto& x : v.physical()) x = dist(eng);
        Field d = divergence(transform(v, Representation::spectral));
        CHECK(std::abs(d.spectral(0)[0]) == 0.0);
    }

    SECTION("arity errors") {
        Field scalar = Field::zeros(grid, Representation::spectral, 1);
        Field vec = Field::zeros(grid, Representation::spectral, 2);
        CHECK_THROWS_AS(divergence(scalar), std::invalid_argument);
        CHECK_THROWS_AS(gradient(vec), std::invalid_argument);
    }
}

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "qpr/error.hpp"
#include "qpr/scsa.hpp"

using namespace qpr;

namespace {

scsa::Signal grid_signal(std::vector<double> y, double dx) { return {std::move(y), 1.0 / dx}; }

std::vector<double> random_potential(Rng& rng, std::size_t n) {
    std::vector<double> y(n);
    for (auto& v : y) v = rng.uniform(0.0, 1.0);
    return y;
}

}  // namespace

TEST_CASE("2 sech^2 has one bound state at kappa 1 and reconstructs itself") {
    const auto y = oracle::sech2_potential(2.0, -15.0, 15.0, 0.05);
    const auto sig = grid_signal(y, 0.05);
    const auto spec = scsa::solve_negative_spectrum(scsa::build_operator(sig, 1.0), 1.0, sig.dt());
    REQUIRE(spec.count() == 1);
    CHECK(std::abs(spec.kappas[0] - 1.0) <= 1e-3);

    const auto stack = scsa::scsa_reconstruction(1.0, sig, 1);
    const std::size_t lo = y.size() / 10, hi = y.size() - y.size() / 10;
    double ss = 0.0;
    for (std::size_t i = lo; i < hi; ++i) ss += std::pow(stack.reconstruction[i] - y[i], 2);
    CHECK(std::sqrt(ss / static_cast<double>(hi - lo)) <= 1e-2);
}

TEST_CASE("6 sech^2 has kappa {2, 1}") {
    const auto sig = grid_signal(oracle::sech2_potential(6.0, -15.0, 15.0, 0.05), 0.05);
    const auto spec = scsa::solve_negative_spectrum(scsa::build_operator(sig, 1.0), 1.0, sig.dt());
    REQUIRE(spec.count() == 2);
    CHECK(std::abs(spec.kappas[0] - 2.0) <= 1e-3);
    CHECK(std::abs(spec.kappas[1] - 1.0) <= 1e-3);
}

TEST_CASE("operator stencil") {
    const scsa::Signal s{{1.0, 2.0, 3.0}, 10.0};
    const auto t = scsa::build_operator(s, 0.5);
    // h^2/dt^2 = 0.25 * 100 = 25
    REQUIRE(t.diag.size() == 3);
    REQUIRE(t.off.size() == 2);
    for (std::size_t i = 0; i < 3; ++i) CHECK(t.diag[i] == doctest::Approx(49.0 - static_cast<double>(i)));
    for (double v : t.off) CHECK(v == doctest::Approx(-25.0));
    CHECK_THROWS_WITH_AS(scsa::build_operator(s, 0.0), "semi-classical parameter h must be positive, got 0.000000", Error);
}

TEST_CASE("tridiagonal eigenvalues match a dense Jacobi solve") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto y = random_potential(rng, 64);
        const scsa::Signal s{y, 1.0};
        const auto ev = scsa::tridiagonal_eigenvalues(scsa::build_operator(s, 0.5));
        const auto ref = oracle::jacobi_eigenvalues(oracle::schrodinger_dense(y, 0.5, 1.0));
        REQUIRE(ev.size() == ref.size());
        for (std::size_t i = 0; i < ev.size(); ++i) CHECK(std::abs(ev[i] - ref[i]) <= 1e-8);
    }
}

TEST_CASE("eigenpairs satisfy H psi = lambda psi, are orthonormal and sign-fixed") {
    Rng rng(5);
    std::vector<double> y(200);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 + std::sin(0.2 * static_cast<double>(i)) + 0.1 * rng.uniform();
    const scsa::Signal s{y, 100.0};
    const double h = 0.05;
    const auto op = scsa::build_operator(s, h);
    const auto spec = scsa::solve_negative_spectrum(op, h, s.dt());
    REQUIRE(spec.count() >= 3);
    for (std::size_t n = 0; n < spec.count(); ++n) {
        const auto psi = spec.eigenfunctions.row(n);
        const double lambda = -spec.kappas[n] * spec.kappas[n];
        double resid = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < psi.size(); ++i) {
            double hv = op.diag[i] * psi[i];
            if (i > 0) hv += op.off[i - 1] * psi[i - 1];
            if (i + 1 < psi.size()) hv += op.off[i] * psi[i + 1];
            resid = std::max(resid, std::abs(hv - lambda * psi[i]));
            scale = std::max(scale, std::abs(psi[i]));
        }
        CHECK(resid <= 1e-6 * scale * std::abs(op.diag[0]));
        double norm = 0.0;
        for (double v : psi) norm += v * v * s.dt();
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-10));
        const auto big = std::max_element(psi.begin(), psi.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
        CHECK(*big > 0.0);
        for (std::size_t m = 0; m < n; ++m) {
            const auto phi = spec.eigenfunctions.row(m);
            double dot = 0.0;
            for (std::size_t i = 0; i < psi.size(); ++i) dot += psi[i] * phi[i] * s.dt();
            CHECK(std::abs(dot) <= 1e-8);
        }
    }
    for (std::size_t n = 1; n < spec.count(); ++n) CHECK(spec.kappas[n - 1] > spec.kappas[n]);
}

TEST_CASE("spectral floor: eigenvalues lie above -max(y)") {
    Rng rng(2);
    const auto y = random_potential(rng, 100);
    const auto ev = scsa::tridiagonal_eigenvalues(scsa::build_operator({y, 1.0}, 0.2));
    CHECK(ev.front() >= -*std::max_element(y.begin(), y.end()) - 1e-12);
}

TEST_CASE("smaller h admits more bound states") {
    Rng rng(3);
    const auto y = random_potential(rng, 300);
    const scsa::Signal s{y, 100.0};
    const auto small = scsa::solve_negative_spectrum(scsa::build_operator(s, 0.5 / 100.0), 0.005, s.dt());
    const auto big = scsa::solve_negative_spectrum(scsa::build_operator(s, 1.0 / 100.0), 0.01, s.dt());
    CHECK(small.count() >= big.count());
}

TEST_CASE("zero potential has no bound states") {
    const scsa::Signal s{std::vector<double>(50, 0.0), 100.0};
    CHECK(scsa::solve_negative_spectrum(scsa::build_operator(s, 0.1), 0.1, s.dt()).count() == 0);
    try {
        scsa::scsa_reconstruction(0.1, s, 1);
        FAIL("expected InsufficientSpectrum");
    } catch (const InsufficientSpectrum& e) {
        CHECK(e.code() == "InsufficientSpectrum");
        CHECK(e.found() == 0);
        CHECK(e.requested() == 1);
    }
    CHECK_THROWS_AS(scsa::scsa_reconstruction(0.1, s, 0), Error);
}

TEST_CASE("components are non-negative and sum to the reconstruction") {
    std::vector<double> y(500);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.5 + 0.5 * std::sin(2 * 3.14159 * 1.2 * i / 100.0);
    const scsa::Signal s{y, 100.0};
    const double h = 1.0 / (6.0 * 6.0);
    const auto stack = scsa::scsa_reconstruction(h, s, 20);
    for (std::size_t i = 0; i < y.size(); ++i) {
        double sum = 0.0;
        for (std::size_t n = 0; n < 20; ++n) {
            CHECK(stack.components(n, i) >= 0.0);
            sum += stack.components(n, i);
        }
        CHECK(sum == doctest::Approx(stack.reconstruction[i]).epsilon(1e-12));
    }
}

TEST_CASE("deeper decompositions reconstruct better") {
    std::vector<double> y(500);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.5 + 0.4 * std::sin(2 * 3.14159 * 1.1 * i / 100.0);
    const scsa::Signal s{y, 100.0};
    const double h = 1.0 / 64.0;
    const auto err = [&](std::size_t n) {
        const auto r = scsa::scsa_reconstruction(h, s, n).reconstruction;
        double e = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) e += std::pow(y[i] - r[i], 2);
        return std::sqrt(e);
    };
    CHECK(err(20) < err(5));
}

TEST_CASE("signal validation") {
    CHECK_THROWS_AS(scsa::Signal({{1.0}, 100.0}).validate(), Error);
    CHECK_THROWS_AS(scsa::Signal({{1.0, 2.0}, 0.0}).validate(), Error);
    CHECK_THROWS_AS(scsa::Signal({{1.0, NAN}, 100.0}).validate(), Error);
}

#include <cmath>
#include <vector>

#include "doctest.h"
#include "nets.hpp"
#include "revpath/cme.hpp"
#include "revpath/error.hpp"
#include "revpath/kinetics.hpp"
#include "revpath/stats.hpp"

using namespace revpath;
using testnet::v1;

namespace {

crn::ReactionNetwork frozen() {
    crn::ReversibleReaction r;
    r.reactant_coeffs = {0};
    r.product_coeffs = {1};
    r.reactant_terms = {};
    r.product_terms = {{"S", 1}};
    return crn::ReactionNetwork({"S"}, {}, {r});
}

} // namespace

TEST_CASE("ODE field equilibria") {
    CHECK(kinetics::ode_field(testnet::mono(), v1(1.0))[0] == doctest::Approx(0.0));
    const auto bi = testnet::bistable();
    for (double x : {1.0, 2.0, 3.0}) CHECK(std::abs(kinetics::ode_field(bi, v1(x))[0]) < 1e-12);
    CHECK(kinetics::ode_jacobian(bi, v1(1.0))(0, 0) == doctest::Approx(-2.0));
}

TEST_CASE("ODE solve") {
    const auto mono = testnet::mono();
    const auto eq = kinetics::ode_solve(mono, v1(1.0), 2.0, 1e-2);
    for (const auto& s : eq.states) CHECK(s[0] == doctest::Approx(1.0));

    const auto traj = kinetics::ode_solve(mono, v1(2.0), 3.0, 1e-3);
    double err = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k)
        err = std::max(err, std::abs(traj.states[k][0] - (1 + std::exp(-traj.times[k]))));
    CHECK(err < 1e-8);
    CHECK(traj.times.back() == 3.0);

    const auto bi = testnet::bistable();
    CHECK(kinetics::ode_solve(bi, v1(2.01), 10.0, 1e-3).states.back()[0] == doctest::Approx(3.0).epsilon(1e-4));
    CHECK(kinetics::ode_solve(bi, v1(1.99), 10.0, 1e-3).states.back()[0] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("ODE reports leaving the orthant") {
    // The RK4 factor of linear decay is always positive, so use dimerization.
    const auto stiff = crn::parse_network("species X\nreaction 2 X <=> 0 @ kf=10, kb=0.001\n");
    CHECK_THROWS_AS(kinetics::ode_solve(stiff, v1(10.0), 5.0, 1.0), NumericalError);
}

TEST_CASE("SSA basics") {
    const auto mono = testnet::mono();
    CHECK_THROWS_AS(kinetics::ssa_simulate(mono, v1(1.05), 10.0, 1.0, 1), InvalidArgument);

    const auto still = kinetics::ssa_simulate(frozen(), v1(1.0), 10.0, 5.0, 1);
    CHECK(still.size() == 2);
    CHECK(still.states.back()[0] == 1.0);

    const auto a = kinetics::ssa_simulate(mono, v1(1.0), 50.0, 2.0, 42);
    const auto b = kinetics::ssa_simulate(mono, v1(1.0), 50.0, 2.0, 42);
    REQUIRE(a.size() == b.size());
    CHECK(a.states.back()[0] == b.states.back()[0]);
    for (std::size_t k = 1; k + 1 < a.size(); ++k)
        CHECK(std::abs(std::abs(a.states[k][0] - a.states[k - 1][0]) - 1.0 / 50) < 1e-12);
}

TEST_CASE("SSA conserves linear invariants exactly") {
    const auto net = crn::parse_network("species X, Y\nreaction X <=> Y @ kf=2, kb=1\nreaction 2 X <=> 2 Y @ kf=0.5, kb=0.5\n");
    Vec x0(2);
    x0 << 1.0, 0.5;
    const auto traj = kinetics::ssa_simulate(net, x0, 20.0, 5.0, 3);
    for (const auto& s : traj.states) CHECK(std::round(20 * (s[0] + s[1])) == 30);
}

TEST_CASE("SSA ensemble mean follows the ODE") {
    const auto mono = testnet::mono();
    const double V = 150;
    std::vector<double> at05, at1;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        kinetics::SsaOptions opt;
        opt.stream = s;
        const auto p = kinetics::ssa_simulate(mono, v1(2.0), V, 1.0, 9, opt);
        at05.push_back(p.at(0.5)[0]);
        at1.push_back(p.at(1.0)[0]);
    }
    for (auto [xs, t] : {std::pair{&at05, 0.5}, std::pair{&at1, 1.0}}) {
        const double bound = 4 * std::sqrt(stats::variance(*xs)) / std::sqrt(2000.0);
        CHECK(std::abs(stats::mean(*xs) - (1 + std::exp(-t))) <= bound);
    }
}

TEST_CASE("SSA stationary occupation is Poisson") {
    const auto mono = testnet::mono();
    const double V = 150;
    std::vector<double> occ(600, 0.0);
    Vec x = v1(1.0);
    double total = 0.0;
    for (std::uint64_t chunk = 0; chunk < 40; ++chunk) {
        kinetics::SsaOptions opt;
        opt.stream = chunk;
        const auto p = kinetics::ssa_simulate(mono, x, V, 500.0, 21, opt);
        for (std::size_t k = 0; k + 1 < p.size(); ++k) {
            const double w = p.times[k + 1] - p.times[k];
            const auto n = static_cast<std::size_t>(std::lround(p.states[k][0] * V));
            if (chunk > 0 || p.times[k] > 10.0) {
                occ[std::min<std::size_t>(n, occ.size() - 1)] += w;
                total += w;
            }
        }
        x = p.states.back();
    }
    double tv = 0.0;
    for (std::size_t n = 0; n < occ.size(); ++n) tv += std::abs(occ[n] / total - std::exp(cme::log_poisson(static_cast<std::int64_t>(n), V)));
    CHECK(0.5 * tv <= 0.05);
}

TEST_CASE("tau-leap single step is Skellam") {
    const auto mono = testnet::mono();
    const double V = 10;
    std::vector<double> counts(41, 0.0);
    for (std::uint64_t s = 0; s < 100000; ++s) {
        const auto p = kinetics::tau_leap_simulate(mono, v1(1.0), V, 0.1, 0.1, 5, s);
        const auto k = std::lround((p.states.back()[0] - 1.0) * V);
        counts[static_cast<std::size_t>(std::clamp<long>(k, -20, 20) + 20)] += 1;
    }
    std::vector<double> probs(41);
    for (int k = -20; k <= 20; ++k) probs[static_cast<std::size_t>(k + 20)] = cme::skellam_pmf(k, 1.0, 1.0);
    const auto r = stats::chi_square_gof(counts, probs);
    CHECK(r.p_value > 0.01);
}

TEST_CASE("tau-leap agrees with SSA in the small-step limit") {
    const auto mono = testnet::mono();
    const double V = 100;
    std::vector<double> leap, exact;
    for (std::uint64_t s = 0; s < 500; ++s) {
        leap.push_back(kinetics::tau_leap_simulate(mono, v1(2.0), V, 1.0, 1e-3, 8, s).states.back()[0]);
        kinetics::SsaOptions opt;
        opt.stream = s;
        exact.push_back(kinetics::ssa_simulate(mono, v1(2.0), V, 1.0, 8, opt).states.back()[0]);
    }
    const double se = std::sqrt((stats::variance(leap) + stats::variance(exact)) / 500);
    CHECK(std::abs(stats::mean(leap) - stats::mean(exact)) <= 3 * se);

    const auto still = kinetics::tau_leap_simulate(frozen(), v1(1.0), 10.0, 1.0, 0.1, 1);
    for (const auto& st : still.states) CHECK(st[0] == 1.0);
}

TEST_CASE("tau-leap flags absorption") {
    const auto fast = crn::parse_network("species X\nconst A = 1\nreaction X <=> A @ kf=50, kb=1e-9\n");
    const auto p = kinetics::tau_leap_simulate(fast, v1(0.2), 10.0, 10.0, 0.5, 1);
    CHECK(p.absorbed);
    CHECK(p.states.back()[0] == 0.0);
}

TEST_CASE("CLE") {
    const auto mono = testnet::mono();
    const double dt = 0.01;
    const auto det = kinetics::cle_simulate(mono, v1(2.0), INFINITY, 1.0, dt, 1);
    double x = 2.0;
    for (std::size_t k = 1; k < det.size(); ++k) {
        x += dt * (1.0 - x);
        CHECK(det.states[k][0] == doctest::Approx(x).epsilon(1e-14));
    }
    const auto a = kinetics::cle_simulate(mono, v1(1.0), 50.0, 1.0, dt, 4);
    const auto b = kinetics::cle_simulate(mono, v1(1.0), 50.0, 1.0, dt, 4);
    CHECK(a.states.back()[0] == b.states.back()[0]);

    const double V = 100;
    const auto longrun = kinetics::cle_simulate(mono, v1(1.0), V, 10000.0, dt, 6);
    std::vector<double> xs;
    for (std::size_t k = 1000; k < longrun.size(); k += 10) xs.push_back(longrun.states[k][0]);
    CHECK(stats::variance(xs) * V == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("forward CLT covariance") {
    const auto mono = testnet::mono();
    std::vector<double> grid;
    for (int k = 0; k <= 100; ++k) grid.push_back(0.1 * k);
    const auto cov = kinetics::forward_clt_cov(mono, v1(1.0), grid);
    CHECK(cov.front()(0, 0) == 0.0);
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(cov[k](0, 0) == doctest::Approx(1 - std::exp(-2 * grid[k])).epsilon(1e-9));
    CHECK(cov.back()(0, 0) == doctest::Approx(1.0).epsilon(1e-8));

    const auto two = crn::parse_network("species X, Y\nreaction X <=> Y @ kf=2, kb=1\nreaction 0 <=> X @ kf=1, kb=1\n");
    Vec x0(2);
    x0 << 1.0, 1.0;
    for (const auto& m : kinetics::forward_clt_cov(two, x0, grid)) {
        CHECK((m - m.transpose()).norm() < 1e-14);
        CHECK(Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("ensemble summary") {
    kinetics::Trajectory a, b;
    a.volume = b.volume = 10.0;
    a.times = b.times = {0.0, 1.0};
    a.states = {v1(1.0), v1(2.0)};
    b.states = {v1(3.0), v1(4.0)};
    const std::vector<kinetics::Trajectory> e{a, b};
    const std::vector<double> t{0.0, 0.5, 1.0};
    const auto s = kinetics::summarize(e, t);
    CHECK(s.mean[1][0] == doctest::Approx(2.0));
    CHECK(s.variance[2][0] == doctest::Approx(2.0));
    CHECK(kinetics::sup_deviation(a, b, t) == doctest::Approx(2.0));
}

#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "nets.hpp"
#include "revpath/crn.hpp"
#include "revpath/error.hpp"

using namespace revpath;
using crn::Direction;
using testnet::v1;

TEST_CASE("parse bistable network") {
    const auto net = testnet::bistable();
    REQUIRE(net.num_species() == 1);
    REQUIRE(net.num_reactions() == 2);
    CHECK(net.stoichiometry(0) == std::vector<int>{1});
    CHECK(net.macroscopic_rate(0, Direction::forward, v1(2.0)) == doctest::Approx(24.0));
    CHECK(net.macroscopic_rate(0, Direction::backward, v1(2.0)) == doctest::Approx(8.0));
    const double combined =
        net.macroscopic_rate(0, Direction::backward, v1(1.0)) + net.macroscopic_rate(1, Direction::backward, v1(1.0));
    CHECK(combined == doctest::Approx(12.0));
}

TEST_CASE("parse monostable network") {
    const auto net = testnet::mono();
    CHECK(net.stoichiometry(0) == std::vector<int>{1});
    CHECK(net.macroscopic_rate(0, Direction::forward, v1(5.0)) == doctest::Approx(1.0));
    CHECK(net.macroscopic_rate(0, Direction::backward, v1(2.0)) == doctest::Approx(2.0));
    CHECK(net.macroscopic_rate(0, Direction::backward, v1(0.0)) == 0.0);
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(crn::parse_network("species S\nreaction S <=> S @ kf=1, kb=1\n"), ParseError);
    CHECK_THROWS_AS(crn::parse_network("species S\nreaction 0 <=> T @ kf=1, kb=1\n"), ParseError);
    CHECK_THROWS_AS(crn::parse_network("species S\nreaction 0 <=> S @ kf=0, kb=1\n"), Error);
    CHECK_THROWS_AS(crn::parse_network("species S\nreaction 0 <=> S @ kf=-1, kb=1\n"), Error);
    CHECK_THROWS_AS(crn::parse_network("species S, S\nreaction 0 <=> S @ kf=1, kb=1\n"), Error);
    CHECK_THROWS_AS(crn::parse_network("species S\nreaction 0 <=> S @ kf=1 kb=1\n"), ParseError);
    try {
        crn::parse_network("species S\n\nreaction 0 <=> S @ kf=1, kq=1\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("comments, blanks and zero sides") {
    const auto net = crn::parse_network("# birth-death\n\nspecies X\nreaction 0 <=> X @ kf=2.5, kb=0.5 # trailing\n");
    CHECK(net.num_reactions() == 1);
    CHECK(net.macroscopic_rate(0, Direction::forward, v1(3.0)) == doctest::Approx(2.5));
    CHECK(net.macroscopic_rate(0, Direction::backward, v1(3.0)) == doctest::Approx(1.5));
}

TEST_CASE("propensities") {
    const auto bi = testnet::bistable();
    const std::vector<std::int64_t> three{3};
    CHECK(bi.propensity(0, Direction::backward, three, 1.0) == doctest::Approx(6.0));
    const std::vector<std::int64_t> one{1};
    CHECK(bi.propensity(0, Direction::forward, one, 1.0) == 0.0); // needs two S
    const auto mono = testnet::mono();
    for (std::int64_t n : {0, 4, 17}) {
        const std::vector<std::int64_t> pop{n};
        CHECK(mono.propensity(0, Direction::forward, pop, 10.0) == doctest::Approx(10.0));
    }
    CHECK_THROWS_AS(mono.propensity(3, Direction::forward, one, 10.0), InvalidArgument);
}

TEST_CASE("propensity approaches the macroscopic rate as V grows") {
    const auto bi = testnet::bistable();
    const double x = 1.7;
    auto gap = [&](double V) {
        const std::vector<std::int64_t> n{static_cast<std::int64_t>(std::floor(V * x))};
        const double xv = static_cast<double>(n[0]) / V;
        double worst = 0.0;
        for (Direction d : {Direction::forward, Direction::backward}) {
            const double r = bi.propensity(0, d, n, V) / V;
            const double R = bi.macroscopic_rate(0, d, v1(xv));
            worst = std::max(worst, std::abs(r - R) / R);
        }
        return worst;
    };
    const double g3 = gap(1e3);
    const double g4 = gap(1e4);
    CHECK(g4 < g3);
    CHECK(g4 * 1e4 < 2 * g3 * 1e3);
}

TEST_CASE("rate gradient and hessian match finite differences") {
    const auto bi = testnet::bistable();
    const double x = 1.3, h = 1e-5;
    for (Direction d : {Direction::forward, Direction::backward}) {
        const double fd = (bi.macroscopic_rate(0, d, v1(x + h)) - bi.macroscopic_rate(0, d, v1(x - h))) / (2 * h);
        CHECK(bi.rate_gradient(0, d, v1(x))[0] == doctest::Approx(fd).epsilon(1e-8));
        const double fd2 = (bi.rate_gradient(0, d, v1(x + h))[0] - bi.rate_gradient(0, d, v1(x - h))[0]) / (2 * h);
        CHECK(bi.rate_hessian(0, d, v1(x))(0, 0) == doctest::Approx(fd2).epsilon(1e-8));
    }
}

TEST_CASE("serialize round trip") {
    const char* text = "species X, Y\nconst A = 2.5\nreaction A + X <=> 2 Y @ kf=1.25, kb=0.5\nreaction 0 <=> X @ kf=3, kb=1\n";
    const auto a = crn::parse_network(text);
    const auto b = crn::parse_network(a.serialize());
    CHECK(a.serialize() == b.serialize());
    CHECK(a.species() == b.species());
    CHECK(a.constants() == b.constants());
    for (std::size_t i = 0; i < a.num_reactions(); ++i) {
        CHECK(a.stoichiometry(i) == b.stoichiometry(i));
        CHECK(a.reaction(i).kf == b.reaction(i).kf);
        CHECK(a.reaction(i).kb == b.reaction(i).kb);
        CHECK(a.reaction(i).const_factor_fwd == b.reaction(i).const_factor_fwd);
    }
}

TEST_CASE("stoichiometric analysis") {
    const auto two = crn::parse_network("species S1, S2\nreaction S1 <=> S2 @ kf=1, kb=1\n");
    const auto s = crn::stoich_analysis(two);
    CHECK(s.rank == 1);
    REQUIRE(s.conservation_basis.size() == 1);
    const auto& eta = s.conservation_basis[0];
    CHECK(eta[0] == eta[1]);
    CHECK(eta[0] != 0);

    const auto m = crn::stoich_analysis(testnet::mono());
    CHECK(m.rank == 1);
    CHECK(m.conservation_basis.empty());
    const auto b = crn::stoich_analysis(testnet::bistable());
    CHECK(b.rank == 1);

    const auto three = crn::parse_network(
        "species A, B, C\nreaction A + B <=> C @ kf=1, kb=1\nreaction A <=> B @ kf=1, kb=1\n");
    const auto t = crn::stoich_analysis(three);
    CHECK(t.rank == 2);
    REQUIRE(t.conservation_basis.size() == 1);
    for (const auto& e : t.conservation_basis)
        for (std::size_t i = 0; i < three.num_reactions(); ++i) {
            std::int64_t dot = 0;
            for (std::size_t j = 0; j < 3; ++j) dot += e[j] * three.stoichiometry(i)[j];
            CHECK(dot == 0);
        }
}

TEST_CASE("scalar chain merges channels of equal jump size") {
    const crn::ScalarChain chain(testnet::bistable());
    CHECK(chain.is_birth_death());
    CHECK(chain.lattice_step() == 1);
    CHECK(chain.up_rate(0, 1.0) == doctest::Approx(12.0));
    CHECK(chain.down_rate(0, 1.0) == doctest::Approx(12.0));
    CHECK(chain.up_rate_derivative(0, 1.0) == doctest::Approx(12.0));
    CHECK(chain.down_rate_derivative(0, 1.0) == doctest::Approx(14.0));

    const crn::ScalarChain two(crn::parse_network("species X\nreaction 0 <=> 2 X @ kf=1, kb=1\nreaction 0 <=> 4 X @ kf=1, kb=1\n"));
    CHECK(two.lattice_step() == 2);
    CHECK(two.jump_multiples() == std::vector<int>{1, 2});
}

TEST_CASE("load_network reads files") {
    const auto net = crn::load_network(std::string(REVPATH_TEST_DATA) + "/bistable.crn");
    CHECK(net.num_reactions() == 2);
    CHECK_THROWS_AS(crn::load_network("/nonexistent/file.crn"), InvalidArgument);
}

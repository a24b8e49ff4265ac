#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revpath/types.hpp"

namespace revpath::crn {

enum class Direction { forward, backward };

/// One "coefficient species" term as written in the network file.
struct Term {
    std::string species;
    int coeff = 1;

    bool operator==(const Term&) const = default;
};

/// A user-supplied rate law for one direction of a channel. Replaces the
/// mass-action law for that direction. `hessian` may be left empty, in which
/// case it is estimated by central differences of `gradient`.
struct RateLaw {
    std::function<double(const Vec&)> macroscopic;
    std::function<Vec(const Vec&)> gradient;
    std::function<Mat(const Vec&)> hessian;
    std::function<double(std::span<const std::int64_t>, double)> propensity;
};

struct ReversibleReaction {
    std::vector<int> reactant_coeffs; // nu+ over dynamic species
    std::vector<int> product_coeffs;  // nu- over dynamic species
    double kf = 0.0;
    double kb = 0.0;
    double const_factor_fwd = 1.0; // prod of constant concentrations ^ coeff, reactant side
    double const_factor_bwd = 1.0; // same, product side

    // Sides as written, constants included; used for serialization only.
    std::vector<Term> reactant_terms;
    std::vector<Term> product_terms;

    std::optional<RateLaw> custom_fwd;
    std::optional<RateLaw> custom_bwd;
};

/// Validated, immutable reaction network with mass-action kinetics.
///
/// Species order is declaration order. Constant (chemostatted) species are
/// folded into `const_factor_fwd/bwd`, so every per-species vector below has
/// length num_species() and refers to dynamic species only.
class ReactionNetwork {
public:
    ReactionNetwork(std::vector<std::string> species,
                    std::map<std::string, double> constants,
                    std::vector<ReversibleReaction> reactions);

    std::size_t num_species() const noexcept { return species_.size(); }
    std::size_t num_reactions() const noexcept { return reactions_.size(); }

    const std::vector<std::string>& species() const noexcept { return species_; }
    const std::map<std::string, double>& constants() const noexcept { return constants_; }
    const std::vector<ReversibleReaction>& reactions() const noexcept { return reactions_; }
    const ReversibleReaction& reaction(std::size_t i) const;

    std::optional<std::size_t> species_index(std::string_view name) const;

    /// nu_i = nu-_i - nu+_i (integer change when channel i fires forward).
    const std::vector<int>& stoichiometry(std::size_t i) const;
    Vec stoichiometry_vector(std::size_t i) const;

    /// Delbrueck-Gillespie propensity r(n, V) = k V prod_j n_j!/((n_j-c_j)! V^c_j)
    /// times the constant-species factor; zero when any n_j < c_j.
    double propensity(std::size_t i, Direction dir, std::span<const std::int64_t> n, double volume) const;

    /// Mass-action law R(x) = k prod_j x_j^c_j times the constant-species factor.
    double macroscopic_rate(std::size_t i, Direction dir, const Vec& x) const;
    Vec rate_gradient(std::size_t i, Direction dir, const Vec& x) const;
    Mat rate_hessian(std::size_t i, Direction dir, const Vec& x) const;

    /// Network text in the file grammar; parse_network(serialize()) is identical.
    std::string serialize() const;

private:
    void check_index(std::size_t i) const;
    const std::vector<int>& order(std::size_t i, Direction dir) const;
    double rate_constant(std::size_t i, Direction dir) const;
    const std::optional<RateLaw>& custom(std::size_t i, Direction dir) const;

    std::vector<std::string> species_;
    std::map<std::string, double> constants_;
    std::vector<ReversibleReaction> reactions_;
    std::vector<std::vector<int>> stoich_;
};

ReactionNetwork parse_network(std::string_view text);
ReactionNetwork load_network(const std::filesystem::path& path);

/// Exact stoichiometric analysis over the rationals.
struct StoichMatrix {
    std::vector<std::vector<int>> rows;                   // M vectors nu_i of length N
    std::size_t rank = 0;
    std::vector<std::vector<std::int64_t>> conservation_basis; // eta with eta . nu_i = 0
    std::vector<std::vector<std::int64_t>> increment_basis;    // spans nu^T(R^M)
};

StoichMatrix stoich_analysis(const ReactionNetwork& net);

/// Single-species view of a network as a chain on the lattice (g/V) Z.
///
/// Channels are grouped by jump size |nu_i| = m*g with g the gcd of all jump
/// sizes; each group is a pair of merged Poisson streams (up by m*g, down by
/// m*g). Channels with equal jump size merge into one reversible channel, the
/// reduction used for the bistable example. Requires num_species() == 1.
class ScalarChain {
public:
    explicit ScalarChain(const ReactionNetwork& net);

    int lattice_step() const noexcept { return step_; }
    /// Distinct jump multiples m (sorted ascending).
    const std::vector<int>& jump_multiples() const noexcept { return multiples_; }
    std::size_t num_groups() const noexcept { return multiples_.size(); }
    bool is_birth_death() const noexcept { return multiples_.size() == 1; }

    double up_propensity(std::size_t group, std::int64_t n, double volume) const;
    double down_propensity(std::size_t group, std::int64_t n, double volume) const;
    double up_rate(std::size_t group, double x) const;
    double down_rate(std::size_t group, double x) const;
    double up_rate_derivative(std::size_t group, double x) const;
    double down_rate_derivative(std::size_t group, double x) const;

    /// Total up/down propensity of a birth-death chain (single group).
    double up_propensity(std::int64_t n, double volume) const { return up_propensity(0, n, volume); }
    double down_propensity(std::int64_t n, double volume) const { return down_propensity(0, n, volume); }

    const ReactionNetwork& network() const noexcept { return net_; }

private:
    struct Member {
        std::size_t reaction;
        Direction up_dir; // direction of this reaction that moves the state up
    };

    ReactionNetwork net_;
    int step_ = 1;
    std::vector<int> multiples_;
    std::vector<std::vector<Member>> members_;
};

} // namespace revpath::crn

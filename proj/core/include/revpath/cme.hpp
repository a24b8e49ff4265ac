#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "revpath/crn.hpp"
#include "revpath/types.hpp"

namespace revpath::cme {

/// log P(Poisson(mu) = k); -inf outside the support.
double log_poisson(std::int64_t k, double mu);

/// P(Poisson(mu1) - Poisson(mu2) = k) by direct convolution in log space.
double skellam_pmf(std::int64_t k, double mu1, double mu2);

/// Whole Skellam law on [k_min, k_min + pmf.size()), dropping terms below
/// `cutoff` relative to the Poisson peaks.
struct SkellamRow {
    std::int64_t k_min = 0;
    std::vector<double> pmf;
};
SkellamRow skellam_distribution(double mu1, double mu2, double cutoff = 1e-18);

/// Truncated 1-D lattice. Interior cell i (0-based) holds population
/// (base + 1 + i) * nu, i.e. concentration x(i) = (base + 1 + i) nu / V with
/// base = floor(x_l V / nu). Index Nx is the absorbing "escaped" cell.
class LatticeDomain {
public:
    LatticeDomain(double x_l, double x_r, double volume, int nu = 1);
    /// Domain whose interior cells are exactly the lattice indices
    /// k_first..k_last (populations k * nu).
    static LatticeDomain from_cells(std::int64_t k_first, std::int64_t k_last, double volume, int nu = 1);

    double x_l() const noexcept { return x_l_; }
    double x_r() const noexcept { return x_r_; }
    double volume() const noexcept { return volume_; }
    int nu() const noexcept { return nu_; }
    double spacing() const noexcept { return nu_ / volume_; }
    std::size_t interior() const noexcept { return nx_; }
    std::size_t size() const noexcept { return nx_ + 1; }
    std::size_t absorbing() const noexcept { return nx_; }

    std::int64_t lattice_index(std::size_t i) const { return base_ + 1 + static_cast<std::int64_t>(i); }
    std::int64_t population(std::size_t i) const { return lattice_index(i) * nu_; }
    double x(std::size_t i) const { return static_cast<double>(lattice_index(i)) * nu_ / volume_; }
    std::vector<double> cells() const;
    std::optional<std::size_t> index_of_population(std::int64_t n) const;

private:
    double x_l_, x_r_, volume_;
    int nu_;
    std::int64_t base_;
    std::size_t nx_;
};

/// Row-stochastic one-step table over the domain plus absorbing cell. Stored
/// dense; band_lo/band_hi bound the non-zero interior columns of each row.
struct TransitionKernel {
    RowMat P;
    double dt = 0.0;
    double volume = 0.0;
    std::string network; // serialized source network
    std::vector<std::size_t> band_lo;
    std::vector<std::size_t> band_hi;

    std::size_t size() const { return static_cast<std::size_t>(P.rows()); }
    std::size_t absorbing() const { return size() - 1; }
    /// Row vector times kernel: (p P)_j.
    Vec apply_left(const Vec& p) const;
    /// Kernel times column vector: (P r)_i.
    Vec apply_right(const Vec& r) const;
    double max_row_defect() const;
};

/// Euler tau-leap kernel: interior rows are the Skellam law of the lattice
/// jump with means r+-(V x(i), V) dt, the excess mass goes to the absorbing
/// column. Multi-size chains convolve one Skellam law per jump size.
TransitionKernel build_kernel(const crn::ReactionNetwork& net, const LatticeDomain& dom, double dt);

/// Identity on the interior (used for zero-rate checks and tests).
TransitionKernel identity_kernel(const LatticeDomain& dom, double dt);

struct ProbabilityField {
    std::vector<double> cells; // interior concentrations
    double dt = 0.0;
    std::vector<Vec> slices;   // each of length Nx + 1, last entry absorbed mass
    std::vector<double> defect; // |sum - 1| per slice

    std::size_t steps() const { return slices.empty() ? 0 : slices.size() - 1; }
    std::size_t interior() const { return cells.size(); }
    double time(std::size_t m) const { return static_cast<double>(m) * dt; }
    double absorbed(std::size_t m) const { return slices.at(m)[static_cast<Eigen::Index>(interior())]; }
    /// Mean concentration over the interior, normalized by interior mass.
    double mean(std::size_t m) const;
    double variance(std::size_t m) const;
};

Vec point_mass(const LatticeDomain& dom, std::size_t i);

/// p(m+1) = p(m) P for m = 0..Nt-1. Throws NumericalError when a slice's
/// normalization drifts by more than 1e-9.
ProbabilityField forward_evolve(const TransitionKernel& kernel, const LatticeDomain& dom, const Vec& init,
                                 std::size_t Nt);

/// Stationary law on the interior (absorbing entry 0). Birth-death chains use
/// the detailed-balance recursion in log space; other chains fall back to
/// power iteration on the tau-leap kernel renormalized over the interior.
Vec stationary_distribution(const crn::ReactionNetwork& net, const LatticeDomain& dom);

/// Kernel as a CSV matrix, one row per line.
void write_kernel_csv(std::ostream& out, const TransitionKernel& kernel);

} // namespace revpath::cme

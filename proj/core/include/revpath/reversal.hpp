#pragma once

#include <cstddef>
#include <vector>

#include "revpath/cme.hpp"
#include "revpath/crn.hpp"
#include "revpath/types.hpp"

namespace revpath::reversal {

enum class Mode { npp, spp };

/// Cell minimizing |x(i) - x|; exact midpoints go to the lower cell.
std::size_t nearest_lattice_point(double x, const cme::LatticeDomain& dom);

/// Bayes-reversed one-step tables P^(m)_ij = p_j(m) P_ji / p_i(m+1), with 0/0 = 0.
/// Stationary reversals hold a single table.
struct ReversedKernel {
    std::vector<RowMat> tables;
    bool stationary = false;

    const RowMat& at(std::size_t m) const { return stationary ? tables.front() : tables.at(m); }
    std::size_t steps() const { return tables.size(); }
};

/// Time-indexed reversal of a forward field (one dense table per step, so
/// intended for small lattices; the prehistory routines below never store it).
ReversedKernel reverse_kernel(const cme::ProbabilityField& field, const cme::TransitionKernel& kernel);

/// Single reversed table with respect to marginals p_from (time m) and p_to
/// (time m + 1). Passing p_to = p_from P makes every non-empty row sum to 1.
ReversedKernel reverse_stationary(const Vec& p_from, const Vec& p_to, const cme::TransitionKernel& kernel);

struct PrehistoryField {
    Mode mode = Mode::npp;
    std::vector<double> cells;
    double dt = 0.0;
    double volume = 0.0;
    std::vector<Vec> slices; // index m approximates time m dt; each of length Nx + 1

    std::size_t source_cell = 0; // NPP only
    std::size_t target_cell = 0;
    double x0 = 0.0;
    double xT = 0.0;
    double T = 0.0;

    std::vector<std::size_t> peak;
    std::vector<double> peak_x;
    /// Mass dropped and renormalized away in each slice because the forward
    /// probability underflowed (zero when the pass is clean).
    std::vector<double> renormalized;

    std::size_t steps() const { return slices.empty() ? 0 : slices.size() - 1; }
    double time(std::size_t m) const { return static_cast<double>(m) * dt; }
    double mean(std::size_t m) const;
    double variance(std::size_t m) const;
};

/// Backward pass q(m) = p(m) * (P (q(m+1) / p(m+1))) from the point mass on
/// target_cell at m = Nt. Equivalent to q(m+1) times the reversed table.
PrehistoryField npp_from_field(const cme::ProbabilityField& field, const cme::TransitionKernel& kernel,
                               std::size_t source_cell, std::size_t target_cell);

/// Non-stationary prehistory probability on dom with dt = T / Nt.
PrehistoryField npp_compute(const crn::ReactionNetwork& net, const cme::LatticeDomain& dom, double x0, double xT,
                            double T, std::size_t Nt);

/// Stationary variant: p_from = pi, p_to = pi P, one reversed table for all m.
PrehistoryField spp_from_stationary(const Vec& pi, const cme::TransitionKernel& kernel,
                                    const std::vector<double>& cells, std::size_t target_cell, std::size_t Nt);

PrehistoryField spp_compute(const crn::ReactionNetwork& net, const cme::LatticeDomain& dom, double xT, double T,
                            std::size_t Nt);

struct PeakPoint {
    double t;
    double x;
    std::size_t cell;
};

/// Per-slice argmax over interior cells, walking from m = Nt down to 0; ties
/// go to the cell nearest the previous (later) peak.
std::vector<PeakPoint> peak_trajectory(const PrehistoryField& field);

} // namespace revpath::reversal

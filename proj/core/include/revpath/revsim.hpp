#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "revpath/cme.hpp"
#include "revpath/crn.hpp"
#include "revpath/kinetics.hpp"
#include "revpath/reversal.hpp"

namespace revpath::revsim {

/// Reversed jump rates on the lattice cells. For jump group g (size m_g cells)
///   up(i)   = p(i + m_g) r-_g(n(i + m_g)) / p(i),
///   down(i) = p(i - m_g) r+_g(n(i - m_g)) / p(i),
/// with zero where p(i) = 0 or the neighbour lies outside the interior.
/// SPP tables hold one slice; NPP slice k covers reversed time [k dt, (k+1) dt)
/// and uses the forward marginal at step Nt - k.
struct ReversedRateTable {
    struct Slice {
        std::vector<std::vector<double>> up;   // [group][cell]
        std::vector<std::vector<double>> down; // [group][cell]
    };

    reversal::Mode mode = reversal::Mode::spp;
    std::vector<double> cells;
    std::vector<int> multiples; // jump size of each group, in cells
    double volume = 0.0;
    double dt = 0.0; // slice width (NPP)
    std::vector<Slice> slices;

    std::size_t num_slices() const { return slices.size(); }
    double horizon() const; // +inf for SPP
    const Slice& slice_at(double s) const;
    double total_rate(const Slice& slice, std::size_t cell) const;
};

ReversedRateTable build_spp_rates(const crn::ReactionNetwork& net, const cme::LatticeDomain& dom, const Vec& pi);
ReversedRateTable build_npp_rates(const crn::ReactionNetwork& net, const cme::LatticeDomain& dom,
                                  const cme::ProbabilityField& field);

/// Reversed-process path from the cell nearest xT over reversed time
/// [0, t_end]. Time-dependent tables are sampled by thinning against the
/// per-cell maximum over slices.
kinetics::Trajectory sample_reversed(const ReversedRateTable& table, double xT, double t_end, std::uint64_t seed,
                                     std::uint64_t stream = 0);

/// Plain Gillespie sampling of a single-slice (time-homogeneous) table.
kinetics::Trajectory sample_reversed_direct(const ReversedRateTable& table, double xT, double t_end,
                                            std::uint64_t seed, std::uint64_t stream = 0);

/// `count` independent paths, member k on stream k, run in parallel.
std::vector<kinetics::Trajectory> sample_ensemble(const ReversedRateTable& table, double xT, double t_end,
                                                  std::uint64_t seed, std::size_t count);

} // namespace revpath::revsim

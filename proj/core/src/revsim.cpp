#include "revpath/revsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "revpath/error.hpp"
#include "revpath/parallel.hpp"
#include "revpath/rng.hpp"

namespace revpath::revsim {

namespace {

ReversedRateTable::Slice make_slice(const crn::ScalarChain& chain, const cme::LatticeDomain& dom, const Vec& p) {
    const std::size_t nx = dom.interior();
    const double volume = dom.volume();
    ReversedRateTable::Slice s;
    s.up.assign(chain.num_groups(), std::vector<double>(nx, 0.0));
    s.down.assign(chain.num_groups(), std::vector<double>(nx, 0.0));
    for (std::size_t g = 0; g < chain.num_groups(); ++g) {
        const auto m = static_cast<std::size_t>(chain.jump_multiples()[g]);
        for (std::size_t i = 0; i < nx; ++i) {
            const double pi = p[static_cast<Eigen::Index>(i)];
            if (!(pi > 0.0)) continue;
            if (i + m < nx) {
                const double pj = p[static_cast<Eigen::Index>(i + m)];
                if (pj > 0.0) s.up[g][i] = pj * chain.down_propensity(g, dom.population(i + m), volume) / pi;
            }
            if (i >= m) {
                const double pj = p[static_cast<Eigen::Index>(i - m)];
                if (pj > 0.0) s.down[g][i] = pj * chain.up_propensity(g, dom.population(i - m), volume) / pi;
            }
        }
    }
    return s;
}

std::size_t start_cell(const ReversedRateTable& table, double xT) {
    const auto& c = table.cells;
    if (c.empty()) throw InvalidArgument("empty rate table");
    const double h = c.size() > 1 ? c[1] - c[0] : 1.0;
    if (xT < c.front() - 0.5 * h || xT > c.back() + 0.5 * h)
        throw InvalidArgument("xT lies outside the lattice of the rate table");
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i)
        if (std::abs(c[i] - xT) < std::abs(c[best] - xT)) best = i;
    return best;
}

// Applies the channel picked by `target` in [0, total) and returns the new cell.
std::size_t fire(const ReversedRateTable& table, const ReversedRateTable::Slice& s, std::size_t cell, double target) {
    for (std::size_t g = 0; g < table.multiples.size(); ++g) {
        const auto m = static_cast<std::size_t>(table.multiples[g]);
        if (target < s.up[g][cell]) return cell + m;
        target -= s.up[g][cell];
        if (target < s.down[g][cell]) return cell - m;
        target -= s.down[g][cell];
    }
    // round-off: take the last channel with positive rate
    for (std::size_t g = table.multiples.size(); g-- > 0;) {
        const auto m = static_cast<std::size_t>(table.multiples[g]);
        if (s.down[g][cell] > 0.0) return cell - m;
        if (s.up[g][cell] > 0.0) return cell + m;
    }
    return cell;
}

kinetics::Trajectory start_path(const ReversedRateTable& table, std::size_t cell) {
    kinetics::Trajectory traj;
    traj.volume = table.volume;
    traj.times.push_back(0.0);
    traj.states.push_back(Vec::Constant(1, table.cells[cell]));
    return traj;
}

void finish_path(kinetics::Trajectory& traj, double t_end) {
    if (traj.times.back() < t_end) {
        traj.times.push_back(t_end);
        traj.states.push_back(traj.states.back());
    }
}

} // namespace

double ReversedRateTable::horizon() const {
    return mode == reversal::Mode::spp ? std::numeric_limits<double>::infinity()
                                       : dt * static_cast<double>(slices.size());
}

const ReversedRateTable::Slice& ReversedRateTable::slice_at(double s) const {
    if (mode == reversal::Mode::spp) return slices.front();
    const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(s / dt)));
    return slices[std::min(k, slices.size() - 1)];
}

double ReversedRateTable::total_rate(const Slice& slice, std::size_t cell) const {
    double total = 0.0;
    for (std::size_t g = 0; g < multiples.size(); ++g) total += slice.up[g][cell] + slice.down[g][cell];
    return total;
}

ReversedRateTable build_spp_rates(const crn::ReactionNetwork& net, const cme::LatticeDomain& dom, const Vec& pi) {
    const crn::ScalarChain chain(net);
    if (static_cast<std::size_t>(pi.size()) < dom.interior())
        throw InvalidArgument("stationary law shorter than the domain");
    ReversedRateTable t;
    t.mode = reversal::Mode::spp;
    t.cells = dom.cells();
    t.multiples = chain.jump_multiples();
    t.volume = dom.volume();
    t.slices.push_back(make_slice(chain, dom, pi));
    return t;
}

ReversedRateTable build_npp_rates(const crn::ReactionNetwork& net, const cme::LatticeDomain& dom,
                                  const cme::ProbabilityField& field) {
    const crn::ScalarChain chain(net);
    if (field.interior() != dom.interior()) throw InvalidArgument("field and domain sizes differ");
    const std::size_t nt = field.steps();
    if (nt == 0) throw InvalidArgument("field has no time steps");
    ReversedRateTable t;
    t.mode = reversal::Mode::npp;
    t.cells = dom.cells();
    t.multiples = chain.jump_multiples();
    t.volume = dom.volume();
    t.dt = field.dt;
    t.slices.resize(nt);
    parallel_for(nt, [&](std::size_t k) { t.slices[k] = make_slice(chain, dom, field.slices[nt - k]); });
    return t;
}

kinetics::Trajectory sample_reversed_direct(const ReversedRateTable& table, double xT, double t_end,
                                            std::uint64_t seed, std::uint64_t stream) {
    if (table.slices.size() != 1) throw InvalidArgument("direct sampling needs a time-homogeneous table");
    std::size_t cell = start_cell(table, xT);
    CounterRng rng(seed, stream);
    auto traj = start_path(table, cell);
    const auto& s = table.slices.front();
    double t = 0.0;
    for (;;) {
        const double total = table.total_rate(s, cell);
        if (!(total > 0.0)) break;
        t += -std::log(rng.uniform()) / total;
        if (t > t_end) break;
        cell = fire(table, s, cell, rng.uniform() * total);
        traj.times.push_back(t);
        traj.states.push_back(Vec::Constant(1, table.cells[cell]));
    }
    finish_path(traj, t_end);
    return traj;
}

kinetics::Trajectory sample_reversed(const ReversedRateTable& table, double xT, double t_end, std::uint64_t seed,
                                     std::uint64_t stream) {
    if (t_end > table.horizon() + 1e-12)
        throw InvalidArgument("t_end exceeds the horizon of the reversed rate table");
    std::size_t cell = start_cell(table, xT);
    const std::size_t nx = table.cells.size();

    // Per-cell bound over all slices.
    std::vector<double> bound(nx, 0.0);
    for (const auto& s : table.slices)
        for (std::size_t i = 0; i < nx; ++i) bound[i] = std::max(bound[i], table.total_rate(s, i));

    CounterRng rng(seed, stream);
    auto traj = start_path(table, cell);
    double t = 0.0;
    for (;;) {
        const double b = bound[cell];
        if (!(b > 0.0)) break;
        t += -std::log(rng.uniform()) / b;
        if (t > t_end) break;
        const auto& s = table.slice_at(t);
        const double total = table.total_rate(s, cell);
        if (total > b * (1.0 + 1e-12)) throw NumericalError("thinning bound violated at cell " + std::to_string(cell));
        const double u = rng.uniform() * b;
        if (u >= total) continue; // rejected candidate
        cell = fire(table, s, cell, u);
        traj.times.push_back(t);
        traj.states.push_back(Vec::Constant(1, table.cells[cell]));
    }
    finish_path(traj, t_end);
    return traj;
}

std::vector<kinetics::Trajectory> sample_ensemble(const ReversedRateTable& table, double xT, double t_end,
                                                  std::uint64_t seed, std::size_t count) {
    std::vector<kinetics::Trajectory> out(count);
    parallel_for(count, [&](std::size_t k) { out[k] = sample_reversed(table, xT, t_end, seed, k); });
    return out;
}

} // namespace revpath::revsim

#include "revpath/reversal.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "revpath/error.hpp"
#include "revpath/parallel.hpp"

namespace revpath::reversal {

namespace {

// Forward masses at or below this are treated as zero when dividing.
constexpr double mass_floor = 1e-300;

double slice_mean(const std::vector<double>& cells, const Vec& q) {
    double mass = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        mass += q[static_cast<Eigen::Index>(i)];
        acc += q[static_cast<Eigen::Index>(i)] * cells[i];
    }
    return mass > 0.0 ? acc / mass : std::numeric_limits<double>::quiet_NaN();
}

void fill_peaks(PrehistoryField& f) {
    const auto peaks = peak_trajectory(f);
    f.peak.resize(peaks.size());
    f.peak_x.resize(peaks.size());
    for (std::size_t m = 0; m < peaks.size(); ++m) {
        f.peak[m] = peaks[m].cell;
        f.peak_x[m] = peaks[m].x;
    }
}

// One backward step; returns the mass renormalized away.
double backward_step(const Vec& p_from, const Vec& p_to, const cme::TransitionKernel& kernel, const Vec& q_next,
                     Vec& q) {
    const auto n = q_next.size();
    Vec ratio(n);
    double dropped = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (p_to[i] > mass_floor) {
            ratio[i] = q_next[i] / p_to[i];
        } else {
            ratio[i] = 0.0;
            dropped += q_next[i];
        }
    }
    q = p_from.cwiseProduct(kernel.apply_right(ratio));
    const double total = q.sum();
    if (!(total > 0.0)) throw NumericalError("prehistory slice lost all mass");
    const double defect = std::abs(total - 1.0);
    if (defect > 1e-12 || dropped > 0.0) q /= total;
    return std::max(dropped, defect > 1e-12 ? defect : 0.0);
}

} // namespace

std::size_t nearest_lattice_point(double x, const cme::LatticeDomain& dom) {
    if (!(x >= dom.x_l() && x <= dom.x_r()))
        throw InvalidArgument("x = " + std::to_string(x) + " lies outside the domain");
    const double h = dom.spacing();
    const double pos = x / h - static_cast<double>(dom.lattice_index(0));
    // Lower cell wins exact ties, so round half down.
    auto i = static_cast<std::int64_t>(std::ceil(pos - 0.5));
    const auto last = static_cast<std::int64_t>(dom.interior()) - 1;
    i = std::clamp<std::int64_t>(i, 0, last);
    // Guard the rounding against representation error in x / h.
    auto dist = [&](std::int64_t c) { return std::abs(dom.x(static_cast<std::size_t>(c)) - x); };
    if (i > 0 && dist(i - 1) <= dist(i)) --i;
    if (i < last && dist(i + 1) < dist(i)) ++i;
    return static_cast<std::size_t>(i);
}

ReversedKernel reverse_stationary(const Vec& p_from, const Vec& p_to, const cme::TransitionKernel& kernel) {
    const auto n = static_cast<Eigen::Index>(kernel.size());
    if (p_from.size() != n || p_to.size() != n) throw InvalidArgument("marginal length does not match the kernel");
    ReversedKernel out;
    out.stationary = true;
    RowMat t = RowMat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(p_to[i] > 0.0)) continue;
        for (Eigen::Index j = 0; j < n; ++j) t(i, j) = p_from[j] * kernel.P(j, i) / p_to[i];
    }
    out.tables.push_back(std::move(t));
    return out;
}

ReversedKernel reverse_kernel(const cme::ProbabilityField& field, const cme::TransitionKernel& kernel) {
    const auto n = static_cast<Eigen::Index>(kernel.size());
    if (field.slices.empty() || field.slices.front().size() != n)
        throw InvalidArgument("field and kernel shapes differ");
    ReversedKernel out;
    out.tables.resize(field.steps());
    parallel_for(field.steps(), [&](std::size_t m) {
        out.tables[m] = reverse_stationary(field.slices[m], field.slices[m + 1], kernel).tables.front();
    });
    return out;
}

double PrehistoryField::mean(std::size_t m) const { return slice_mean(cells, slices.at(m)); }

double PrehistoryField::variance(std::size_t m) const {
    const double mu = mean(m);
    const Vec& q = slices.at(m);
    double mass = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        mass += q[static_cast<Eigen::Index>(i)];
        acc += q[static_cast<Eigen::Index>(i)] * (cells[i] - mu) * (cells[i] - mu);
    }
    return acc / mass;
}

PrehistoryField npp_from_field(const cme::ProbabilityField& field, const cme::TransitionKernel& kernel,
                               std::size_t source_cell, std::size_t target_cell) {
    const std::size_t nt = field.steps();
    const auto n = static_cast<Eigen::Index>(kernel.size());
    if (field.slices.front().size() != n) throw InvalidArgument("field and kernel shapes differ");
    if (target_cell >= field.interior()) throw InvalidArgument("target cell out of range");
    if (!(field.slices[nt][static_cast<Eigen::Index>(target_cell)] > 0.0))
        throw NumericalError("target state is unreachable in the truncated chain");

    PrehistoryField out;
    out.mode = Mode::npp;
    out.cells = field.cells;
    out.dt = field.dt;
    out.volume = kernel.volume;
    out.source_cell = source_cell;
    out.target_cell = target_cell;
    out.T = field.time(nt);
    out.slices.resize(nt + 1);
    out.renormalized.assign(nt + 1, 0.0);
    out.slices[nt] = Vec::Zero(n);
    out.slices[nt][static_cast<Eigen::Index>(target_cell)] = 1.0;
    for (std::size_t m = nt; m-- > 0;)
        out.renormalized[m] = backward_step(field.slices[m], field.slices[m + 1], kernel, out.slices[m + 1], out.slices[m]);
    fill_peaks(out);
    return out;
}

PrehistoryField npp_compute(const crn::ReactionNetwork& net, const cme::LatticeDomain& dom, double x0, double xT,
                            double T, std::size_t Nt) {
    if (!(T > 0.0) || Nt == 0) throw InvalidArgument("npp requires T > 0 and Nt >= 1");
    const auto kernel = cme::build_kernel(net, dom, T / static_cast<double>(Nt));
    const std::size_t i0 = nearest_lattice_point(x0, dom);
    const std::size_t iT = nearest_lattice_point(xT, dom);
    const auto field = cme::forward_evolve(kernel, dom, cme::point_mass(dom, i0), Nt);
    auto out = npp_from_field(field, kernel, i0, iT);
    out.x0 = x0;
    out.xT = xT;
    return out;
}

PrehistoryField spp_from_stationary(const Vec& pi, const cme::TransitionKernel& kernel,
                                    const std::vector<double>& cells, std::size_t target_cell, std::size_t Nt) {
    const auto n = static_cast<Eigen::Index>(kernel.size());
    if (pi.size() != n) throw InvalidArgument("stationary law length does not match the kernel");
    if (target_cell >= cells.size()) throw InvalidArgument("target cell out of range");
    const Vec pi_next = kernel.apply_left(pi);
    if (!(pi_next[static_cast<Eigen::Index>(target_cell)] > 0.0))
        throw NumericalError("target state has zero stationary mass");

    PrehistoryField out;
    out.mode = Mode::spp;
    out.cells = cells;
    out.dt = kernel.dt;
    out.volume = kernel.volume;
    out.target_cell = target_cell;
    out.T = kernel.dt * static_cast<double>(Nt);
    out.slices.resize(Nt + 1);
    out.renormalized.assign(Nt + 1, 0.0);
    out.slices[Nt] = Vec::Zero(n);
    out.slices[Nt][static_cast<Eigen::Index>(target_cell)] = 1.0;
    for (std::size_t m = Nt; m-- > 0;)
        out.renormalized[m] = backward_step(pi, pi_next, kernel, out.slices[m + 1], out.slices[m]);
    fill_peaks(out);
    return out;
}

PrehistoryField spp_compute(const crn::ReactionNetwork& net, const cme::LatticeDomain& dom, double xT, double T,
                            std::size_t Nt) {
    if (!(T > 0.0) || Nt == 0) throw InvalidArgument("spp requires T > 0 and Nt >= 1");
    const auto kernel = cme::build_kernel(net, dom, T / static_cast<double>(Nt));
    const Vec pi = cme::stationary_distribution(net, dom);
    auto out = spp_from_stationary(pi, kernel, dom.cells(), nearest_lattice_point(xT, dom), Nt);
    out.xT = xT;
    return out;
}

std::vector<PeakPoint> peak_trajectory(const PrehistoryField& field) {
    const std::size_t nt = field.steps();
    const std::size_t nx = field.cells.size();
    std::vector<PeakPoint> out(nt + 1);
    std::size_t prev = field.target_cell;
    for (std::size_t m = nt + 1; m-- > 0;) {
        const Vec& q = field.slices[m];
        double best = 0.0;
        std::size_t arg = nx;
        for (std::size_t i = 0; i < nx; ++i) {
            const double v = q[static_cast<Eigen::Index>(i)];
            if (v > best) {
                best = v;
                arg = i;
            } else if (v == best && arg < nx && v > 0.0) {
                const auto d_new = std::abs(static_cast<std::int64_t>(i) - static_cast<std::int64_t>(prev));
                const auto d_old = std::abs(static_cast<std::int64_t>(arg) - static_cast<std::int64_t>(prev));
                if (d_new < d_old) arg = i;
            }
        }
        if (arg == nx) throw NumericalError("all-zero prehistory slice at step " + std::to_string(m));
        out[m] = {field.time(m), field.cells[arg], arg};
        prev = arg;
    }
    return out;
}

} // namespace revpath::reversal

#include "revpath/crn.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/rational.hpp>

#include "revpath/error.hpp"

namespace revpath::crn {

namespace {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double falling_factorial_ratio(std::int64_t n, int order, double volume) {
    // n (n-1) ... (n-order+1) / V^order
    double value = 1.0;
    for (int k = 0; k < order; ++k) {
        const auto m = n - k;
        if (m <= 0) return 0.0;
        value *= static_cast<double>(m) / volume;
    }
    return value;
}

// -- parsing -----------------------------------------------------------------

class LineCursor {
public:
    LineCursor(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

    void skip_ws() {
        while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
    }

    bool at_end() {
        skip_ws();
        return pos_ >= line_.size() || line_[pos_] == '#';
    }

    char peek() {
        skip_ws();
        return pos_ < line_.size() ? line_[pos_] : '\0';
    }

    bool accept(std::string_view token) {
        skip_ws();
        if (line_.substr(pos_, token.size()) == token) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view token) {
        if (!accept(token)) fail("expected '" + std::string(token) + "'");
    }

    std::string ident() {
        skip_ws();
        const auto start = pos_;
        if (pos_ >= line_.size() || !(std::isalpha(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_'))
            fail("expected identifier");
        while (pos_ < line_.size() &&
               (std::isalnum(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_'))
            ++pos_;
        return std::string(line_.substr(start, pos_ - start));
    }

    bool at_digit() {
        skip_ws();
        return pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]));
    }

    int integer() {
        skip_ws();
        const auto start = pos_;
        while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
        int value = 0;
        const auto [ptr, ec] = std::from_chars(line_.data() + start, line_.data() + pos_, value);
        if (ec != std::errc{} || start == pos_) fail_at(start, "expected integer");
        return value;
    }

    double number() {
        skip_ws();
        const auto start = pos_;
        if (pos_ < line_.size() && (line_[pos_] == '+' || line_[pos_] == '-')) ++pos_;
        while (pos_ < line_.size() &&
               (std::isdigit(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '.'))
            ++pos_;
        if (pos_ < line_.size() && (line_[pos_] == 'e' || line_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < line_.size() && (line_[pos_] == '+' || line_[pos_] == '-')) ++pos_;
            while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
        }
        const std::string text(line_.substr(start, pos_ - start));
        if (text.empty()) fail_at(start, "expected number");
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(text, &used);
        } catch (const std::exception&) {
            fail_at(start, "malformed number '" + text + "'");
        }
        if (used != text.size() || !std::isfinite(value)) fail_at(start, "malformed number '" + text + "'");
        return value;
    }

    std::size_t column() const { return pos_ + 1; }

    [[noreturn]] void fail(const std::string& what) const { fail_at(pos_, what); }
    [[noreturn]] void fail_at(std::size_t pos, const std::string& what) const {
        throw ParseError(line_no_, pos + 1, what);
    }

private:
    std::string_view line_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

std::vector<Term> parse_side(LineCursor& cur, std::vector<std::size_t>& columns) {
    std::vector<Term> terms;
    if (cur.peek() == '0') {
        // "0" alone is the empty complex; "0 S" is not allowed (coefficients are >= 1)
        cur.integer();
        return terms;
    }
    do {
        Term t;
        cur.skip_ws();
        columns.push_back(cur.column());
        if (cur.at_digit()) {
            t.coeff = cur.integer();
            if (t.coeff <= 0) cur.fail("stoichiometric coefficient must be positive");
        }
        t.species = cur.ident();
        terms.push_back(std::move(t));
    } while (cur.accept("+"));
    return terms;
}

struct PendingReaction {
    std::vector<Term> lhs;
    std::vector<Term> rhs;
    std::vector<std::size_t> lhs_cols;
    std::vector<std::size_t> rhs_cols;
    double kf;
    double kb;
    std::size_t line;
    std::size_t kf_col;
    std::size_t kb_col;
};

} // namespace

// -- ReactionNetwork -----------------------------------------------------------

ReactionNetwork::ReactionNetwork(std::vector<std::string> species,
                                 std::map<std::string, double> constants,
                                 std::vector<ReversibleReaction> reactions)
    : species_(std::move(species)), constants_(std::move(constants)), reactions_(std::move(reactions)) {
    if (species_.empty()) throw InvalidArgument("network must declare at least one dynamic species");
    if (reactions_.empty()) throw InvalidArgument("network must contain at least one reaction");
    std::set<std::string> seen;
    for (const auto& s : species_) {
        if (!seen.insert(s).second) throw InvalidArgument("duplicate species '" + s + "'");
    }
    for (const auto& [name, value] : constants_) {
        if (!seen.insert(name).second) throw InvalidArgument("duplicate species '" + name + "'");
        if (!(value > 0.0) || !std::isfinite(value))
            throw InvalidArgument("constant species '" + name + "' must have a positive concentration");
    }
    const auto n = species_.size();
    stoich_.reserve(reactions_.size());
    for (std::size_t i = 0; i < reactions_.size(); ++i) {
        auto& r = reactions_[i];
        if (r.reactant_coeffs.empty()) r.reactant_coeffs.assign(n, 0);
        if (r.product_coeffs.empty()) r.product_coeffs.assign(n, 0);
        if (r.reactant_coeffs.size() != n || r.product_coeffs.size() != n)
            throw InvalidArgument("reaction " + std::to_string(i) + ": coefficient vector length mismatch");
        if (!(r.kf >= 0.0) || !(r.kb >= 0.0) || !std::isfinite(r.kf) || !std::isfinite(r.kb))
            throw InvalidArgument("reaction " + std::to_string(i) + ": rate constants must be finite and >= 0");
        if (!(r.const_factor_fwd > 0.0) || !(r.const_factor_bwd > 0.0))
            throw InvalidArgument("reaction " + std::to_string(i) + ": constant factors must be positive");
        std::vector<int> nu(n);
        bool changes = false;
        for (std::size_t j = 0; j < n; ++j) {
            if (r.reactant_coeffs[j] < 0 || r.product_coeffs[j] < 0)
                throw InvalidArgument("reaction " + std::to_string(i) + ": negative coefficient");
            nu[j] = r.product_coeffs[j] - r.reactant_coeffs[j];
            changes = changes || nu[j] != 0;
        }
        if (!changes) throw InvalidArgument("reaction " + std::to_string(i) + " changes no state");
        stoich_.push_back(std::move(nu));
    }
}

const ReversibleReaction& ReactionNetwork::reaction(std::size_t i) const {
    check_index(i);
    return reactions_[i];
}

std::optional<std::size_t> ReactionNetwork::species_index(std::string_view name) const {
    const auto it = std::find(species_.begin(), species_.end(), name);
    if (it == species_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - species_.begin());
}

const std::vector<int>& ReactionNetwork::stoichiometry(std::size_t i) const {
    check_index(i);
    return stoich_[i];
}

Vec ReactionNetwork::stoichiometry_vector(std::size_t i) const {
    const auto& nu = stoichiometry(i);
    Vec v(nu.size());
    for (std::size_t j = 0; j < nu.size(); ++j) v[static_cast<Eigen::Index>(j)] = nu[j];
    return v;
}

void ReactionNetwork::check_index(std::size_t i) const {
    if (i >= reactions_.size())
        throw InvalidArgument("reaction index " + std::to_string(i) + " out of range (M = " +
                              std::to_string(reactions_.size()) + ")");
}

const std::vector<int>& ReactionNetwork::order(std::size_t i, Direction dir) const {
    return dir == Direction::forward ? reactions_[i].reactant_coeffs : reactions_[i].product_coeffs;
}

double ReactionNetwork::rate_constant(std::size_t i, Direction dir) const {
    const auto& r = reactions_[i];
    return dir == Direction::forward ? r.kf * r.const_factor_fwd : r.kb * r.const_factor_bwd;
}

const std::optional<RateLaw>& ReactionNetwork::custom(std::size_t i, Direction dir) const {
    return dir == Direction::forward ? reactions_[i].custom_fwd : reactions_[i].custom_bwd;
}

double ReactionNetwork::propensity(std::size_t i, Direction dir, std::span<const std::int64_t> n,
                                   double volume) const {
    check_index(i);
    if (n.size() != species_.size()) throw InvalidArgument("population vector has wrong length");
    if (const auto& law = custom(i, dir); law && law->propensity) return law->propensity(n, volume);
    const auto& c = order(i, dir);
    double value = rate_constant(i, dir) * volume;
    for (std::size_t j = 0; j < c.size() && value != 0.0; ++j) {
        if (c[j] > 0) value *= falling_factorial_ratio(n[j], c[j], volume);
    }
    return value;
}

double ReactionNetwork::macroscopic_rate(std::size_t i, Direction dir, const Vec& x) const {
    check_index(i);
    if (const auto& law = custom(i, dir); law && law->macroscopic) return law->macroscopic(x);
    const auto& c = order(i, dir);
    double value = rate_constant(i, dir);
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (c[j] > 0) value *= std::pow(x[static_cast<Eigen::Index>(j)], c[j]);
    }
    return value;
}

Vec ReactionNetwork::rate_gradient(std::size_t i, Direction dir, const Vec& x) const {
    check_index(i);
    if (const auto& law = custom(i, dir); law && law->gradient) return law->gradient(x);
    const auto& c = order(i, dir);
    const auto n = static_cast<Eigen::Index>(c.size());
    Vec g = Vec::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (c[j] == 0) continue;
        double v = rate_constant(i, dir) * c[j] * std::pow(x[j], c[j] - 1);
        for (Eigen::Index l = 0; l < n; ++l) {
            if (l != j && c[l] > 0) v *= std::pow(x[l], c[l]);
        }
        g[j] = v;
    }
    return g;
}

Mat ReactionNetwork::rate_hessian(std::size_t i, Direction dir, const Vec& x) const {
    check_index(i);
    if (const auto& law = custom(i, dir); law) {
        if (law->hessian) return law->hessian(x);
        if (law->gradient) {
            const auto n = x.size();
            Mat h(n, n);
            for (Eigen::Index j = 0; j < n; ++j) {
                const double step = 1e-6 * std::max(1.0, std::abs(x[j]));
                Vec xp = x, xm = x;
                xp[j] += step;
                xm[j] -= step;
                h.col(j) = (law->gradient(xp) - law->gradient(xm)) / (2.0 * step);
            }
            return 0.5 * (h + h.transpose());
        }
    }
    const auto& c = order(i, dir);
    const auto n = static_cast<Eigen::Index>(c.size());
    Mat h = Mat::Zero(n, n);
    const double k = rate_constant(i, dir);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            double v = k;
            for (Eigen::Index l = 0; l < n; ++l) {
                int p = c[l];
                double coef = 1.0;
                if (l == a) {
                    coef *= p;
                    --p;
                }
                if (l == b) {
                    coef *= p;
                    --p;
                }
                if (coef == 0.0) {
                    v = 0.0;
                    break;
                }
                if (p > 0) coef *= std::pow(x[l], p);
                v *= coef;
            }
            h(a, b) = v;
        }
    }
    return h;
}

std::string ReactionNetwork::serialize() const {
    std::ostringstream out;
    out << "species ";
    for (std::size_t j = 0; j < species_.size(); ++j) out << (j ? ", " : "") << species_[j];
    out << '\n';
    for (const auto& [name, value] : constants_) out << "const " << name << " = " << format_number(value) << '\n';
    auto side = [&](const std::vector<Term>& terms) {
        if (terms.empty()) {
            out << '0';
            return;
        }
        for (std::size_t t = 0; t < terms.size(); ++t) {
            if (t) out << " + ";
            if (terms[t].coeff != 1) out << terms[t].coeff << ' ';
            out << terms[t].species;
        }
    };
    for (const auto& r : reactions_) {
        // Reactions built programmatically may lack written sides; rebuild from coefficients.
        std::vector<Term> lhs = r.reactant_terms, rhs = r.product_terms;
        if (lhs.empty() && rhs.empty()) {
            for (std::size_t j = 0; j < species_.size(); ++j) {
                if (r.reactant_coeffs[j]) lhs.push_back({species_[j], r.reactant_coeffs[j]});
                if (r.product_coeffs[j]) rhs.push_back({species_[j], r.product_coeffs[j]});
            }
        }
        out << "reaction ";
        side(lhs);
        out << " <=> ";
        side(rhs);
        out << " @ kf=" << format_number(r.kf) << ", kb=" << format_number(r.kb) << '\n';
    }
    return out.str();
}

// -- parser ----------------------------------------------------------------------

ReactionNetwork parse_network(std::string_view text) {
    std::vector<std::string> species;
    std::map<std::string, double> constants;
    std::vector<PendingReaction> pending;
    std::set<std::string> declared;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = std::min(text.find('\n', start), text.size());
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        start = end + 1;

        LineCursor cur(line, line_no);
        if (cur.at_end()) {
            if (end == text.size()) break;
            continue;
        }
        if (cur.accept("species")) {
            do {
                const auto col = cur.column();
                auto name = cur.ident();
                if (!declared.insert(name).second) cur.fail_at(col, "duplicate species '" + name + "'");
                species.push_back(std::move(name));
            } while (cur.accept(","));
        } else if (cur.accept("const")) {
            const auto col = cur.column();
            auto name = cur.ident();
            if (!declared.insert(name).second) cur.fail_at(col, "duplicate species '" + name + "'");
            cur.expect("=");
            const auto vcol = cur.column();
            const double value = cur.number();
            if (!(value > 0.0)) cur.fail_at(vcol, "constant concentration must be positive");
            constants.emplace(std::move(name), value);
        } else if (cur.accept("reaction")) {
            PendingReaction r;
            r.line = line_no;
            r.lhs = parse_side(cur, r.lhs_cols);
            cur.expect("<=>");
            r.rhs = parse_side(cur, r.rhs_cols);
            cur.expect("@");
            cur.expect("kf");
            cur.expect("=");
            r.kf_col = cur.column();
            r.kf = cur.number();
            cur.expect(",");
            cur.expect("kb");
            cur.expect("=");
            r.kb_col = cur.column();
            r.kb = cur.number();
            if (!(r.kf > 0.0)) cur.fail_at(r.kf_col - 1, "non-positive rate constant kf");
            if (!(r.kb > 0.0)) cur.fail_at(r.kb_col - 1, "non-positive rate constant kb");
            pending.push_back(std::move(r));
        } else {
            cur.fail("expected 'species', 'const', 'reaction' or a comment");
        }
        if (!cur.at_end()) cur.fail("unexpected trailing input");
        if (end == text.size()) break;
    }

    if (species.empty()) throw ParseError(line_no, 1, "no dynamic species declared");
    if (pending.empty()) throw ParseError(line_no, 1, "no reactions declared");

    std::vector<ReversibleReaction> reactions;
    const auto n = species.size();
    for (auto& p : pending) {
        ReversibleReaction r;
        r.reactant_coeffs.assign(n, 0);
        r.product_coeffs.assign(n, 0);
        r.kf = p.kf;
        r.kb = p.kb;
        auto fold = [&](const std::vector<Term>& terms, const std::vector<std::size_t>& cols,
                        std::vector<int>& coeffs, double& factor) {
            for (std::size_t k = 0; k < terms.size(); ++k) {
                const auto& t = terms[k];
                const auto it = std::find(species.begin(), species.end(), t.species);
                if (it != species.end()) {
                    coeffs[static_cast<std::size_t>(it - species.begin())] += t.coeff;
                } else if (const auto c = constants.find(t.species); c != constants.end()) {
                    factor *= std::pow(c->second, t.coeff);
                } else {
                    throw ParseError(p.line, cols[k], "undeclared species '" + t.species + "'");
                }
            }
        };
        fold(p.lhs, p.lhs_cols, r.reactant_coeffs, r.const_factor_fwd);
        fold(p.rhs, p.rhs_cols, r.product_coeffs, r.const_factor_bwd);
        if (r.reactant_coeffs == r.product_coeffs) throw ParseError(p.line, 1, "reaction changes no state");
        r.reactant_terms = std::move(p.lhs);
        r.product_terms = std::move(p.rhs);
        reactions.push_back(std::move(r));
    }
    return ReactionNetwork(std::move(species), std::move(constants), std::move(reactions));
}

ReactionNetwork load_network(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open network file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_network(buf.str());
}

// -- stoichiometric analysis ------------------------------------------------------

namespace {

using Rational = boost::rational<std::int64_t>;
using RationalMatrix = std::vector<std::vector<Rational>>;

// Reduced row echelon form in place; returns pivot columns.
std::vector<std::size_t> rref(RationalMatrix& a, std::size_t cols) {
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t col = 0; col < cols && row < a.size(); ++col) {
        std::size_t sel = row;
        while (sel < a.size() && a[sel][col] == Rational(0)) ++sel;
        if (sel == a.size()) continue;
        std::swap(a[sel], a[row]);
        const Rational lead = a[row][col];
        for (auto& v : a[row]) v /= lead;
        for (std::size_t r = 0; r < a.size(); ++r) {
            if (r == row || a[r][col] == Rational(0)) continue;
            const Rational f = a[r][col];
            for (std::size_t c = 0; c < cols; ++c) a[r][c] -= f * a[row][c];
        }
        pivots.push_back(col);
        ++row;
    }
    return pivots;
}

std::vector<std::int64_t> to_primitive_integers(const std::vector<Rational>& v) {
    std::int64_t lcm = 1;
    for (const auto& q : v) lcm = std::lcm(lcm, q.denominator());
    std::vector<std::int64_t> out(v.size());
    std::int64_t g = 0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        out[k] = (v[k] * lcm).numerator();
        g = std::gcd(g, out[k] < 0 ? -out[k] : out[k]);
    }
    if (g > 1)
        for (auto& x : out) x /= g;
    return out;
}

} // namespace

StoichMatrix stoich_analysis(const ReactionNetwork& net) {
    const auto n = net.num_species();
    const auto m = net.num_reactions();
    StoichMatrix out;
    out.rows.reserve(m);
    for (std::size_t i = 0; i < m; ++i) out.rows.push_back(net.stoichiometry(i));

    RationalMatrix a(m, std::vector<Rational>(n));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = out.rows[i][j];
    const auto pivots = rref(a, n);
    out.rank = pivots.size();

    // Null space of the M x N matrix: one basis vector per free column.
    std::vector<bool> is_pivot(n, false);
    for (auto p : pivots) is_pivot[p] = true;
    for (std::size_t free = 0; free < n; ++free) {
        if (is_pivot[free]) continue;
        std::vector<Rational> eta(n, Rational(0));
        eta[free] = 1;
        for (std::size_t r = 0; r < pivots.size(); ++r) eta[pivots[r]] = -a[r][free];
        out.conservation_basis.push_back(to_primitive_integers(eta));
    }

    // Increment basis: greedily keep original rows that raise the rank.
    RationalMatrix kept;
    for (std::size_t i = 0; i < m && out.increment_basis.size() < out.rank; ++i) {
        auto trial = kept;
        trial.emplace_back(out.rows[i].begin(), out.rows[i].end());
        if (rref(trial, n).size() > kept.size()) {
            kept.emplace_back(out.rows[i].begin(), out.rows[i].end());
            out.increment_basis.emplace_back(out.rows[i].begin(), out.rows[i].end());
        }
    }
    return out;
}

// -- ScalarChain -------------------------------------------------------------------

ScalarChain::ScalarChain(const ReactionNetwork& net) : net_(net) {
    if (net.num_species() != 1) throw InvalidArgument("scalar chain requires exactly one dynamic species");
    int g = 0;
    for (std::size_t i = 0; i < net.num_reactions(); ++i) g = std::gcd(g, std::abs(net.stoichiometry(i)[0]));
    step_ = g;
    std::set<int> multiples;
    for (std::size_t i = 0; i < net.num_reactions(); ++i) multiples.insert(std::abs(net.stoichiometry(i)[0]) / g);
    multiples_.assign(multiples.begin(), multiples.end());
    members_.resize(multiples_.size());
    for (std::size_t i = 0; i < net.num_reactions(); ++i) {
        const int nu = net.stoichiometry(i)[0];
        const auto group = static_cast<std::size_t>(
            std::find(multiples_.begin(), multiples_.end(), std::abs(nu) / g) - multiples_.begin());
        members_[group].push_back({i, nu > 0 ? Direction::forward : Direction::backward});
    }
}

namespace {
Direction opposite(Direction d) { return d == Direction::forward ? Direction::backward : Direction::forward; }
} // namespace

double ScalarChain::up_propensity(std::size_t group, std::int64_t n, double volume) const {
    double total = 0.0;
    for (const auto& m : members_.at(group)) total += net_.propensity(m.reaction, m.up_dir, {&n, 1}, volume);
    return total;
}

double ScalarChain::down_propensity(std::size_t group, std::int64_t n, double volume) const {
    double total = 0.0;
    for (const auto& m : members_.at(group))
        total += net_.propensity(m.reaction, opposite(m.up_dir), {&n, 1}, volume);
    return total;
}

double ScalarChain::up_rate(std::size_t group, double x) const {
    const Vec v = Vec::Constant(1, x);
    double total = 0.0;
    for (const auto& m : members_.at(group)) total += net_.macroscopic_rate(m.reaction, m.up_dir, v);
    return total;
}

double ScalarChain::down_rate(std::size_t group, double x) const {
    const Vec v = Vec::Constant(1, x);
    double total = 0.0;
    for (const auto& m : members_.at(group)) total += net_.macroscopic_rate(m.reaction, opposite(m.up_dir), v);
    return total;
}

double ScalarChain::up_rate_derivative(std::size_t group, double x) const {
    const Vec v = Vec::Constant(1, x);
    double total = 0.0;
    for (const auto& m : members_.at(group)) total += net_.rate_gradient(m.reaction, m.up_dir, v)[0];
    return total;
}

double ScalarChain::down_rate_derivative(std::size_t group, double x) const {
    const Vec v = Vec::Constant(1, x);
    double total = 0.0;
    for (const auto& m : members_.at(group))
        total += net_.rate_gradient(m.reaction, opposite(m.up_dir), v)[0];
    return total;
}

} // namespace revpath::crn

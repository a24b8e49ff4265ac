#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "revpath/error.hpp"
#include "revpath/parallel.hpp"

namespace revpath::cli {

const char* const mono_network = "species S\nconst A = 1.0\nreaction A <=> S @ kf=1, kb=1\n";
const char* const bistable_network =
    "species S\nconst A = 1.0\nreaction A + 2 S <=> 3 S @ kf=6, kb=1\nreaction A <=> S @ kf=6, kb=11\n";

// -- output helpers -----------------------------------------------------------------

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void put(std::FILE* f, double v) { std::fprintf(f, "%.17g", v); }

void put_row(std::FILE* f, const std::vector<double>& row) {
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (k) std::fputc(',', f);
        put(f, row[k]);
    }
    std::fputc('\n', f);
}

void put_header(std::FILE* f, const std::vector<std::string>& cols) {
    for (std::size_t k = 0; k < cols.size(); ++k) std::fprintf(f, k ? ",%s" : "%s", cols[k].c_str());
    std::fputc('\n', f);
}

std::string fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + buf;
}

std::string fnv1a_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return fnv1a(s.str());
}

void write_trajectory(std::FILE* f, const kinetics::Trajectory& traj) {
    const auto n = traj.states.empty() ? 0 : traj.states.front().size();
    std::vector<std::string> cols{"t"};
    for (Eigen::Index j = 0; j < n; ++j) cols.push_back("x_" + std::to_string(j + 1));
    put_header(f, cols);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<double> row{traj.times[k]};
        for (Eigen::Index j = 0; j < n; ++j) row.push_back(traj.states[k][j]);
        put_row(f, row);
    }
}

void write_hamiltonian(std::FILE* f, const ldp::HamiltonianTrajectory& traj) {
    put_header(f, {"t", "x", "alpha", "action_so_far"});
    for (std::size_t k = 0; k < traj.size(); ++k)
        put_row(f, {traj.times[k], traj.x[k][0], traj.alpha[k][0], traj.action[k]});
}

void write_field(std::FILE* f, const std::vector<double>& cells, double dt, const std::vector<Vec>& slices,
                 std::size_t every, bool absorbed_column) {
    std::fputc('t', f);
    for (double x : cells) std::fprintf(f, ",%.17g", x);
    if (absorbed_column) std::fputs(",absorbed", f);
    std::fputc('\n', f);
    const std::size_t last = slices.size() - 1;
    for (std::size_t m = 0; m <= last; ++m) {
        if (m % every != 0 && m != last) continue;
        put(f, static_cast<double>(m) * dt);
        const auto cols = static_cast<Eigen::Index>(cells.size()) + (absorbed_column ? 1 : 0);
        for (Eigen::Index i = 0; i < cols; ++i) {
            std::fputc(',', f);
            put(f, slices[m][i]);
        }
        std::fputc('\n', f);
    }
}

// -- Run --------------------------------------------------------------------------

Run::Run(std::string command, std::vector<std::string> args, const Params& p)
    : command_(std::move(command)), args_(std::move(args)), dir_(p.out) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path Run::path(const std::string& file) const { return dir_ / file; }

std::FILE* Run::open(const std::string& file) {
    std::FILE* f = std::fopen(path(file).c_str(), "w");
    if (!f) throw InvalidArgument("cannot write " + path(file).string());
    outputs_.push_back(file);
    return f;
}

void Run::close(std::FILE* f) {
    if (std::fclose(f) != 0) throw Error("write failed");
}

void Run::set_network(const std::string& source, const std::string& text) {
    network_ = {{"source", source}, {"hash", fnv1a(text)}, {"text", text}};
}

void Run::write_manifest() const {
    json outputs = json::array();
    for (const auto& o : outputs_) outputs.push_back({{"file", o}, {"hash", fnv1a_file(path(o))}});
    // Replay drops --out so the same manifest can target another directory.
    json args = json::array();
    for (std::size_t k = 0; k < args_.size(); ++k) {
        if (args_[k] == "--out" && k + 1 < args_.size()) {
            ++k;
            continue;
        }
        if (args_[k].rfind("--out=", 0) == 0) continue;
        args.push_back(args_[k]);
    }
    const json m = {{"command", command_},
                    {"args", args},
                    {"network", network_},
                    {"parameters", params_},
                    {"version", REVPATH_VERSION},
                    {"threads", worker_count()},
                    {"outputs", outputs}};
    std::ofstream out(path("manifest.json"));
    out << m.dump(2) << '\n';
    if (!out) throw Error("cannot write manifest.json");
}

// -- shared inputs -------------------------------------------------------------------

crn::ReactionNetwork load(Run& run, const std::string& path, const char* fallback) {
    std::string text;
    std::string source;
    if (path.empty()) {
        if (!fallback) throw InvalidArgument("--net is required");
        text = fallback;
        source = fallback == bistable_network ? "builtin:bistable" : "builtin:mono";
    } else {
        std::ifstream in(path);
        if (!in) throw InvalidArgument("cannot open network file '" + path + "'");
        std::ostringstream s;
        s << in.rdbuf();
        text = s.str();
        source = path;
    }
    auto net = crn::parse_network(text);
    run.set_network(source, text);
    return net;
}

std::pair<double, double> parse_pair(const std::string& text, const char* what) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw InvalidArgument(std::string(what) + " must look like LO:HI");
    try {
        std::size_t used = 0;
        const double lo = std::stod(text.substr(0, colon), &used);
        const double hi = std::stod(text.substr(colon + 1));
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw InvalidArgument(std::string(what) + " must look like LO:HI");
    }
}

double attractor(const crn::ReactionNetwork& net, double x) {
    auto traj = kinetics::ode_solve(net, Vec::Constant(1, x), 200.0, 1e-2);
    return traj.states.back()[0];
}

cme::LatticeDomain resolve_domain(const crn::ReactionNetwork& net, const Params& p, double V, double x_from,
                                  double xT, double action, double x_eq) {
    if (!p.domain.empty()) {
        const auto [lo, hi] = parse_pair(p.domain, "--domain");
        return cme::LatticeDomain(lo, hi, V, crn::ScalarChain(net).lattice_step());
    }
    const auto [lo, hi] = ldp::choose_domain(net, x_eq, x_from, xT, action);
    return cme::LatticeDomain(lo, hi, V, crn::ScalarChain(net).lattice_step());
}

// -- dispatch --------------------------------------------------------------------------

namespace {

using Handler = void (*)(Run&, const Params&);

struct Sub {
    CLI::App* app;
    Handler fn;
};

void add_net(CLI::App* s, Params& p) { s->add_option("--net", p.net, "network file"); }
void add_V(CLI::App* s, Params& p) { s->add_option("--V", p.V, "volume(s), comma separated")->delimiter(','); }
void add_x0(CLI::App* s, Params& p) { s->add_option("--x0", p.x0, "initial state")->delimiter(','); }
void add_xT(CLI::App* s, Params& p) {
    s->add_option_function<double>("--xT", [&p](const double& v) { p.xT = v; }, "terminal state");
}
void add_xeq(CLI::App* s, Params& p) {
    s->add_option_function<double>("--xeq", [&p](const double& v) { p.xeq = v; }, "reference equilibrium");
}
void add_T(CLI::App* s, Params& p) { s->add_option("--T", p.T, "time horizon"); }
void add_Nt(CLI::App* s, Params& p) { s->add_option("--Nt", p.Nt, "time steps of the lattice computation"); }
void add_domain(CLI::App* s, Params& p) { s->add_option("--domain", p.domain, "lattice domain LO:HI"); }
void add_seed(CLI::App* s, Params& p) { s->add_option("--seed", p.seed, "master seed"); }
void add_dt(CLI::App* s, Params& p) { s->add_option("--dt", p.dt, "time step"); }
void add_runs(CLI::App* s, Params& p) { s->add_option("--runs", p.runs, "ensemble size"); }
void add_mode(CLI::App* s, Params& p) {
    s->add_option("--mode", p.mode, "npp or spp")->check(CLI::IsMember({"npp", "spp"}));
}
void add_every(CLI::App* s, Params& p) { s->add_option("--every", p.every, "write every k-th time slice"); }

int replay(const Params& p) {
    std::ifstream in(p.manifest);
    if (!in) throw InvalidArgument("cannot open manifest '" + p.manifest + "'");
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed manifest: ") + e.what());
    }
    std::vector<std::string> args = m.at("args").get<std::vector<std::string>>();
    args.push_back("--out");
    args.push_back(p.out);
    const int rc = dispatch(args);
    if (rc != 0 || !p.check) return rc;
    int mismatches = 0;
    for (const auto& o : m.at("outputs")) {
        const auto file = o.at("file").get<std::string>();
        const auto h = fnv1a_file(std::filesystem::path(p.out) / file);
        if (h != o.at("hash").get<std::string>()) {
            std::cerr << "replay: " << file << " differs from the manifest\n";
            ++mismatches;
        }
    }
    if (mismatches) return 2;
    std::cout << "replay: all " << m.at("outputs").size() << " outputs match\n";
    return 0;
}

} // namespace

int dispatch(const std::vector<std::string>& args) {
    Params p;
    CLI::App app{"revpath: prehistory probabilities and optimal paths of chemical reaction networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", REVPATH_VERSION);
    std::vector<Sub> subs;
    auto sub = [&](const char* name, const char* help, Handler fn) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("--out", p.out, "output directory");
        add_net(s, p);
        subs.push_back({s, fn});
        return s;
    };

    auto* ode = sub("ode", "deterministic rate equation (RK4)", cmd_ode);
    add_x0(ode, p), add_T(ode, p), add_dt(ode, p);
    for (auto [name, help, fn] : {std::tuple{"ssa", "Gillespie simulation", cmd_ssa},
                                  std::tuple{"tauleap", "Euler tau-leaping", cmd_tauleap},
                                  std::tuple{"cle", "chemical Langevin equation", cmd_cle}}) {
        auto* s = sub(name, help, fn);
        add_x0(s, p), add_V(s, p), add_T(s, p), add_dt(s, p), add_seed(s, p), add_runs(s, p);
    }
    auto* nop = sub("nop", "non-stationary optimal path by shooting", cmd_nop);
    add_x0(nop, p), add_xT(nop, p), add_T(nop, p), add_dt(nop, p);
    auto* op = sub("op", "stationary optimal path", cmd_op);
    add_xT(op, p), add_xeq(op, p);
    auto* qp = sub("quasipotential", "quasipotential S(x) on a grid", cmd_quasipotential);
    add_xeq(qp, p);
    qp->add_option("--range", p.range, "grid LO:HI:STEP")->required();
    auto* st = sub("stationary", "stationary distribution on a lattice", cmd_stationary);
    add_V(st, p), add_domain(st, p), add_xeq(st, p);
    auto* pre = sub("prehistory", "NPP or SPP prehistory probability", cmd_prehistory);
    add_V(pre, p), add_T(pre, p), add_Nt(pre, p), add_domain(pre, p), add_x0(pre, p), add_xT(pre, p),
        add_mode(pre, p), add_every(pre, p);
    auto* rs = sub("reversed-sim", "sample the time-reversed process", cmd_reversed_sim);
    add_V(rs, p), add_T(rs, p), add_Nt(rs, p), add_domain(rs, p), add_x0(rs, p), add_xT(rs, p), add_mode(rs, p),
        add_seed(rs, p), add_runs(rs, p), add_dt(rs, p);
    rs->get_option("--dt")->description("sampling grid of the ensemble summary");
    auto* cov = sub("covariance", "limit covariance kappa(t)", cmd_covariance);
    add_V(cov, p), add_T(cov, p), add_Nt(cov, p), add_domain(cov, p), add_x0(cov, p), add_xT(cov, p),
        add_mode(cov, p), add_dt(cov, p), add_xeq(cov, p);
    auto* fig = sub("figure", "reproduce figure data (fig1 .. fig5)", cmd_figure);
    fig->add_option("name", p.figure, "fig1, fig2, fig3, fig4 or fig5")
        ->required()
        ->check(CLI::IsMember({"fig1", "fig2", "fig3", "fig4", "fig5"}));
    add_V(fig, p), add_Nt(fig, p), add_domain(fig, p), add_every(fig, p);

    auto* rp = app.add_subcommand("replay", "re-run the command recorded in a manifest");
    rp->add_option("manifest", p.manifest, "manifest.json")->required();
    rp->add_option("--out", p.out, "output directory for the re-run");
    rp->add_flag("--check", p.check, "compare output hashes with the manifest");

    std::vector<std::string> argv_store{"revpath"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (rp->parsed()) return replay(p);
        for (const auto& s : subs) {
            if (!s.app->parsed()) continue;
            if (p.every == 0) throw InvalidArgument("--every must be at least 1");
            Run run(s.app->get_name(), args, p);
            s.fn(run, p);
            run.write_manifest();
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "revpath: network: " << e.what() << '\n';
        return 1;
    } catch (const InvalidArgument& e) {
        std::cerr << "revpath: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "revpath: numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace revpath::cli

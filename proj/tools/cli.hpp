#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "revpath/cme.hpp"
#include "revpath/crn.hpp"
#include "revpath/kinetics.hpp"
#include "revpath/ldp.hpp"
#include "revpath/reversal.hpp"

namespace revpath::cli {

using json = nlohmann::ordered_json;

// Every flag any subcommand understands; each subcommand registers the ones it uses.
struct Params {
    std::string net;
    std::vector<double> V;
    double T = 1.0;
    std::size_t Nt = 1000;
    std::string domain;
    std::vector<double> x0;
    std::optional<double> xT;
    std::optional<double> xeq;
    std::uint64_t seed = 1;
    std::string out = ".";
    std::string mode = "npp";
    double dt = std::numeric_limits<double>::quiet_NaN(); // NaN: the command's own default
    std::size_t runs = 1;
    std::string range;
    std::size_t every = 1;
    std::string figure;
    std::string manifest;
    bool check = false;
};

/// Bookkeeping for one invocation: output files, parameters, manifest.
class Run {
public:
    Run(std::string command, std::vector<std::string> args, const Params& p);

    std::filesystem::path path(const std::string& file) const;
    /// Opens `file` in the output directory and records it for the manifest.
    std::FILE* open(const std::string& file);
    void close(std::FILE* f);

    json& parameters() { return params_; }
    void set_network(const std::string& source, const std::string& text);
    void write_manifest() const;

private:
    std::string command_;
    std::vector<std::string> args_;
    std::filesystem::path dir_;
    json params_ = json::object();
    json network_ = nullptr;
    std::vector<std::string> outputs_;
};

// CSV helpers; numbers always go out as %.17g.
void put(std::FILE* f, double v);
void put_row(std::FILE* f, const std::vector<double>& row);
void put_header(std::FILE* f, const std::vector<std::string>& cols);
std::string num(double v);

std::string fnv1a_file(const std::filesystem::path& path);
std::string fnv1a(const std::string& data);

/// Network from --net, or the named built-in ("mono" / "bistable") when empty.
crn::ReactionNetwork load(Run& run, const std::string& path, const char* fallback = nullptr);
extern const char* const mono_network;
extern const char* const bistable_network;

std::pair<double, double> parse_pair(const std::string& text, const char* what);
/// Nearest stable equilibrium reached by the ODE from x.
double attractor(const crn::ReactionNetwork& net, double x);
/// Domain from --domain, or from the quasipotential criterion around the path.
cme::LatticeDomain resolve_domain(const crn::ReactionNetwork& net, const Params& p, double V, double x_from,
                                  double xT, double action, double x_eq);

void write_trajectory(std::FILE* f, const kinetics::Trajectory& traj);
void write_hamiltonian(std::FILE* f, const ldp::HamiltonianTrajectory& traj);
void write_field(std::FILE* f, const std::vector<double>& cells, double dt, const std::vector<Vec>& slices,
                 std::size_t every, bool absorbed_column);

// Subcommands. Each returns normally on success and throws on failure.
void cmd_ode(Run& run, const Params& p);
void cmd_ssa(Run& run, const Params& p);
void cmd_tauleap(Run& run, const Params& p);
void cmd_cle(Run& run, const Params& p);
void cmd_nop(Run& run, const Params& p);
void cmd_op(Run& run, const Params& p);
void cmd_quasipotential(Run& run, const Params& p);
void cmd_stationary(Run& run, const Params& p);
void cmd_prehistory(Run& run, const Params& p);
void cmd_reversed_sim(Run& run, const Params& p);
void cmd_covariance(Run& run, const Params& p);
void cmd_figure(Run& run, const Params& p);

/// --dt when given, otherwise `fallback`.
double step_or(const Params& p, double fallback);

/// Parses and runs one command line (without the program name).
int dispatch(const std::vector<std::string>& args);

} // namespace revpath::cli

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const char* kMono = "species S\nconst A = 1.0\nreaction A <=> S @ kf=1, kb=1\n";

struct Sandbox {
    fs::path dir;
    Sandbox() {
        dir = fs::temp_directory_path() / ("revpath_cli_" + std::to_string(::getpid()) + "_" +
                                           std::to_string(counter()++));
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "mono.crn") << kMono;
    }
    ~Sandbox() { fs::remove_all(dir); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string net() const { return (dir / "mono.crn").string(); }
};

// Runs the tool; stdout goes to `capture` when given. Returns the exit status.
int run(const std::string& args, const fs::path& capture = {}) {
    std::string cmd = std::string(REVPATH_CLI) + " " + args;
    cmd += capture.empty() ? " > /dev/null" : " > '" + capture.string() + "'";
    cmd += " 2> /dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("quasipotential column at x = 2") {
    Sandbox box;
    REQUIRE(run("quasipotential --net " + box.net() + " --xeq 1 --range 0.1:3:0.01 --out " + box.dir.string()) ==
            0);
    std::ifstream in(box.dir / "quasipotential.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "x,S,dS");
    bool found = false;
    while (std::getline(in, line)) {
        double x, S, dS;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &S, &dS) == 3);
        if (std::abs(x - 2.0) < 1e-9) {
            CHECK(std::abs(S - 0.386294) <= 1e-6);
            found = true;
        }
    }
    CHECK(found);
    CHECK(fs::exists(box.dir / "manifest.json"));
}

TEST_CASE("nop reports alpha0") {
    Sandbox box;
    const auto out = box.dir / "stdout.txt";
    REQUIRE(run("nop --net " + box.net() + " --x0 1 --xT 2 --T 1 --out " + box.dir.string(), out) == 0);
    const auto text = slurp(out);
    double a0 = 0.0;
    REQUIRE(std::sscanf(text.c_str(), "alpha0 = %lf", &a0) == 1);
    CHECK(a0 >= 0.377);
    CHECK(a0 <= 0.387);
    CHECK(slurp(box.dir / "nop.csv").rfind("t,x,alpha,action_so_far\n", 0) == 0);
}

TEST_CASE("figure fig2 file set") {
    Sandbox box;
    REQUIRE(run("figure fig2 --net " + box.net() + " --V 10,30,150 --every 10 --out " + box.dir.string()) == 0);
    for (const char* f : {"fig2_V10.csv", "fig2_V30.csv", "fig2_V150.csv", "fig2_peaks.csv", "fig2_nop.csv",
                          "manifest.json"})
        CHECK_MESSAGE(fs::exists(box.dir / f), f);
    CHECK(slurp(box.dir / "fig2_peaks.csv").rfind("V,t,x_peak\n", 0) == 0);
}

TEST_CASE("exit codes") {
    Sandbox box;
    const auto d = " --out " + box.dir.string();
    CHECK(run("nosuchcommand" + d) == 1);
    CHECK(run("nop --net " + box.net() + " --x0 1 --xT 2 --bogus-flag" + d) == 1);
    CHECK(run("nop --net " + (box.dir / "missing.crn").string() + " --x0 1 --xT 2" + d) == 1);
    CHECK(run("prehistory --net " + box.net() + " --V 30 --xT 2 --x0 1 --mode spp" + d) == 1);
    {
        std::ofstream(box.dir / "bad.crn") << "species S\nreaction A <=> S @ kf=1\n";
        CHECK(run("nop --net " + (box.dir / "bad.crn").string() + " --x0 1 --xT 2" + d) == 1);
    }
    // RK4 with a step far beyond the dimerization time scale leaves the orthant.
    std::ofstream(box.dir / "dimer.crn") << "species S\nreaction 2 S <=> 0 @ kf=10, kb=0.001\n";
    CHECK(run("ode --net " + (box.dir / "dimer.crn").string() + " --x0 10 --T 5 --dt 1" + d) == 2);
}

TEST_CASE("manifest replay is byte identical") {
    Sandbox box;
    const auto a = box.dir / "a";
    REQUIRE(run("prehistory --net " + box.net() + " --V 20 --x0 1 --xT 2 --T 1 --Nt 200 --out " + a.string()) ==
            0);
    REQUIRE(run("reversed-sim --net " + box.net() + " --V 20 --x0 1 --xT 2 --runs 20 --seed 3 --Nt 200 --out " +
                (box.dir / "s").string()) == 0);
    for (const char* sub : {"a", "s"}) {
        const auto first = box.dir / sub;
        const auto again = box.dir / (std::string(sub) + "_replay");
        REQUIRE(run("replay " + (first / "manifest.json").string() + " --check --out " + again.string()) == 0);
        for (const auto& e : fs::directory_iterator(first)) {
            if (e.path().extension() != ".csv") continue;
            CHECK_MESSAGE(slurp(e.path()) == slurp(again / e.path().filename()), e.path().string());
        }
    }
}

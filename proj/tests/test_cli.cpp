#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gfdtl/io.hpp"
#include "gfdtl/solver.hpp"
#include "gfdtl/tuning.hpp"

using json = nlohmann::json;
using namespace gfdtl;
namespace fs = std::filesystem;

namespace {

const std::string kBin = GFDTL_CLI_PATH;

// Every test works inside its own scratch directory.
struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() /
              ("gfdtl_cli_" + std::to_string(Catch::rngSeed()) + "_" +
               std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string p(const std::string& name) const { return (dir / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run(const std::string& args) {
    const std::string cmd = kBin + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json read_json(const std::string& path) { return json::parse(read_file(path)); }

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) out.push_back(line);
    return out;
}

const char* kIdentityData = "1,0\n0,1\n";

}  // namespace

TEST_CASE("fit reproduces the two-date dichotomy and writes both outputs", "[cli]") {
    Scratch s;
    write_file(s.p("data.csv"), kIdentityData);

    REQUIRE(run("fit --data " + s.p("data.csv") + " --lambda1 0.1 --lambda2 0.3 --out " +
                s.p("r1.json") + " --path-out " + s.p("p1.csv")) == 0);
    const json r1 = read_json(s.p("r1.json"));
    CHECK(r1.at("schema_version") == 1);
    CHECK(r1.at("status") == "PossiblyUnsolvable");

    // a tight tolerance keeps the constant solution below the break threshold
    REQUIRE(run("fit --data " + s.p("data.csv") +
                " --lambda1 0.1 --lambda2 10 --tol 1e-8 --out " + s.p("r2.json") +
                " --path-out " + s.p("p2.csv")) == 0);
    const json r2 = read_json(s.p("r2.json"));
    CHECK(r2.at("status") == "Converged");
    CHECK(r2.at("gap").get<double>() <= 1e-3);
    CHECK(r2.at("T") == 2);
    CHECK(r2.at("breaks").empty());

    const PrecisionPath path = read_path_csv_file(s.p("p2.csv"));
    REQUIRE(path.size() == 2);
    CHECK(path[0].rows() == 2);
}

TEST_CASE("fit rejects malformed data without writing outputs", "[cli]") {
    Scratch s;
    write_file(s.p("bad.csv"), "1,0\n0,zero\n");
    CHECK(run("fit --data " + s.p("bad.csv") + " --out " + s.p("r.json") + " --path-out " +
              s.p("p.csv")) == 1);
    CHECK_FALSE(fs::exists(s.p("r.json")));
    CHECK_FALSE(fs::exists(s.p("p.csv")));

    CHECK(run("fit --data " + s.p("missing.csv") + " --out " + s.p("r.json") +
              " --path-out " + s.p("p.csv")) == 1);
}

TEST_CASE("fit takes settings from a config file with flag overrides", "[cli]") {
    Scratch s;
    write_file(s.p("data.csv"), kIdentityData);
    write_file(s.p("cfg.json"), "{\"lambda1\": 0.1, \"lambda2\": 0.3}\n");

    // the config alone lands in the unsolvable regime; the flag rescues it
    REQUIRE(run("fit --data " + s.p("data.csv") + " --config " + s.p("cfg.json") +
                " --out " + s.p("r1.json") + " --path-out " + s.p("p1.csv")) == 0);
    CHECK(read_json(s.p("r1.json")).at("status") == "PossiblyUnsolvable");

    REQUIRE(run("fit --data " + s.p("data.csv") + " --config " + s.p("cfg.json") +
                " --lambda2 10 --out " + s.p("r2.json") + " --path-out " + s.p("p2.csv")) ==
            0);
    const json r2 = read_json(s.p("r2.json"));
    CHECK(r2.at("status") == "Converged");
    CHECK(r2.at("lambda2") == 10.0);

    write_file(s.p("bad.json"), "{\"lambda9\": 1}\n");
    CHECK(run("fit --data " + s.p("data.csv") + " --config " + s.p("bad.json") + " --out " +
              s.p("r3.json") + " --path-out " + s.p("p3.csv")) == 1);
    CHECK_FALSE(fs::exists(s.p("r3.json")));
}

TEST_CASE("simulate then evaluate closes the loop on the truth", "[cli]") {
    Scratch s;
    REQUIRE(run("simulate --setting iii --p 3 --T 12 --m-star 1 --seed 9 --out " +
                s.p("data.csv") + " --truth-out " + s.p("truth.csv") + " --breaks-out " +
                s.p("truth.json")) == 0);
    const json t = read_json(s.p("truth.json"));
    CHECK(t.at("schema_version") == 1);
    CHECK(t.at("setting") == "iii");
    REQUIRE(t.at("true_breaks").size() == 1);

    const Sample data = read_data_csv_file(s.p("data.csv"));
    CHECK(data.T() == 12);
    CHECK(data.p() == 3);

    std::string breaks;
    for (const auto& d : t.at("true_breaks"))
        breaks += (breaks.empty() ? "" : ",") + std::to_string(d.get<int>());
    REQUIRE(run("evaluate --est " + s.p("truth.csv") + " --truth " + s.p("truth.csv") +
                " --true-breaks " + breaks + " --out " + s.p("m.json")) == 0);
    const json m = read_json(s.p("m.json"));
    CHECK(m.at("nb") == 1);
    CHECK(m.at("d_h") == 0.0);
    CHECK(m.at("f1") == 1.0);
    CHECK(m.at("mse") == 0.0);
    CHECK(m.at("breaks") == t.at("true_breaks"));
}

TEST_CASE("surface lists every cell and marks unsolvable cells inf", "[cli]") {
    Scratch s;
    write_file(s.p("data.csv"), kIdentityData);
    REQUIRE(run("surface --data " + s.p("data.csv") +
                " --grid-l1 0.1 --grid-l2 0.2,10 --out " + s.p("surf.csv")) == 0);
    const auto lines = lines_of(read_file(s.p("surf.csv")));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "lambda1,lambda2,status,bic");
    CHECK(lines[1].find("PossiblyUnsolvable,inf") != std::string::npos);

    // the finite cell matches a direct recomputation through the library
    Mat rows(2, 2);
    rows << 1, 0, 0, 1;
    const Sample sample = Sample::from_rows(rows);
    PenaltyConfig cfg;
    cfg.lambda1 = 0.1;
    cfg.lambda2 = 10.0;
    const double want = bic(fit(sample, cfg).path, sample);
    const std::string& row = lines[2];
    const double got = std::stod(row.substr(row.rfind(',') + 1));
    CHECK(got == Catch::Approx(want).margin(1e-12));
}

TEST_CASE("surface in simulation mode adds the held-out loss column", "[cli]") {
    Scratch s;
    const std::string args =
        "surface --setting iii --p 3 --T 12 --m-star 0 --seed 11 --batches 2 "
        "--grid-l1 0.2 --grid-l2 5,20 --out ";
    REQUIRE(run(args + s.p("surf.csv")) == 0);
    const auto lines = lines_of(read_file(s.p("surf.csv")));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "lambda1,lambda2,status,bic,lossval");
    const std::string& row = lines[1];
    CHECK(std::isfinite(std::stod(row.substr(row.rfind(',') + 1))));

    // GFDTL_THREADS routes through the same deterministic pool
    const std::string env_cmd = "GFDTL_THREADS=2 " + kBin + " " + args + s.p("surf2.csv") +
                                " >/dev/null 2>&1";
    REQUIRE(std::system(env_cmd.c_str()) == 0);
    CHECK(read_file(s.p("surf2.csv")) == read_file(s.p("surf.csv")));
}

TEST_CASE("replicate writes a summary row and per-replication rows", "[cli]") {
    Scratch s;
    REQUIRE(run("replicate --setting iii --p 3 --T 12 --m-star 0 --seed 5 --reps 2 "
                "--method c --grid-l1 0.2 --grid-l2 5,20 --out " +
                s.p("table.csv") + " --rows-out " + s.p("rows.csv")) == 0);
    const auto table = lines_of(read_file(s.p("table.csv")));
    REQUIRE(table.size() == 2);
    CHECK(table[0] ==
          "setting,p,T,m_star,sparsity,method,reps,completed,nb,d_h,f1,acc,mse");
    CHECK(table[1].substr(0, 13) == "iii,3,12,0,0.");
    CHECK(table[1].find(",c,2,2,") != std::string::npos);
    const auto rows = lines_of(read_file(s.p("rows.csv")));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].substr(0, 4) == "1,5,");
    CHECK(rows[2].substr(0, 4) == "2,6,");
}

TEST_CASE("gmvp reports the backtest against the equal-weight comparator", "[cli]") {
    Scratch s;
    REQUIRE(run("simulate --setting iii --p 3 --T 12 --m-star 0 --seed 7 --out " +
                s.p("ret.csv") + " --truth-out " + s.p("path.csv")) == 0);
    REQUIRE(run("gmvp --path " + s.p("path.csv") + " --returns " + s.p("ret.csv") +
                " --out " + s.p("bt.json") + " --weights-out " + s.p("w.csv")) == 0);
    const json bt = read_json(s.p("bt.json"));
    CHECK(std::isfinite(bt.at("portfolio").at("ir").get<double>()));
    CHECK(bt.at("portfolio").at("nb") == 0);
    CHECK(std::isfinite(bt.at("equal_weight").at("sd").get<double>()));
    const auto w = lines_of(read_file(s.p("w.csv")));
    REQUIRE(w.size() == 13);
    CHECK(w[0] == "t,w1,w2,w3");

    // a path whose row sums vanish cannot price a portfolio
    std::string bad = "t,u,v,value\n";
    for (int t = 1; t <= 3; ++t)
        for (int u = 1; u <= 2; ++u)
            for (int v = 1; v <= 2; ++v)
                bad += std::to_string(t) + "," + std::to_string(u) + "," +
                       std::to_string(v) + "," + (u == v ? "1" : "-1") + "\n";
    write_file(s.p("bad.csv"), bad);
    write_file(s.p("r2.csv"), "1,0\n0,1\n0.5,0.5\n");
    CHECK(run("gmvp --path " + s.p("bad.csv") + " --returns " + s.p("r2.csv") + " --out " +
              s.p("bt2.json")) == 2);
}

TEST_CASE("numerically singular data exits with the numerical code", "[cli]") {
    Scratch s;
    write_file(s.p("flat.csv"), "1,0\n2,0\n3,0\n");
    CHECK(run("fit --data " + s.p("flat.csv") + " --out " + s.p("r.json") + " --path-out " +
              s.p("p.csv")) == 2);
    CHECK_FALSE(fs::exists(s.p("r.json")));
}

TEST_CASE("usage errors come back as exit one", "[cli]") {
    Scratch s;
    CHECK(run("fit") == 1);                       // missing required options
    CHECK(run("nonsense") == 1);                  // unknown subcommand
    CHECK(run("") == 1);                          // no subcommand
    write_file(s.p("data.csv"), kIdentityData);
    CHECK(run("fit --data " + s.p("data.csv") + " --lambda3 0.2 --out " + s.p("r.json") +
              " --path-out " + s.p("p.csv")) == 1);  // invalid penalty setting
}

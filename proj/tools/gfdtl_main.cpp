// gfdtl: time-varying sparse precision estimation with break detection.
//
// Subcommands:
//   fit        one (lambda1, lambda2) fit of a data CSV
//   surface    information-criterion surfaces over a (lambda1, lambda2) grid
//   simulate   synthetic scenario draws with known ground truth
//   evaluate   score an estimated path against a truth path
//   replicate  repeated draw -> grid fit -> select -> score runs
//   gmvp       minimum-variance portfolio backtest along a fitted path
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfdtl/gmvp.hpp"
#include "gfdtl/io.hpp"
#include "gfdtl/simgen.hpp"
#include "gfdtl/solver.hpp"
#include "gfdtl/tuning.hpp"

using json = nlohmann::json;
using namespace gfdtl;

namespace {

struct CliError {
    int code;
    std::string msg;
};

[[noreturn]] void usage_error(const std::string& msg) { throw CliError{1, msg}; }
[[noreturn]] void numeric_error(const std::string& msg) { throw CliError{2, msg}; }

// Wrap a computation so library exceptions map to the numerical exit code.
template <typename F>
auto compute(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const CliError&) {
        throw;
    } catch (const std::exception& e) {
        numeric_error(e.what());
    }
}

// Wrap input loading/validation so failures map to the usage exit code.
template <typename F>
auto load(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const CliError&) {
        throw;
    } catch (const std::exception& e) {
        usage_error(e.what());
    }
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return detail::format_g17(v);
}

int effective_jobs(int jobs) {
    const char* env = std::getenv("GFDTL_THREADS");
    if (env == nullptr || *env == '\0') return jobs;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) usage_error("GFDTL_THREADS must be a positive integer");
    return static_cast<int>(v);
}

ScenarioKind parse_setting(const std::string& s) {
    if (s == "i" || s == "1") return ScenarioKind::RandomGraph;
    if (s == "ii" || s == "2") return ScenarioKind::FixedZeros;
    if (s == "iii" || s == "3") return ScenarioKind::Banded;
    usage_error("--setting must be one of i, ii, iii");
}

const char* setting_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::RandomGraph: return "i";
        case ScenarioKind::FixedZeros: return "ii";
        default: return "iii";
    }
}

void write_text_file(const std::string& file, const std::string& text) {
    std::ofstream out(file);
    if (!out) usage_error("cannot open output file: " + file);
    out << text;
    if (!out) numeric_error("failed writing " + file);
}

// Penalty settings assembled from an optional JSON config file plus explicit
// command-line flags; a flag given on the command line wins over the file.
struct PenaltyFlags {
    PenaltyConfig cfg;
    CLI::Option* lambda1 = nullptr;
    CLI::Option* lambda2 = nullptr;
    CLI::Option* lambda3 = nullptr;
    CLI::Option* eps = nullptr;
    CLI::Option* beta = nullptr;
    CLI::Option* tol = nullptr;
    std::string config_file;

    void attach(CLI::App* cmd, bool with_config) {
        lambda1 = cmd->add_option("--lambda1", cfg.lambda1, "off-diagonal l1 weight");
        lambda2 = cmd->add_option("--lambda2", cfg.lambda2, "group-fusion weight");
        lambda3 = cmd->add_option("--lambda3", cfg.lambda3, "regularizer switch radius");
        eps = cmd->add_option("--eps", cfg.eps, "eigenvalue floor on the estimates");
        beta = cmd->add_option("--beta", cfg.beta, "augmented-Lagrangian penalty");
        tol = cmd->add_option("--tol", cfg.eps_tol, "stopping tolerance on gap and dfeas");
        if (with_config)
            cmd->add_option("--config", config_file, "JSON file with penalty settings");
    }

    PenaltyConfig resolve() const {
        PenaltyConfig out;  // defaults
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) usage_error("cannot open config file: " + config_file);
            json j;
            try {
                j = json::parse(in);
            } catch (const json::exception& e) {
                usage_error("config: " + std::string(e.what()));
            }
            if (!j.is_object()) usage_error("config: top level must be an object");
            for (const auto& [key, val] : j.items()) {
                if (!val.is_number()) usage_error("config: " + key + " must be a number");
                const double v = val.get<double>();
                if (key == "lambda1") out.lambda1 = v;
                else if (key == "lambda2") out.lambda2 = v;
                else if (key == "lambda3") out.lambda3 = v;
                else if (key == "eps") out.eps = v;
                else if (key == "beta") out.beta = v;
                else if (key == "eps_tol") out.eps_tol = v;
                else if (key == "eps_pcg") out.eps_pcg = v;
                else if (key == "tau") out.tau = v;
                else if (key == "max_iters") out.max_iters = static_cast<int>(v);
                else usage_error("config: unknown key \"" + key + "\"");
            }
        }
        if (lambda1->count() > 0) out.lambda1 = cfg.lambda1;
        if (lambda2->count() > 0) out.lambda2 = cfg.lambda2;
        if (lambda3->count() > 0) out.lambda3 = cfg.lambda3;
        if (eps->count() > 0) out.eps = cfg.eps;
        if (beta->count() > 0) out.beta = cfg.beta;
        if (tol->count() > 0) out.eps_tol = cfg.eps_tol;
        try {
            out.validate();
        } catch (const std::exception& e) {
            usage_error(e.what());
        }
        return out;
    }
};

struct ScenarioFlags {
    std::string setting;
    ScenarioConfig sc;

    void attach(CLI::App* cmd) {
        cmd->add_option("--setting", setting, "scenario family: i, ii or iii")->required();
        cmd->add_option("--p", sc.p, "dimension")->required();
        cmd->add_option("--T", sc.T, "number of dates")->required();
        cmd->add_option("--m-star", sc.m_star, "number of true breaks")->required();
        cmd->add_option("--sparsity", sc.sparsity, "zero proportion (settings i and ii)");
        cmd->add_option("--seed", sc.seed, "generator seed");
    }

    ScenarioConfig resolve() const {
        ScenarioConfig out = sc;
        out.kind = parse_setting(setting);
        try {
            out.validate();
        } catch (const std::exception& e) {
            usage_error(e.what());
        }
        return out;
    }
};

Grid resolve_grid(const std::vector<double>& l1, const std::vector<double>& l2) {
    Grid g = Grid::defaults();
    if (!l1.empty()) g.lambda1_values = l1;
    if (!l2.empty()) g.lambda2_values = l2;
    try {
        g.validate();
    } catch (const std::exception& e) {
        usage_error(e.what());
    }
    return g;
}

json report_json(const SolveReport& rep, const PenaltyConfig& cfg, int T, int p) {
    json j;
    j["schema_version"] = 1;
    j["lambda1"] = cfg.lambda1;
    j["lambda2"] = cfg.lambda2;
    j["lambda3"] = cfg.lambda3;
    j["eps"] = cfg.eps;
    j["beta"] = cfg.beta;
    j["eps_tol"] = cfg.eps_tol;
    j["T"] = T;
    j["p"] = p;
    j["status"] = to_string(rep.status);
    j["iterations"] = rep.iterations;
    if (!rep.history.empty()) {
        const HistoryRow& h = rep.history.back();
        j["primal"] = h.primal_obj;
        j["dual"] = h.dual_obj;
        j["gap"] = h.gap;
        j["dfeas"] = h.dfeas;
    }
    j["breaks"] = rep.breaks.dates;
    j["pcg_warnings"] = rep.pcg_warnings;
    return j;
}

// ---- fit ----------------------------------------------------------------

struct FitArgs {
    std::string data, out, path_out;
    PenaltyFlags pen;
};

void run_fit(const FitArgs& a) {
    const Sample sample = load([&] { return read_data_csv_file(a.data); });
    const PenaltyConfig cfg = a.pen.resolve();
    const SolveReport rep = compute([&] { return fit(sample, cfg); });
    write_text_file(a.out, report_json(rep, cfg, sample.T(), sample.p()).dump(2) + "\n");
    std::ofstream pout(a.path_out);
    if (!pout) usage_error("cannot open output file: " + a.path_out);
    write_path_csv(pout, rep.path);
    std::cout << "fit: " << to_string(rep.status) << " after " << rep.iterations
              << " iterations, " << rep.breaks.count() << " break(s)\n";
}

// ---- surface ------------------------------------------------------------

struct SurfaceArgs {
    std::string data, out;
    ScenarioFlags scen;
    PenaltyFlags pen;
    std::vector<double> grid_l1, grid_l2;
    int batches = 10;
    int jobs = 1;
};

void run_surface(const SurfaceArgs& a, bool simulated) {
    const Grid grid = resolve_grid(a.grid_l1, a.grid_l2);
    const PenaltyConfig base = a.pen.resolve();
    Sample sample = Sample::from_rows(Mat::Identity(2, 2));
    std::vector<Sample> tests;
    if (simulated) {
        const ScenarioConfig sc = a.scen.resolve();
        sample = compute([&] { return gen_scenario(sc).second; });
        for (int b = 0; b < a.batches; ++b) {
            ScenarioConfig tc = sc;
            tc.seed = sc.seed + 100000 + b;
            tests.push_back(compute([&] { return gen_scenario(tc).second; }));
        }
    } else {
        sample = load([&] { return read_data_csv_file(a.data); });
    }

    const std::vector<GridFit> fits =
        compute([&] { return fit_grid(sample, grid, base, effective_jobs(a.jobs)); });

    std::ostringstream os;
    os << "lambda1,lambda2,status,bic" << (simulated ? ",lossval" : "") << "\n";
    const double inf = std::numeric_limits<double>::infinity();
    for (const GridFit& f : fits) {
        const bool bad = f.status == SolveStatus::PossiblyUnsolvable;
        const double b = bad ? inf : compute([&] { return bic(f.path, sample); });
        os << fmt(f.lambda1) << ',' << fmt(f.lambda2) << ',' << to_string(f.status) << ','
           << fmt(b);
        if (simulated) {
            const double lv = bad ? inf : compute([&] { return lossval(f.path, tests); });
            os << ',' << fmt(lv);
        }
        os << "\n";
    }
    write_text_file(a.out, os.str());
    std::cout << "surface: " << fits.size() << " cells -> " << a.out << "\n";
}

// ---- simulate -----------------------------------------------------------

struct SimulateArgs {
    ScenarioFlags scen;
    std::string out, truth_out, breaks_out;
};

void run_simulate(const SimulateArgs& a) {
    const ScenarioConfig sc = a.scen.resolve();
    const auto [truth, sample] = compute([&] { return gen_scenario(sc); });
    write_data_csv_file(a.out, sample);
    if (!a.truth_out.empty()) write_path_csv_file(a.truth_out, truth.true_path);
    if (!a.breaks_out.empty()) {
        json j;
        j["schema_version"] = 1;
        j["setting"] = setting_name(sc.kind);
        j["p"] = sc.p;
        j["T"] = sc.T;
        j["m_star"] = sc.m_star;
        j["sparsity"] = sc.sparsity;
        j["seed"] = sc.seed;
        j["true_breaks"] = truth.true_breaks.dates;
        write_text_file(a.breaks_out, j.dump(2) + "\n");
    }
    std::cout << "simulate: T=" << sc.T << " p=" << sc.p << " breaks="
              << truth.true_breaks.count() << " -> " << a.out << "\n";
}

// ---- evaluate -----------------------------------------------------------

struct EvaluateArgs {
    std::string est, truth, out;
    std::vector<int> true_breaks;
    double break_threshold = 1e-6;
    double zero_tol = 1e-6;
};

void run_evaluate(const EvaluateArgs& a) {
    const PrecisionPath est = load([&] { return read_path_csv_file(a.est); });
    const PrecisionPath truth = load([&] { return read_path_csv_file(a.truth); });
    BreakSet tb;
    tb.dates = a.true_breaks;
    for (std::size_t i = 0; i + 1 < tb.dates.size(); ++i)
        if (tb.dates[i] >= tb.dates[i + 1])
            usage_error("--true-breaks must be strictly increasing");
    const MetricReport m = compute(
        [&] { return evaluate_path(est, truth, tb, a.break_threshold, a.zero_tol); });
    const BreakSet eb = compute([&] { return extract_breaks(est, a.break_threshold); });
    json j;
    j["schema_version"] = 1;
    j["nb"] = m.nb;
    j["d_h"] = m.d_h;
    j["f1"] = m.f1;
    j["acc"] = m.acc;
    j["mse"] = m.mse;
    j["breaks"] = eb.dates;
    write_text_file(a.out, j.dump(2) + "\n");
    std::cout << "evaluate: nb=" << m.nb << " d_h=" << m.d_h << " f1=" << m.f1 << "\n";
}

// ---- replicate ----------------------------------------------------------

struct ReplicateArgs {
    ScenarioFlags scen;
    PenaltyFlags pen;
    std::string method = "a";
    int reps = 1;
    int batches = 10;
    int jobs = 1;
    std::vector<double> grid_l1, grid_l2;
    std::string out, rows_out;
};

void run_replicate(const ReplicateArgs& a) {
    if (a.method != "a" && a.method != "b" && a.method != "c")
        usage_error("--method must be a, b or c");
    if (a.reps < 1) usage_error("--reps must be >= 1");
    const Grid grid = resolve_grid(a.grid_l1, a.grid_l2);
    const PenaltyConfig base = a.pen.resolve();
    const ScenarioConfig sc0 = a.scen.resolve();
    const int jobs = effective_jobs(a.jobs);

    std::ostringstream rows;
    rows << "rep,seed,lambda1,lambda2,status,iterations,nb,d_h,f1,acc,mse,note\n";
    double snb = 0, sdh = 0, sf1 = 0, sacc = 0, smse = 0;
    int completed = 0;
    for (int r = 0; r < a.reps; ++r) {
        ScenarioConfig sc = sc0;
        sc.seed = sc0.seed + r;
        rows << r + 1 << ',' << sc.seed << ',';
        try {
            const auto [truth, sample] = gen_scenario(sc);
            SelectionResult res = [&] {
                if (a.method == "a") return select_oracle(sample, grid, base, truth, jobs);
                if (a.method == "c") return select_bic(sample, grid, base, jobs);
                std::vector<Sample> tests;
                for (int b = 0; b < a.batches; ++b) {
                    ScenarioConfig tc = sc;
                    tc.seed = sc.seed + 100000 + r * a.batches + b;
                    tests.push_back(gen_scenario(tc).second);
                }
                return select_validation(sample, grid, base, tests, jobs);
            }();
            const GridFit& win = res.fits[res.best_index];
            const MetricReport m =
                evaluate_path(win.path, truth.true_path, truth.true_breaks);
            snb += m.nb;
            sdh += m.d_h;
            sf1 += m.f1;
            sacc += m.acc;
            smse += m.mse;
            ++completed;
            rows << fmt(win.lambda1) << ',' << fmt(win.lambda2) << ','
                 << to_string(win.status) << ',' << win.iterations << ',' << m.nb << ','
                 << fmt(m.d_h) << ',' << fmt(m.f1) << ',' << fmt(m.acc) << ',' << fmt(m.mse)
                 << ",\n";
        } catch (const std::exception& e) {
            std::string note = e.what();
            for (char& c : note)
                if (c == ',' || c == '\n') c = ';';
            rows << ",,,,,,,,," << note << "\n";
        }
    }
    if (completed == 0) numeric_error("replicate: every replication failed");
    if (!a.rows_out.empty()) write_text_file(a.rows_out, rows.str());

    std::ostringstream table;
    table << "setting,p,T,m_star,sparsity,method,reps,completed,nb,d_h,f1,acc,mse\n";
    const double n = completed;
    table << setting_name(sc0.kind) << ',' << sc0.p << ',' << sc0.T << ',' << sc0.m_star
          << ',' << fmt(sc0.sparsity) << ',' << a.method << ',' << a.reps << ',' << completed
          << ',' << fmt(snb / n) << ',' << fmt(sdh / n) << ',' << fmt(sf1 / n) << ','
          << fmt(sacc / n) << ',' << fmt(smse / n) << "\n";
    write_text_file(a.out, table.str());
    std::cout << "replicate: " << completed << "/" << a.reps << " replications -> " << a.out
              << "\n";
}

// ---- gmvp ---------------------------------------------------------------

struct GmvpArgs {
    std::string path, returns, out, weights_out;
    double break_threshold = 1e-6;
};

void run_gmvp(const GmvpArgs& a) {
    const PrecisionPath path = load([&] { return read_path_csv_file(a.path); });
    const Sample rets = load([&] { return read_data_csv_file(a.returns); });
    const PortfolioReport port =
        compute([&] { return backtest(rets, path, a.break_threshold); });
    const PortfolioReport naive = compute([&] { return equal_weight_backtest(rets); });
    json j;
    j["schema_version"] = 1;
    j["portfolio"] = {{"avg", port.avg},
                      {"sd", port.sd},
                      {"ir", port.ir},
                      {"nb", port.nb},
                      {"zero_volatility", port.zero_volatility}};
    j["equal_weight"] = {{"avg", naive.avg},
                         {"sd", naive.sd},
                         {"ir", naive.ir},
                         {"zero_volatility", naive.zero_volatility}};
    write_text_file(a.out, j.dump(2) + "\n");
    if (!a.weights_out.empty()) {
        std::ostringstream os;
        os << "t";
        for (int i = 1; i <= rets.p(); ++i) os << ",w" << i;
        os << "\n";
        for (std::size_t t = 0; t < path.size(); ++t) {
            const Vec w = compute([&] { return gmvp_weights(path[t]); });
            os << t + 1;
            for (int i = 0; i < w.size(); ++i) os << ',' << fmt(w[i]);
            os << "\n";
        }
        write_text_file(a.weights_out, os.str());
    }
    std::cout << "gmvp: ir=" << port.ir << " vs equal-weight ir=" << naive.ir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-varying sparse precision estimation with break detection"};
    app.require_subcommand(1);

    FitArgs fa;
    CLI::App* cfit = app.add_subcommand("fit", "fit one (lambda1, lambda2) pair");
    cfit->add_option("--data", fa.data, "observations CSV, T rows by p columns")->required();
    fa.pen.attach(cfit, true);
    cfit->add_option("--out", fa.out, "report JSON output")->required();
    cfit->add_option("--path-out", fa.path_out, "fitted path CSV output")->required();

    SurfaceArgs sa;
    CLI::App* csurf = app.add_subcommand(
        "surface", "criterion surfaces over the grid (BIC always; held-out loss "
                   "when simulating)");
    CLI::Option* surf_data = csurf->add_option("--data", sa.data, "observations CSV");
    sa.scen.setting = "";
    CLI::Option* surf_setting =
        csurf->add_option("--setting", sa.scen.setting, "scenario family: i, ii or iii");
    csurf->add_option("--p", sa.scen.sc.p, "dimension");
    csurf->add_option("--T", sa.scen.sc.T, "number of dates");
    csurf->add_option("--m-star", sa.scen.sc.m_star, "number of true breaks");
    csurf->add_option("--sparsity", sa.scen.sc.sparsity, "zero proportion");
    csurf->add_option("--seed", sa.scen.sc.seed, "generator seed");
    csurf->add_option("--batches", sa.batches, "held-out batches for the loss surface");
    sa.pen.attach(csurf, false);
    csurf->add_option("--grid-l1", sa.grid_l1, "lambda1 grid values")->delimiter(',');
    csurf->add_option("--grid-l2", sa.grid_l2, "lambda2 grid values")->delimiter(',');
    csurf->add_option("--jobs", sa.jobs, "parallel fits (GFDTL_THREADS overrides)");
    csurf->add_option("--out", sa.out, "surface CSV output")->required();
    surf_data->excludes(surf_setting);

    SimulateArgs ma;
    CLI::App* csim = app.add_subcommand("simulate", "draw a synthetic scenario");
    ma.scen.attach(csim);
    csim->add_option("--out", ma.out, "observations CSV output")->required();
    csim->add_option("--truth-out", ma.truth_out, "true path CSV output");
    csim->add_option("--breaks-out", ma.breaks_out, "truth summary JSON output");

    EvaluateArgs ea;
    CLI::App* ceval = app.add_subcommand("evaluate", "score an estimate against the truth");
    ceval->add_option("--est", ea.est, "estimated path CSV")->required();
    ceval->add_option("--truth", ea.truth, "true path CSV")->required();
    ceval->add_option("--true-breaks", ea.true_breaks, "true break dates")->delimiter(',');
    ceval->add_option("--break-threshold", ea.break_threshold, "step size counted as a break");
    ceval->add_option("--zero-tol", ea.zero_tol, "magnitude counted as a nonzero entry");
    ceval->add_option("--out", ea.out, "metrics JSON output")->required();

    ReplicateArgs ra;
    CLI::App* crep = app.add_subcommand("replicate", "repeated draw/fit/select/score runs");
    ra.scen.attach(crep);
    crep->add_option("--reps", ra.reps, "number of replications")->required();
    crep->add_option("--method", ra.method, "selection rule: a (oracle), b (held-out), c (BIC)");
    crep->add_option("--batches", ra.batches, "held-out batches for method b");
    ra.pen.attach(crep, false);
    crep->add_option("--grid-l1", ra.grid_l1, "lambda1 grid values")->delimiter(',');
    crep->add_option("--grid-l2", ra.grid_l2, "lambda2 grid values")->delimiter(',');
    crep->add_option("--jobs", ra.jobs, "parallel fits (GFDTL_THREADS overrides)");
    crep->add_option("--out", ra.out, "summary table CSV output")->required();
    crep->add_option("--rows-out", ra.rows_out, "per-replication rows CSV output");

    GmvpArgs ga;
    CLI::App* cgmvp = app.add_subcommand("gmvp", "portfolio backtest along a fitted path");
    cgmvp->add_option("--path", ga.path, "fitted path CSV")->required();
    cgmvp->add_option("--returns", ga.returns, "returns CSV, T rows by p columns")->required();
    cgmvp->add_option("--break-threshold", ga.break_threshold, "step size counted as a break");
    cgmvp->add_option("--out", ga.out, "backtest JSON output")->required();
    cgmvp->add_option("--weights-out", ga.weights_out, "per-date weights CSV output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (cfit->parsed()) {
            run_fit(fa);
        } else if (csurf->parsed()) {
            const bool simulated = surf_setting->count() > 0;
            if (!simulated && surf_data->count() == 0)
                usage_error("surface: need either --data or --setting");
            run_surface(sa, simulated);
        } else if (csim->parsed()) {
            run_simulate(ma);
        } else if (ceval->parsed()) {
            run_evaluate(ea);
        } else if (crep->parsed()) {
            run_replicate(ra);
        } else if (cgmvp->parsed()) {
            run_gmvp(ga);
        }
    } catch (const CliError& e) {
        std::cerr << "gfdtl: " << e.msg << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "gfdtl: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

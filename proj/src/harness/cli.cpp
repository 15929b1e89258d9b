#include <qbp/harness/cli.hpp>

#include <qbp/harness/json_io.hpp>
#include <qbp/harness/montecarlo.hpp>
#include <qbp/harness/phantom.hpp>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

namespace qbp::harness {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Synthetic stand-in for the sub-wavelength hole experiment.
constexpr double kSubwavelengthEpsilon = 0.0012;
constexpr double kSubwavelengthLambda = 100;
constexpr int kSubwavelengthPositions = 32;
constexpr int kSubwavelengthHoles = 4;
constexpr int kSubwavelengthSamples = 96;

std::string readAll(const std::string& path, std::istream& in)
{
    if (path.empty() || path == "-") return {std::istreambuf_iterator<char>(in), {}};
    std::ifstream f(path);
    if (!f) throw UsageError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(f), {}};
}

template <typename Fn>
void withOutput(const std::string& path, std::ostream& out, Fn&& fn)
{
    if (path.empty() || path == "-") {
        fn(out);
        return;
    }
    std::ofstream f(path);
    if (!f) throw UsageError("cannot write '" + path + "'");
    fn(f);
}

struct GenerateArgs {
    std::string ensemble = "general";
    std::string signal = "binary";
    std::string preset;
    int n = 20;
    int N = 25;
    int k = 3;
    std::uint64_t seed = 1;
    bool no_truth = false;
    std::string output;
};

struct SolveArgs {
    std::string input;
    std::string output;
    std::optional<double> lambda;
    std::string mode = "qbp";
    std::optional<double> epsilon;
    std::optional<int> max_iters;
    std::optional<std::uint64_t> seed;
    std::optional<double> eps_abs;
    std::optional<double> eps_rel;
    std::string preset;
    bool truth = false;
    bool real = false;
    int indent = 2;
};

struct MonteCarloArgs {
    std::string spec_file;
    ExperimentSpec spec;
    std::string ensemble;
    std::string signal;
    std::string methods;
    std::optional<double> eps_abs;
    std::optional<double> eps_rel;
    std::optional<int> max_iters;
    std::string csv;
    std::string summary;
};

struct DiagnoseArgs {
    std::string input;
    std::string output;
    double lambda = 50;
    int k = 2;
    int samples = 200;
    std::uint64_t seed = 1;
    double zero_tol = 1e-6;
    double rank_tol = 1e-3;
};

struct PhantomArgs {
    PhantomSpec spec;
    std::string mode = "qbpd";
    std::optional<int> max_iters;
    std::string output;
};

SolverMode parseMode(const std::string& m)
{
    if (m == "qbp") return SolverMode::QBP;
    if (m == "qbpd") return SolverMode::QBPD;
    throw UsageError("--mode must be qbp or qbpd");
}

int runGenerate(const GenerateArgs& a, std::ostream& out)
{
    Instance inst = [&] {
        if (a.preset == "subwavelength")
            return generateHolePattern(kSubwavelengthPositions, kSubwavelengthHoles, kSubwavelengthSamples, a.seed);
        if (!a.preset.empty()) throw UsageError("unknown preset '" + a.preset + "'");
        return generate(parseEnsemble(a.ensemble), a.n, a.N, a.k, parseSignal(a.signal), a.seed);
    }();
    const json doc = instanceToJson(inst.system, a.no_truth ? nullptr : &inst.x_true);
    withOutput(a.output, out, [&](std::ostream& os) { os << doc.dump() << '\n'; });
    return 0;
}

int runSolve(const SolveArgs& a, std::istream& in, std::ostream& out)
{
    const LoadedInstance inst = parseInstance(readAll(a.input, in));
    SolverConfig<double> cfg;
    cfg.mode = parseMode(a.mode);
    if (a.preset == "subwavelength") {
        cfg.mode = SolverMode::QBPD;
        cfg.lambda = kSubwavelengthLambda;
        cfg.epsilon_noise = kSubwavelengthEpsilon;
    } else if (!a.preset.empty()) {
        throw UsageError("unknown preset '" + a.preset + "'");
    }
    if (a.lambda) cfg.lambda = *a.lambda;
    if (a.epsilon) cfg.epsilon_noise = *a.epsilon;
    if (a.max_iters) cfg.max_iters = *a.max_iters;
    if (a.seed) cfg.init_seed = *a.seed;
    if (a.eps_abs) cfg.eps_abs = *a.eps_abs;
    if (a.eps_rel) cfg.eps_rel = *a.eps_rel;
    cfg.real_domain = a.real;
    if (cfg.mode == SolverMode::QBPD && !(cfg.epsilon_noise > 0)) throw UsageError("--mode qbpd needs --epsilon > 0");
    if (a.truth && !inst.x_true) throw UsageError("--truth given but the instance has no x_true");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const SolverResult<double> res = solve(inst.system, cfg);
    spdlog::info("solve: {} after {} iterations", toString(res.termination), res.iterations);
    json doc;
    if (res.termination == Termination::InfeasibleProjection) {
        // No iterate to extract from.
        RecoveryReport<double> empty;
        empty.rank_ratio = std::numeric_limits<double>::quiet_NaN();
        empty.feasibility_residual = std::numeric_limits<double>::quiet_NaN();
        doc = reportToJson(empty, res);
        doc["x_hat"] = nullptr;
    } else {
        doc = reportToJson(makeReport(inst.system, res.Z_final, a.truth ? &*inst.x_true : nullptr), res);
    }
    doc["lambda"] = cfg.lambda;
    doc["mode"] = a.mode == "qbpd" || cfg.mode == SolverMode::QBPD ? "qbpd" : "qbp";
    withOutput(a.output, out, [&](std::ostream& os) { os << doc.dump(a.indent) << '\n'; });
    if (res.termination == Termination::InfeasibleProjection)
        throw SolverFailure("constraints are inconsistent (residual " + std::to_string(res.setup_residual) + ")");
    if (res.termination == Termination::ConstraintUnattained)
        throw SolverFailure("noise budget not met (residual " + std::to_string(res.data_residual) + ")");
    return 0;
}

int runMonteCarloCmd(MonteCarloArgs& a, std::ostream& out, std::ostream& err)
{
    ExperimentSpec spec = a.spec;
    if (!a.spec_file.empty()) {
        std::ifstream f(a.spec_file);
        if (!f) throw UsageError("cannot open '" + a.spec_file + "'");
        json doc;
        try {
            doc = json::parse(f);
        } catch (const json::parse_error& e) {
            throw InputError(a.spec_file + " byte " + std::to_string(e.byte), "malformed JSON");
        }
        spec = specFromJson(doc);
        spec.jobs = a.spec.jobs;
    }
    if (!a.ensemble.empty()) spec.ensemble = parseEnsemble(a.ensemble);
    if (!a.signal.empty()) spec.signal = parseSignal(a.signal);
    if (!a.methods.empty()) spec.methods = parseMethods(a.methods);
    if (a.eps_abs) spec.overrides.eps_abs = a.eps_abs;
    if (a.eps_rel) spec.overrides.eps_rel = a.eps_rel;
    if (a.max_iters) spec.overrides.max_iters = a.max_iters;
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    spdlog::info("montecarlo: {}", specToJson(spec).dump());
    const MonteCarloResult res = runMonteCarlo(spec, [](int done, int total) {
        spdlog::info("trial {}/{}", done, total);
    });
    withOutput(a.csv, out, [&](std::ostream& os) { writeCsv(os, res.records); });
    if (a.summary.empty()) {
        writeSummary(a.csv.empty() || a.csv == "-" ? err : out, res.summary);
    } else {
        withOutput(a.summary, out, [&](std::ostream& os) { writeSummary(os, res.summary); });
    }
    return 0;
}

int runDiagnose(const DiagnoseArgs& a, std::istream& in, std::ostream& out)
{
    const LoadedInstance inst = parseInstance(readAll(a.input, in));
    SolverConfig<double> cfg;
    cfg.lambda = a.lambda;
    cfg.eps_abs = 1e-6;
    cfg.eps_rel = 1e-6;
    const SolverResult<double> res = solve(inst.system, cfg);
    json doc;
    doc["solver"] = {{"termination", toString(res.termination)}, {"iterations", res.iterations}};
    if (res.termination == Termination::InfeasibleProjection) {
        doc["coherence"] = nullptr;
    } else {
        doc["coherence"] = certificateToJson(certifyCoherence(inst.system, res.Z_final, a.zero_tol, a.rank_tol));
    }
    const Index kmax = inst.system.liftedSize() * inst.system.liftedSize();
    if (a.k < 1 || a.k > kmax) throw UsageError("--k out of range");
    doc["rip"] = ripToJson(sampleRIP(inst.system, Index(a.k), Index(a.samples), a.seed));
    withOutput(a.output, out, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
    return 0;
}

int runPhantomCmd(PhantomArgs& a, std::ostream& out, std::ostream& err)
{
    PhantomSpec spec = a.spec;
    spec.mode = parseMode(a.mode);
    if (a.max_iters) spec.solver.max_iters = *a.max_iters;
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const PhantomResult res = runPhantom(spec);
    withOutput(a.output, out, [&](std::ostream& os) { writePixelCsv(os, res); });
    const json summary = {{"side", spec.side},
                          {"k", spec.k},
                          {"N", spec.measurements()},
                          {"termination", toString(res.solver.termination)},
                          {"iterations", res.solver.iterations},
                          {"rank_ratio", res.report.rank_ratio},
                          {"image_error", res.image_error}};
    (a.output.empty() || a.output == "-" ? err : out) << summary.dump() << '\n';
    return res.solver.termination == Termination::InfeasibleProjection ? 2 : 0;
}

}  // namespace

void configureLogging()
{
    auto logger = spdlog::stderr_color_mt("qbp");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("QBP_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off; keep the default in that case.
        if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
    }
}

int cliMain(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Sparse recovery from quadratic measurements"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Emit a random instance as JSON");
    g->add_option("--ensemble", gen.ensemble, "general | phase | fourier | holes");
    g->add_option("--signal", gen.signal, "binary | gaussian");
    g->add_option("--preset", gen.preset, "subwavelength: hole-pattern instance");
    g->add_option("--n", gen.n)->check(CLI::PositiveNumber);
    g->add_option("--N", gen.N)->check(CLI::PositiveNumber);
    g->add_option("--k", gen.k)->check(CLI::NonNegativeNumber);
    g->add_option("--seed", gen.seed);
    g->add_flag("--no-truth", gen.no_truth, "Omit x_true");
    g->add_option("-o,--output", gen.output);

    SolveArgs sol;
    auto* s = app.add_subcommand("solve", "Solve an instance, print a recovery report");
    s->add_option("-i,--input", sol.input, "Instance JSON (default stdin)");
    s->add_option("-o,--output", sol.output);
    s->add_option("--lambda", sol.lambda)->check(CLI::NonNegativeNumber);
    s->add_option("--mode", sol.mode)->check(CLI::IsMember({"qbp", "qbpd"}));
    s->add_option("--epsilon", sol.epsilon, "Noise budget for qbpd");
    s->add_option("--max-iters", sol.max_iters)->check(CLI::PositiveNumber);
    s->add_option("--seed", sol.seed, "Random PSD start instead of the identity");
    s->add_option("--eps-abs", sol.eps_abs);
    s->add_option("--eps-rel", sol.eps_rel);
    s->add_option("--preset", sol.preset, "subwavelength: qbpd, epsilon 0.0012, lambda 100");
    s->add_flag("--truth", sol.truth, "Score against the instance's x_true");
    s->add_flag("--real", sol.real, "Restrict the unknown to real values");
    s->add_option("--indent", sol.indent);

    MonteCarloArgs mc;
    auto* m = app.add_subcommand("montecarlo", "Success-rate study; CSV out");
    m->add_option("--spec", mc.spec_file, "Experiment spec JSON");
    m->add_option("--n", mc.spec.n);
    m->add_option("--N", mc.spec.N);
    m->add_option("--k", mc.spec.k);
    m->add_option("--ensemble", mc.ensemble);
    m->add_option("--signal", mc.signal);
    m->add_option("--lambda", mc.spec.lambda);
    m->add_option("--trials", mc.spec.trials);
    m->add_option("--seed", mc.spec.seed);
    m->add_option("--methods", mc.methods, "e.g. qbp,qbp_lambda0,bp,iht,qbpd");
    m->add_option("--success-tol", mc.spec.success_tol);
    m->add_option("--epsilon", mc.spec.epsilon, "Noise budget for qbpd");
    m->add_option("--eps-abs", mc.eps_abs);
    m->add_option("--eps-rel", mc.eps_rel);
    m->add_option("--max-iters", mc.max_iters);
    m->add_option("-j,--jobs", mc.spec.jobs);
    m->add_option("--csv", mc.csv, "Trial CSV (default stdout)");
    m->add_option("--summary", mc.summary, "Summary table (default stderr when CSV goes to stdout)");

    DiagnoseArgs dg;
    auto* d = app.add_subcommand("diagnose", "Coherence certificate and RIP sample report");
    d->add_option("-i,--input", dg.input);
    d->add_option("-o,--output", dg.output);
    d->add_option("--lambda", dg.lambda);
    d->add_option("--k", dg.k, "Sparsity of the RIP probes");
    d->add_option("--samples", dg.samples)->check(CLI::PositiveNumber);
    d->add_option("--seed", dg.seed);
    d->add_option("--zero-tol", dg.zero_tol);
    d->add_option("--rank-tol", dg.rank_tol);

    PhantomArgs ph;
    auto* p = app.add_subcommand("phantom", "Reduced ellipse-phantom recovery; per-pixel CSV out");
    p->add_option("--side", ph.spec.side)->check(CLI::PositiveNumber);
    p->add_option("--k", ph.spec.k)->check(CLI::PositiveNumber);
    p->add_option("--N", ph.spec.N);
    p->add_option("--lambda", ph.spec.lambda);
    p->add_option("--epsilon", ph.spec.epsilon);
    p->add_option("--mode", ph.mode)->check(CLI::IsMember({"qbp", "qbpd"}));
    p->add_option("--seed", ph.spec.seed);
    p->add_option("--max-iters", ph.max_iters);
    p->add_option("-o,--output", ph.output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*g) return runGenerate(gen, out);
        if (*s) return runSolve(sol, in, out);
        if (*m) return runMonteCarloCmd(mc, out, err);
        if (*d) return runDiagnose(dg, in, out);
        if (*p) return runPhantomCmd(ph, out, err);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const SolverFailure& e) {
        err << "solver error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "solver error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace qbp::harness

#include <qbp/harness/montecarlo.hpp>

#include <qbp/baselines.hpp>
#include <qbp/diagnostics.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace qbp::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Alignment alignmentFor(Ensemble e)
{
    return e == Ensemble::GeneralQuadratic ? Alignment::None : Alignment::GlobalPhase;
}

double seconds(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TrialRecord runLifted(const Instance& inst, const ExperimentSpec& spec, Method m)
{
    SolverConfig<double> cfg = spec.solverConfig();
    cfg.lambda = m == Method::QBP_lambda0 ? 0.0 : spec.lambda;
    if (m == Method::QBPD) {
        cfg.mode = SolverMode::QBPD;
        cfg.epsilon_noise = spec.epsilon;
    }
    TrialRecord rec;
    const auto t0 = std::chrono::steady_clock::now();
    const SolverResult<double> res = solve(inst.system, cfg);
    RecoveryOptions<double> opts;
    opts.metric_tol = spec.success_tol;
    const RecoveryReport<double> rep = makeReport(inst.system, res.Z_final, &inst.x_true, opts);
    rec.wall_time_s = seconds(t0);
    rec.success = rep.success;
    rec.error = rep.phase_aligned_error;
    rec.iterations = res.iterations;
    rec.rank_ratio = rep.rank_ratio;
    rec.status = toString(res.termination);
    rec.converged = res.termination == Termination::Converged;
    rec.max_violation = (applyB(inst.system, res.Z_final) - inst.system.observations()).cwiseAbs().maxCoeff();
    rec.min_eigenvalue = detail::minEigenvalue(res.Z_final);
    return rec;
}

TrialRecord runBaseline(const Instance& inst, const ExperimentSpec& spec, Method m)
{
    TrialRecord rec;
    const auto t0 = std::chrono::steady_clock::now();
    Vec x;
    if (m == Method::BP) {
        BPOptions<double> opts;
        // More observations than unknowns leave the first-order model
        // inconsistent; BP then runs on its least-squares solution set.
        opts.least_squares = true;
        const BPResult<double> r = basisPursuit(linearize(inst.system), opts);
        x = r.x;
        rec.iterations = r.iterations;
        rec.converged = r.converged;
    } else {
        IHTConfig<double> cfg;
        cfg.k = spec.k;
        const IHTResult<double> r = iterativeHardThresholding(inst.system, cfg);
        x = r.x;
        rec.iterations = r.iterations;
        rec.converged = true;
    }
    const SuccessVerdict<double> v = judgeSuccess(x, inst.x_true, spec.success_tol, alignmentFor(inst.ensemble));
    rec.wall_time_s = seconds(t0);
    rec.success = v.success;
    rec.error = v.error;
    rec.rank_ratio = kNaN;
    rec.status = "ok";
    return rec;
}

}  // namespace

Method parseMethod(const std::string& name)
{
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "qbp") return Method::QBP;
    if (s == "qbp_lambda0" || s == "qbp0") return Method::QBP_lambda0;
    if (s == "bp") return Method::BP;
    if (s == "iht") return Method::IHT;
    if (s == "qbpd") return Method::QBPD;
    throw std::invalid_argument("unknown method '" + name + "'");
}

std::string toString(Method m)
{
    switch (m) {
    case Method::QBP: return "QBP";
    case Method::QBP_lambda0: return "QBP_lambda0";
    case Method::BP: return "BP";
    case Method::IHT: return "IHT";
    case Method::QBPD: return "QBPD";
    }
    return "QBP";
}

std::vector<Method> parseMethods(const std::string& list)
{
    std::vector<Method> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const Method m = parseMethod(item);
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    }
    if (out.empty()) throw std::invalid_argument("no methods given");
    return out;
}

void SolverOverrides::applyTo(SolverConfig<double>& cfg) const
{
    if (eps_abs) cfg.eps_abs = *eps_abs;
    if (eps_rel) cfg.eps_rel = *eps_rel;
    if (max_iters) cfg.max_iters = *max_iters;
    if (rho0) cfg.rho0 = *rho0;
    if (adapt_rho) cfg.adapt_rho = *adapt_rho;
    if (rescale_duals) cfg.rescale_duals = *rescale_duals;
    if (real_domain) cfg.real_domain = *real_domain;
}

void ExperimentSpec::validate() const
{
    auto fail = [](const std::string& what) { throw std::invalid_argument("ExperimentSpec: " + what); };
    if (n < 1 || N < 1) fail("n and N must be >= 1");
    if (k < 0 || k > n) fail("need 0 <= k <= n");
    if (trials < 1) fail("trials must be >= 1");
    if (jobs < 1) fail("jobs must be >= 1");
    if (methods.empty()) fail("no methods");
    if (!(success_tol > 0)) fail("success_tol must be > 0");
    if (!(lambda >= 0)) fail("lambda must be >= 0");
    if (ensemble == Ensemble::FourierSparseImage) {
        const int side = static_cast<int>(std::lround(std::sqrt(double(n))));
        if (side * side != n) fail("fourier ensemble needs n = side^2");
    }
    solverConfig().validate();
}

SolverConfig<double> ExperimentSpec::solverConfig() const
{
    SolverConfig<double> cfg;
    // Success is judged at 1e-3 relative error, which the solver's default
    // stopping tolerances do not resolve.
    cfg.eps_abs = 1e-6;
    cfg.eps_rel = 1e-6;
    cfg.lambda = lambda;
    overrides.applyTo(cfg);
    return cfg;
}

ExperimentSpec specFromJson(const json& doc)
{
    if (!doc.is_object()) throw InputError("", "spec must be an object");
    ExperimentSpec s;
    auto get = [&](const char* key, auto& field) {
        if (!doc.contains(key)) return;
        try {
            doc.at(key).get_to(field);
        } catch (const json::exception&) {
            throw InputError(std::string("/") + key, "wrong type");
        }
    };
    get("n", s.n);
    get("N", s.N);
    get("k", s.k);
    get("lambda", s.lambda);
    get("trials", s.trials);
    get("seed", s.seed);
    get("success_tol", s.success_tol);
    get("epsilon", s.epsilon);
    get("jobs", s.jobs);
    try {
        if (doc.contains("ensemble")) s.ensemble = parseEnsemble(doc.at("ensemble").get<std::string>());
        if (doc.contains("signal")) s.signal = parseSignal(doc.at("signal").get<std::string>());
        if (doc.contains("methods")) {
            const json& m = doc.at("methods");
            std::string list;
            if (m.is_string()) {
                list = m.get<std::string>();
            } else {
                for (const auto& item : m) list += item.get<std::string>() + ",";
            }
            s.methods = parseMethods(list);
        }
    } catch (const json::exception&) {
        throw InputError("", "ensemble, signal and methods must be strings");
    } catch (const std::invalid_argument& e) {
        throw InputError("", e.what());
    }
    if (doc.contains("solver")) {
        const json& o = doc.at("solver");
        if (!o.is_object()) throw InputError("/solver", "expected an object");
        auto opt = [&](const char* key, auto& field) {
            if (!o.contains(key)) return;
            try {
                field = o.at(key).get<typename std::remove_reference_t<decltype(field)>::value_type>();
            } catch (const json::exception&) {
                throw InputError(std::string("/solver/") + key, "wrong type");
            }
        };
        opt("eps_abs", s.overrides.eps_abs);
        opt("eps_rel", s.overrides.eps_rel);
        opt("max_iters", s.overrides.max_iters);
        opt("rho0", s.overrides.rho0);
        opt("adapt_rho", s.overrides.adapt_rho);
        opt("rescale_duals", s.overrides.rescale_duals);
        opt("real_domain", s.overrides.real_domain);
    }
    return s;
}

json specToJson(const ExperimentSpec& spec)
{
    json methods = json::array();
    for (Method m : spec.methods) methods.push_back(toString(m));
    const SolverConfig<double> cfg = spec.solverConfig();
    return {{"n", spec.n},
            {"N", spec.N},
            {"k", spec.k},
            {"ensemble", toString(spec.ensemble)},
            {"signal", toString(spec.signal)},
            {"lambda", spec.lambda},
            {"trials", spec.trials},
            {"seed", spec.seed},
            {"methods", methods},
            {"success_tol", spec.success_tol},
            {"epsilon", spec.epsilon},
            {"solver",
             {{"eps_abs", cfg.eps_abs},
              {"eps_rel", cfg.eps_rel},
              {"max_iters", cfg.max_iters},
              {"rho0", cfg.rho0},
              {"adapt_rho", cfg.adapt_rho},
              {"rescale_duals", cfg.rescale_duals},
              {"real_domain", cfg.real_domain}}}};
}

std::vector<TrialRecord> runTrial(const ExperimentSpec& spec, int trial)
{
    const Instance inst = generate(spec.ensemble, spec.n, spec.N, spec.k, spec.signal,
                                   deriveSeed(spec.seed, static_cast<std::uint64_t>(trial)));
    std::vector<TrialRecord> out;
    out.reserve(spec.methods.size());
    for (Method m : spec.methods) {
        TrialRecord rec;
        try {
            const bool lifted = m == Method::QBP || m == Method::QBP_lambda0 || m == Method::QBPD;
            rec = lifted ? runLifted(inst, spec, m) : runBaseline(inst, spec, m);
        } catch (const std::exception& e) {
            rec = TrialRecord{};
            rec.success = false;
            rec.error = kNaN;
            rec.rank_ratio = kNaN;
            rec.status = std::string("error: ") + e.what();
            spdlog::warn("trial {} {}: {}", trial, toString(m), e.what());
        }
        rec.trial = trial;
        rec.method = m;
        spdlog::debug("trial {} {} success={} error={:.3g} iters={}", trial, toString(m), rec.success, rec.error,
                      rec.iterations);
        out.push_back(std::move(rec));
    }
    return out;
}

MonteCarloResult runMonteCarlo(const ExperimentSpec& spec, const std::function<void(int, int)>& progress)
{
    spec.validate();
    std::vector<std::vector<TrialRecord>> slots(static_cast<std::size_t>(spec.trials));
    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex progressLock;
    auto worker = [&] {
        for (int t = next++; t < spec.trials; t = next++) {
            slots[static_cast<std::size_t>(t)] = runTrial(spec, t);
            const int d = ++done;
            if (progress) {
                std::lock_guard<std::mutex> lock(progressLock);
                progress(d, spec.trials);
            }
        }
    };
    const int jobs = std::min(spec.jobs, spec.trials);
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    MonteCarloResult out;
    for (auto& s : slots)
        for (auto& r : s) out.records.push_back(std::move(r));
    out.summary = summarize(out.records, spec.methods);
    return out;
}

std::vector<MethodSummary> summarize(const std::vector<TrialRecord>& records, const std::vector<Method>& methods)
{
    std::vector<MethodSummary> out;
    for (Method m : methods) {
        MethodSummary s;
        s.method = m;
        std::vector<double> times;
        for (const auto& r : records) {
            if (r.method != m) continue;
            ++s.trials;
            s.successes += r.success ? 1 : 0;
            times.push_back(r.wall_time_s);
        }
        if (s.trials > 0) {
            s.success_rate = double(s.successes) / s.trials;
            std::sort(times.begin(), times.end());
            const std::size_t h = times.size() / 2;
            s.median_wall_time_s = times.size() % 2 ? times[h] : 0.5 * (times[h - 1] + times[h]);
        }
        out.push_back(s);
    }
    return out;
}

namespace {

std::string csvField(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

}  // namespace

void writeCsv(std::ostream& os, const std::vector<TrialRecord>& records)
{
    os << "trial,method,success,error,iterations,wall_time_s,rank_ratio,status\n";
    std::ostringstream line;
    for (const auto& r : records) {
        line.str("");
        line << std::setprecision(9) << r.trial << ',' << toString(r.method) << ',' << (r.success ? 1 : 0) << ','
             << r.error << ',' << r.iterations << ',' << r.wall_time_s << ',' << r.rank_ratio << ','
             << csvField(r.status) << '\n';
        os << line.str();
    }
}

void writeSummary(std::ostream& os, const std::vector<MethodSummary>& summary)
{
    os << std::left << std::setw(14) << "method" << std::right << std::setw(8) << "trials" << std::setw(11)
       << "successes" << std::setw(9) << "rate" << std::setw(14) << "median_t_s" << '\n';
    for (const auto& s : summary) {
        os << std::left << std::setw(14) << toString(s.method) << std::right << std::setw(8) << s.trials
           << std::setw(11) << s.successes << std::setw(8) << std::fixed << std::setprecision(1)
           << 100.0 * s.success_rate << '%' << std::setw(14) << std::setprecision(4) << s.median_wall_time_s
           << std::defaultfloat << '\n';
    }
}

}  // namespace qbp::harness

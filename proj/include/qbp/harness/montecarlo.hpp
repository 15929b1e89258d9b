#pragma once

#include <qbp/admm.hpp>
#include <qbp/harness/generators.hpp>
#include <qbp/harness/json_io.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qbp::harness {

enum class Method { QBP, QBP_lambda0, BP, IHT, QBPD };

Method parseMethod(const std::string& name);
std::string toString(Method m);
/// Comma separated, e.g. "qbp,bp,iht".
std::vector<Method> parseMethods(const std::string& list);

/// Partial SolverConfig; unset fields keep the harness defaults.
struct SolverOverrides {
    std::optional<double> eps_abs;
    std::optional<double> eps_rel;
    std::optional<int> max_iters;
    std::optional<double> rho0;
    std::optional<bool> adapt_rho;
    std::optional<bool> rescale_duals;
    std::optional<bool> real_domain;

    void applyTo(SolverConfig<double>& cfg) const;
};

struct ExperimentSpec {
    int n = 20;
    int N = 25;
    int k = 3;
    Ensemble ensemble = Ensemble::GeneralQuadratic;
    SignalKind signal = SignalKind::BinarySupport;
    double lambda = 50;
    int trials = 100;
    std::uint64_t seed = 1;
    std::vector<Method> methods{Method::QBP, Method::QBP_lambda0, Method::BP, Method::IHT};
    SolverOverrides overrides;
    /// Relative error below which a trial counts as a recovery.
    double success_tol = 1e-3;
    /// Noise budget for the QBPD method.
    double epsilon = 1e-6;
    int jobs = 1;

    void validate() const;
    /// Solver settings for the QBP-family methods before the per-method lambda.
    SolverConfig<double> solverConfig() const;
};

/// Reads a spec object; absent keys keep their defaults.
ExperimentSpec specFromJson(const json& doc);
json specToJson(const ExperimentSpec& spec);

struct TrialRecord {
    int trial = 0;
    Method method = Method::QBP;
    bool success = false;
    double error = 0;
    int iterations = 0;
    double wall_time_s = 0;
    /// NaN for methods that return a vector rather than a lifted matrix.
    double rank_ratio = 0;
    /// Solver termination, "ok" for baselines, or "error: ..." when the method threw.
    std::string status;
    bool converged = false;
    // Z_final checks, lifted methods only.
    double max_violation = 0;
    double min_eigenvalue = 0;
};

struct MethodSummary {
    Method method = Method::QBP;
    int trials = 0;
    int successes = 0;
    double success_rate = 0;
    double median_wall_time_s = 0;
};

struct MonteCarloResult {
    std::vector<TrialRecord> records;
    std::vector<MethodSummary> summary;
};

std::vector<TrialRecord> runTrial(const ExperimentSpec& spec, int trial);

/// Trials run on up to spec.jobs threads; records come back sorted by
/// (trial, method order in spec.methods).
MonteCarloResult runMonteCarlo(const ExperimentSpec& spec,
                               const std::function<void(int done, int total)>& progress = {});

std::vector<MethodSummary> summarize(const std::vector<TrialRecord>& records, const std::vector<Method>& methods);

/// Columns: trial,method,success,error,iterations,wall_time_s,rank_ratio,status
void writeCsv(std::ostream& os, const std::vector<TrialRecord>& records);
void writeSummary(std::ostream& os, const std::vector<MethodSummary>& summary);

}  // namespace qbp::harness

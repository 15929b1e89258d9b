#include <qbp/harness/json_io.hpp>

#include <cmath>
#include <limits>
#include <vector>

namespace qbp::harness {

namespace {

using Cx = std::complex<double>;

const json& member(const json& obj, const std::string& key, const std::string& where)
{
    if (!obj.is_object()) throw InputError(where, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw InputError(where, "missing key '" + key + "'");
    return *it;
}

Cx readComplex(const json& j, const std::string& where)
{
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InputError(where, "expected a complex number [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Vec readVector(const json& j, Index n, const std::string& where)
{
    if (!j.is_array()) throw InputError(where, "expected an array");
    if (static_cast<Index>(j.size()) != n)
        throw InputError(where, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = readComplex(j[static_cast<std::size_t>(i)], where + "/" + std::to_string(i));
    return v;
}

Mat readMatrix(const json& j, Index n, const std::string& where)
{
    if (!j.is_array()) throw InputError(where, "expected an array of rows");
    if (static_cast<Index>(j.size()) != n)
        throw InputError(where, "expected " + std::to_string(n) + " rows, got " + std::to_string(j.size()));
    Mat M(n, n);
    for (Index r = 0; r < n; ++r) M.row(r) = readVector(j[static_cast<std::size_t>(r)], n, where + "/" + std::to_string(r)).transpose();
    return M;
}

// JSON has no NaN or infinity.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json complexToJson(Cx z) { return json::array({z.real(), z.imag()}); }

json vectorToJson(const Vec& v)
{
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(complexToJson(v(i)));
    return out;
}

json instanceToJson(const System& system, const Vec* x_true)
{
    json ms = json::array();
    for (const auto& m : system.measurements()) {
        json Q = json::array();
        for (Index r = 0; r < m.Q().rows(); ++r) Q.push_back(vectorToJson(m.Q().row(r).transpose()));
        ms.push_back({{"a", complexToJson(m.a())},
                      {"b", vectorToJson(m.b())},
                      {"c", vectorToJson(m.c())},
                      {"Q", std::move(Q)},
                      {"y", complexToJson(m.y())}});
    }
    json doc = {{"n", system.dimension()}, {"measurements", std::move(ms)}};
    if (x_true != nullptr) doc["x_true"] = vectorToJson(*x_true);
    return doc;
}

LoadedInstance instanceFromJson(const json& doc)
{
    const json& nj = member(doc, "n", "");
    if (!nj.is_number_integer() || nj.get<long long>() < 1) throw InputError("/n", "expected a positive integer");
    const Index n = nj.get<Index>();
    const json& list = member(doc, "measurements", "");
    if (!list.is_array() || list.empty()) throw InputError("/measurements", "expected a non-empty array");

    std::vector<QuadraticMeasurement<double>> ms;
    ms.reserve(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string at = "/measurements/" + std::to_string(i);
        const json& m = list[i];
        const Cx a = readComplex(member(m, "a", at), at + "/a");
        Vec b = readVector(member(m, "b", at), n, at + "/b");
        Vec c = readVector(member(m, "c", at), n, at + "/c");
        Mat Q = readMatrix(member(m, "Q", at), n, at + "/Q");
        const Cx y = readComplex(member(m, "y", at), at + "/y");
        try {
            ms.emplace_back(a, std::move(b), std::move(c), std::move(Q), y);
        } catch (const std::exception& e) {
            throw InputError(at, e.what());
        }
    }
    LoadedInstance out{System(n, std::move(ms)), std::nullopt};
    if (doc.contains("x_true")) out.x_true = readVector(doc["x_true"], n, "/x_true");
    return out;
}

LoadedInstance parseInstance(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError("byte " + std::to_string(e.byte), "malformed JSON");
    }
    return instanceFromJson(doc);
}

json reportToJson(const RecoveryReport<double>& report, const SolverResult<double>& result)
{
    json out = {{"x_hat", vectorToJson(report.x_hat)},
                {"rank_ratio", number(report.rank_ratio)},
                {"feasibility_residual", number(report.feasibility_residual)},
                {"sparsity", report.sparsity},
                {"solver",
                 {{"termination", toString(result.termination)},
                  {"iterations", result.iterations},
                  {"rho_final", number(result.rho_final)},
                  {"data_residual", number(result.data_residual)},
                  {"setup_residual", number(result.setup_residual)}}}};
    if (report.has_truth) {
        out["success"] = report.success;
        out["phase_aligned_error"] = number(report.phase_aligned_error);
    }
    return out;
}

json certificateToJson(const CoherenceCertificate<double>& cert)
{
    return {{"mu", number(cert.mu)},
            {"bound", number(cert.bound)},
            {"X_card", cert.X_card},
            {"rank_ratio", number(cert.rank_ratio)},
            {"certified", cert.certified},
            {"skipped_columns", cert.skipped_columns}};
}

json ripToJson(const RIPSampleReport<double>& rip)
{
    return {{"k", rip.k},
            {"epsilon_hat", number(rip.epsilon_hat)},
            {"epsilon1_hat", number(rip.epsilon1_hat)},
            {"samples", rip.samples}};
}

}  // namespace qbp::harness

#pragma once

#include <qbp/admm.hpp>
#include <qbp/diagnostics.hpp>
#include <qbp/harness/generators.hpp>

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>

namespace qbp::harness {

using json = nlohmann::json;

/// Malformed input; `where()` is a JSON-pointer style location such as
/// "/measurements/3/Q/1/0".
class InputError : public std::runtime_error {
public:
    InputError(const std::string& where, const std::string& what)
        : std::runtime_error(where + ": " + what), where_(where)
    {
    }
    const std::string& where() const { return where_; }

private:
    std::string where_;
};

struct LoadedInstance {
    System system;
    std::optional<Vec> x_true;
};

json complexToJson(std::complex<double> z);
json vectorToJson(const Vec& v);

json instanceToJson(const System& system, const Vec* x_true = nullptr);
LoadedInstance instanceFromJson(const json& doc);
/// Parses text; syntax errors become InputError with the byte offset.
LoadedInstance parseInstance(const std::string& text);

json reportToJson(const RecoveryReport<double>& report, const SolverResult<double>& result);
json certificateToJson(const CoherenceCertificate<double>& cert);
json ripToJson(const RIPSampleReport<double>& rip);

}  // namespace qbp::harness

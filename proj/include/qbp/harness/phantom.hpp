#pragma once

#include <qbp/admm.hpp>
#include <qbp/diagnostics.hpp>
#include <qbp/harness/generators.hpp>

#include <cstdint>
#include <iosfwd>

namespace qbp::harness {

struct PhantomSpec {
    int side = 8;
    /// Fourier coefficients kept from the phantom.
    int k = 10;
    /// Number of intensity measurements; 0 picks 4 * side^2.
    int N = 0;
    double lambda = 10;
    SolverMode mode = SolverMode::QBPD;
    double epsilon = 1e-2;
    std::uint64_t seed = 1;
    SolverConfig<double> solver = defaultSolver();

    int measurements() const { return N > 0 ? N : 4 * side * side; }
    void validate() const;
    static SolverConfig<double> defaultSolver();
};

struct PhantomResult {
    int side = 0;
    /// Image of the k-term Fourier approximation, row-major.
    Vec truth;
    /// F x_hat with its global phase aligned to `truth`.
    Vec recovered;
    Vec x_true;
    SolverResult<double> solver;
    RecoveryReport<double> report;
    /// ||recovered - truth|| / ||truth||
    double image_error = 0;
};

/// k-term Fourier approximation of the ellipse phantom, observed through
/// N random intensity measurements and recovered by the lifted solver.
PhantomResult runPhantom(const PhantomSpec& spec);

/// Columns: row,col,true_re,true_im,rec_re,rec_im,abs_error
void writePixelCsv(std::ostream& os, const PhantomResult& result);

}  // namespace qbp::harness

#include <qbp/harness/phantom.hpp>

#include <qbp/baselines.hpp>

#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace qbp::harness {

void PhantomSpec::validate() const
{
    if (side < 1) throw std::invalid_argument("PhantomSpec: side must be >= 1");
    if (k < 1 || k > side * side) throw std::invalid_argument("PhantomSpec: need 1 <= k <= side^2");
    if (N < 0) throw std::invalid_argument("PhantomSpec: N must be >= 0");
    SolverConfig<double> cfg = solver;
    cfg.lambda = lambda;
    cfg.mode = mode;
    cfg.epsilon_noise = epsilon;
    cfg.validate();
}

SolverConfig<double> PhantomSpec::defaultSolver()
{
    SolverConfig<double> cfg;
    cfg.eps_abs = 1e-5;
    cfg.eps_rel = 1e-5;
    cfg.max_iters = 5000;
    return cfg;
}

PhantomResult runPhantom(const PhantomSpec& spec)
{
    spec.validate();
    const Mat F = fourierBasis(spec.side);
    const Vec image = sheppLoganPhantom(spec.side).cast<std::complex<double>>();
    const Vec coeffs = hardThreshold<double>(F.adjoint() * image, spec.k);
    const System system = fourierSensingSystem(spec.side, coeffs, spec.measurements(), spec.seed);

    SolverConfig<double> cfg = spec.solver;
    cfg.lambda = spec.lambda;
    cfg.mode = spec.mode;
    cfg.epsilon_noise = spec.epsilon;

    PhantomResult out;
    out.side = spec.side;
    out.x_true = coeffs;
    out.truth = F * coeffs;
    out.solver = solve(system, cfg);
    out.report = makeReport(system, out.solver.Z_final, &out.x_true);

    Vec rec = F * out.report.x_hat;
    const std::complex<double> ip = rec.dot(out.truth);
    if (std::abs(ip) > 0) rec *= ip / std::abs(ip);
    out.recovered = rec;
    const double tn = out.truth.norm();
    out.image_error = tn > 0 ? (rec - out.truth).norm() / tn : rec.norm();
    return out;
}

void writePixelCsv(std::ostream& os, const PhantomResult& result)
{
    os << "row,col,true_re,true_im,rec_re,rec_im,abs_error\n" << std::setprecision(9);
    for (int r = 0; r < result.side; ++r) {
        for (int c = 0; c < result.side; ++c) {
            const Index i = r * result.side + c;
            const auto t = result.truth(i);
            const auto x = result.recovered(i);
            os << r << ',' << c << ',' << t.real() << ',' << t.imag() << ',' << x.real() << ',' << x.imag() << ','
               << std::abs(x - t) << '\n';
        }
    }
}

}  // namespace qbp::harness

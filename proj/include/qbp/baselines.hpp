#pragma once

// Comparison methods: basis pursuit on the first-order model of a quadratic
// system, and iterative hard thresholding on the full quadratic model.

#include <qbp/admm.hpp>
#include <qbp/core.hpp>
#include <qbp/quadratic_model.hpp>

#include <algorithm>
#include <numeric>
#include <vector>

namespace qbp {

/// Linear model y_lin = A x + C conj(x). A has rows b_i^H and C rows c_i^T, so
/// the combined linear term b^H x + x^H c is represented exactly.
template <typename Real = double>
struct BPProblem {
    CMatrix<Real> A;
    CMatrix<Real> C;
    CVector<Real> y_lin;

    BPProblem(CMatrix<Real> a, CMatrix<Real> c, CVector<Real> y) : A(std::move(a)), C(std::move(c)), y_lin(std::move(y))
    {
        requireDims(A.rows() >= 1, "BPProblem: need at least one row");
        requireDims(C.rows() == A.rows() && C.cols() == A.cols(), "BPProblem: A and C shapes differ");
        requireDims(y_lin.size() == A.rows(), "BPProblem: y has wrong length");
    }

    explicit BPProblem(CMatrix<Real> a, CVector<Real> y)
        : BPProblem(a, CMatrix<Real>::Zero(a.rows(), a.cols()), std::move(y))
    {
    }

    Index rows() const { return A.rows(); }
    Index dimension() const { return A.cols(); }
};

/// Drops Q and subtracts a: y_i - a_i = b_i^H x + x^H c_i.
template <typename Real>
BPProblem<Real> linearize(const QuadraticSystem<Real>& system)
{
    const Index N = system.size();
    const Index n = system.dimension();
    CMatrix<Real> A(N, n);
    CMatrix<Real> C(N, n);
    CVector<Real> y(N);
    for (Index i = 0; i < N; ++i) {
        A.row(i) = system[i].b().adjoint();
        C.row(i) = system[i].c().transpose();
        y(i) = system[i].y() - system[i].a();
    }
    return BPProblem<Real>(std::move(A), std::move(C), std::move(y));
}

class InfeasibleSystemError : public NumericalError {
public:
    InfeasibleSystemError(const std::string& what, double residual) : NumericalError(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

template <typename Real = double>
struct BPOptions {
    Real tol = 1e-6;
    Real rho0 = 1;
    Real eps_abs = 1e-9;
    Real eps_rel = 1e-7;
    int max_iters = 20000;
    /// Minimize ||x||_1 over the least-squares solution set instead of
    /// throwing when A x + C conj(x) = y_lin has no solution.
    bool least_squares = false;
};

template <typename Real = double>
struct BPResult {
    CVector<Real> x;
    int iterations = 0;
    bool converged = false;
    /// ||A x + C conj(x) - y_lin||
    Real residual = 0;
};

namespace detail {

/// Real embedding [Re; Im] of x -> A x + C conj(x) acting on [Re x; Im x].
template <typename Real>
RMatrix<Real> realEmbedding(const BPProblem<Real>& p)
{
    const Index N = p.rows();
    const Index n = p.dimension();
    const CMatrix<Real> onU = p.A + p.C;
    const CMatrix<Real> onV = (p.A - p.C) * Complex<Real>(0, 1);
    RMatrix<Real> M(2 * N, 2 * n);
    M.topLeftCorner(N, n) = onU.real();
    M.topRightCorner(N, n) = onV.real();
    M.bottomLeftCorner(N, n) = onU.imag();
    M.bottomRightCorner(N, n) = onV.imag();
    return M;
}

template <typename Real>
void groupSoft(RVector<Real>& z, Index n, Real q)
{
    for (Index j = 0; j < n; ++j) {
        const Complex<Real> v = softThreshold(Complex<Real>(z(j), z(j + n)), q);
        z(j) = v.real();
        z(j + n) = v.imag();
    }
}

}  // namespace detail

/// min ||x||_1 s.t. A x + C conj(x) = y_lin, by ADMM on the split
/// x (affine set) = z (l1 prox) with residual-balanced rho.
template <typename Real>
BPResult<Real> basisPursuit(const BPProblem<Real>& problem, const BPOptions<Real>& opts = {})
{
    const Index n = problem.dimension();
    const Index N = problem.rows();
    const RMatrix<Real> M = detail::realEmbedding(problem);
    RVector<Real> t(2 * N);
    t.head(N) = problem.y_lin.real();
    t.tail(N) = problem.y_lin.imag();

    Eigen::BDCSVD<RMatrix<Real>> svd(M.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector<Real>& s = svd.singularValues();
    const Real cut = (s.size() ? s(0) : Real(0)) * Real(std::max(M.rows(), M.cols())) *
                     Eigen::NumTraits<Real>::epsilon();
    Index rank = 0;
    while (rank < s.size() && s(rank) > cut) ++rank;
    const RMatrix<Real> basis = svd.matrixU().leftCols(rank);
    const RMatrix<Real> rowBasis = svd.matrixV().leftCols(rank);
    const RVector<Real> coeffs = rowBasis.transpose() * t;
    const RVector<Real> offset = coeffs.cwiseQuotient(s.head(rank));
    const Real lsResidual = (rowBasis * coeffs - t).norm();
    if (lsResidual > opts.tol * std::max(Real(1), t.norm()) && !opts.least_squares)
        throw InfeasibleSystemError("basisPursuit: linear system is inconsistent", double(lsResidual));

    auto project = [&](const RVector<Real>& v) -> RVector<Real> { return v - basis * (basis.transpose() * v - offset); };

    RVector<Real> z = RVector<Real>::Zero(2 * n);
    RVector<Real> w = RVector<Real>::Zero(2 * n);
    RVector<Real> x = project(z);
    Real rho = opts.rho0;
    BPResult<Real> out;
    const Real scale = std::sqrt(Real(2 * n));
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        x = project(z - w);
        const RVector<Real> zprev = z;
        z = x + w;
        detail::groupSoft(z, n, Real(1) / rho);
        w += x - z;
        out.iterations = iter;
        const Real r = (x - z).norm();
        const Real sres = rho * (z - zprev).norm();
        const Real epsPri = scale * opts.eps_abs + opts.eps_rel * std::max(x.norm(), z.norm());
        const Real epsDual = scale * opts.eps_abs + opts.eps_rel * rho * w.norm();
        if (r <= epsPri && sres <= epsDual) {
            out.converged = true;
            break;
        }
        // Scaled dual w = y/rho is rescaled with every rho change.
        if (r > 10 * sres && rho < Real(1e8)) {
            rho *= 2;
            w /= 2;
        } else if (sres > 10 * r && rho > Real(1e-8)) {
            rho /= 2;
            w *= 2;
        }
    }
    out.x.resize(n);
    for (Index j = 0; j < n; ++j) out.x(j) = Complex<Real>(x(j), x(j + n));
    out.residual = (problem.A * out.x + problem.C * out.x.conjugate() - problem.y_lin).norm();
    return out;
}

// ---------------------------------------------------------------------------
// Iterative hard thresholding

template <typename Real = double>
struct IHTConfig {
    Index k = 1;
    Real step0 = 1;
    int max_iters = 1000;
    /// Empty means start from zero.
    CVector<Real> x0;
    Real shrink = 0.5;
    int max_backtracks = 60;
    Real stall_tol = 1e-10;

    void validate() const
    {
        if (k < 1) throw std::invalid_argument("IHTConfig: k must be >= 1");
        if (!(step0 > 0)) throw std::invalid_argument("IHTConfig: step0 must be > 0");
        if (!(shrink > 0 && shrink < 1)) throw std::invalid_argument("IHTConfig: shrink must lie in (0, 1)");
        if (max_iters < 1) throw std::invalid_argument("IHTConfig: max_iters must be positive");
    }
};

template <typename Real = double>
struct IHTResult {
    CVector<Real> x;
    Real objective = 0;
    int iterations = 0;
};

/// Best k-term approximation: keeps the k largest magnitudes, lowest index first on ties.
template <typename Real>
CVector<Real> hardThreshold(const CVector<Real>& x, Index k)
{
    std::vector<Index> order(static_cast<std::size_t>(x.size()));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return std::abs(x(a)) > std::abs(x(b)); });
    CVector<Real> out = CVector<Real>::Zero(x.size());
    for (Index i = 0; i < std::min<Index>(k, x.size()); ++i) {
        const Index j = order[static_cast<std::size_t>(i)];
        out(j) = x(j);
    }
    return out;
}

/// g(x) = 1/2 sum_i |y_i - f_i(x)|^2
template <typename Real>
Real ihtObjective(const QuadraticSystem<Real>& system, const CVector<Real>& x)
{
    return Real(0.5) * (system.observations() - evaluate(system, x)).squaredNorm();
}

/// Gradient of g with respect to the 2n real coordinates, packed as
/// dg/dRe x + i dg/dIm x = sum_i (c_i + Q_i x) conj(r_i) + r_i (b_i + Q_i^H x),
/// r_i = f_i(x) - y_i.
template <typename Real>
CVector<Real> ihtGradient(const QuadraticSystem<Real>& system, const CVector<Real>& x)
{
    requireDims(x.size() == system.dimension(), "ihtGradient: x has wrong length");
    CVector<Real> g = CVector<Real>::Zero(x.size());
    for (const auto& m : system.measurements()) {
        const Complex<Real> r = m.evaluate(x) - m.y();
        g += (m.c() + m.Q() * x) * std::conj(r) + (m.b() + m.Q().adjoint() * x) * r;
    }
    return g;
}

/// x <- H_k(x - eta grad g(x)), eta backtracked from step0 until g decreases.
/// Stops on stall or max_iters and returns the best iterate.
template <typename Real>
IHTResult<Real> iterativeHardThresholding(const QuadraticSystem<Real>& system, const IHTConfig<Real>& config)
{
    config.validate();
    const Index n = system.dimension();
    CVector<Real> x = config.x0.size() == 0 ? CVector<Real>::Zero(n) : config.x0;
    requireDims(x.size() == n, "iterativeHardThresholding: x0 has wrong length");
    x = hardThreshold(x, config.k);
    Real g = ihtObjective(system, x);

    IHTResult<Real> out;
    for (int iter = 1; iter <= config.max_iters && g > Real(0); ++iter) {
        const CVector<Real> grad = ihtGradient(system, x);
        if (grad.norm() == Real(0)) break;
        Real eta = config.step0;
        bool accepted = false;
        CVector<Real> cand;
        Real gc = g;
        for (int bt = 0; bt < config.max_backtracks; ++bt, eta *= config.shrink) {
            cand = hardThreshold<Real>(x - eta * grad, config.k);
            gc = ihtObjective(system, cand);
            if (gc < g) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        out.iterations = iter;
        const Real decrease = (g - gc) / std::max(g, std::numeric_limits<Real>::min());
        x = std::move(cand);
        g = gc;
        if (decrease < config.stall_tol) break;
    }
    out.x = std::move(x);
    out.objective = g;
    return out;
}

}  // namespace qbp

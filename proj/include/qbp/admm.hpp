#pragma once

// Consensus ADMM for
//
//   min Tr(X) + lambda ||X||_1   s.t.  Tr(Phi_i X) = y_i,  X_00 = 1,  X >= 0
//
// split as f1(X1) + f2(X2) + g(Z) with X1 = Z and X2 = Z. f1 carries the trace
// and the affine constraints, f2 the PSD cone, g the entrywise l1 penalty.
// The denoising variant replaces the hard affine set in f1 by a quadratic
// data penalty whose weight is swept until the residual budget is met.

#include <qbp/core.hpp>
#include <qbp/quadratic_model.hpp>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace qbp {

enum class SolverMode { QBP, QBPD };

enum class Termination { Converged, MaxIters, InfeasibleProjection, ConstraintUnattained };

inline const char* toString(Termination t)
{
    switch (t) {
    case Termination::Converged: return "Converged";
    case Termination::MaxIters: return "MaxIters";
    case Termination::InfeasibleProjection: return "InfeasibleProjection";
    case Termination::ConstraintUnattained: return "ConstraintUnattained";
    }
    return "Unknown";
}

template <typename Real = double>
struct SolverConfig {
    Real lambda = 50;
    Real rho0 = 1;
    Real eps_abs = 1e-3;
    Real eps_rel = 1e-3;
    Real mu = 10;
    Real tau_incr = 2;
    Real tau_decr = 2;
    int max_iters = 10000;
    SolverMode mode = SolverMode::QBP;
    Real epsilon_noise = 0;

    // rho updates that would leave [rho_min, rho_max] are skipped.
    Real rho_min = 1e-8;
    Real rho_max = 1e8;
    bool adapt_rho = true;
    /// Rescale Y1, Y2 by rho_new/rho_old on every rho change.
    bool rescale_duals = false;
    /// Start from X1 = X2 = Z = I; zero matrices otherwise.
    bool identity_init = true;
    /// Nonzero: start from a random trace-normalized PSD matrix drawn with this seed.
    std::uint64_t init_seed = 0;
    /// Verify per-iterate invariants and throw NumericalError on violation.
    bool check_invariants = false;
    /// Restrict every iterate to real symmetric matrices (real-valued unknowns).
    bool real_domain = false;

    // Denoising penalty sweep: beta_k = beta0 * beta_growth^k, k < beta_levels.
    Real beta0 = 1e-3;
    Real beta_growth = 10;
    int beta_levels = 11;

    void validate() const
    {
        auto fail = [](const std::string& what) { throw std::invalid_argument("SolverConfig: " + what); };
        if (!(lambda >= 0)) fail("lambda must be >= 0");
        if (!(rho0 > 0)) fail("rho0 must be > 0");
        if (!(eps_abs >= 0) || !(eps_rel >= 0)) fail("tolerances must be >= 0");
        if (!(mu > 0) || !(tau_incr > 0) || !(tau_decr > 0)) fail("rho rule factors must be > 0");
        if (max_iters < 1) fail("max_iters must be positive");
        if (mode == SolverMode::QBPD && !(epsilon_noise > 0)) fail("QBPD needs epsilon_noise > 0");
        if (mode == SolverMode::QBPD && (!(beta0 > 0) || !(beta_growth > 1) || beta_levels < 1))
            fail("invalid beta sweep");
    }
};

template <typename Real = double>
struct ResidualRecord {
    Real primal;
    Real dual;
    Real rho;
    Real objective;
};

template <typename Real = double>
struct SolverResult {
    HermitianMatrix<Real> Z_final;
    HermitianMatrix<Real> X1_final;
    HermitianMatrix<Real> X2_final;
    int iterations = 0;
    Termination termination = Termination::MaxIters;
    std::vector<ResidualRecord<Real>> residual_trace;
    Real rho_final = 0;
    /// Least-squares residual of the augmented constraint system at setup.
    Real setup_residual = 0;
    /// sum_i |y_i - Tr(Phi_i Z_final)|^2
    Real data_residual = 0;
    /// Penalty weight of the returned denoising solve; zero in QBP mode.
    Real beta = 0;
};

// ---------------------------------------------------------------------------
// Kernels

/// Magnitude shrinkage: 0 when |x| <= q, else x (|x| - q)/|x|.
template <typename Real>
Complex<Real> softThreshold(const Complex<Real>& x, Real q)
{
    const Real mag = std::abs(x);
    if (mag <= q) return Complex<Real>(0);
    return x * ((mag - q) / mag);
}

template <typename Real>
HermitianMatrix<Real> softThreshold(const HermitianMatrix<Real>& M, Real q)
{
    CMatrix<Real> out = M.matrix().unaryExpr([q](const Complex<Real>& v) { return softThreshold(v, q); });
    return HermitianMatrix<Real>(out);
}

/// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues.
template <typename Real>
HermitianMatrix<Real> projectPSD(const HermitianMatrix<Real>& M)
{
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> eig(M.matrix());
    if (eig.info() != Eigen::Success) throw NumericalError("projectPSD: eigendecomposition failed");
    const RVector<Real> clipped = eig.eigenvalues().cwiseMax(Real(0));
    const auto& V = eig.eigenvectors();
    return HermitianMatrix<Real>(V * clipped.template cast<Complex<Real>>().asDiagonal() * V.adjoint());
}

/// Z = soft((X1 + X2)/2 + (Y1 + Y2)/(2 rho), lambda/(2 rho))
template <typename Real>
HermitianMatrix<Real> updateZ(const HermitianMatrix<Real>& X1, const HermitianMatrix<Real>& X2,
                              const HermitianMatrix<Real>& Y1, const HermitianMatrix<Real>& Y2,
                              Real rho, Real lambda)
{
    if (!(rho > 0)) throw std::invalid_argument("updateZ: rho must be > 0");
    const CMatrix<Real> center =
        (X1.matrix() + X2.matrix()) * Real(0.5) + (Y1.matrix() + Y2.matrix()) * (Real(0.5) / rho);
    return softThreshold(HermitianMatrix<Real>(center), lambda / (Real(2) * rho));
}

/// Residual balancing: grow rho when the primal residual dominates by mu,
/// shrink it when the dual residual does.
template <typename Real>
Real updateRho(Real rho, Real r_norm, Real s_norm, const SolverConfig<Real>& config)
{
    if (!(rho > 0)) throw std::invalid_argument("updateRho: rho must be > 0");
    Real next = rho;
    if (r_norm > config.mu * s_norm)
        next = config.tau_incr * rho;
    else if (s_norm > config.mu * r_norm)
        next = rho / config.tau_decr;
    if (!(next >= config.rho_min && next <= config.rho_max) || !std::isfinite(next)) return rho;
    return next;
}

/// Orthogonal projection onto {X Hermitian : B(X) = y, X_00 = 1}.
///
/// The augmented constraint matrix is factored once by SVD. With V_r the
/// right singular vectors of the numerical row space and c = S_r^{-1} U_r^T b,
/// the projection of v is v - V_r (V_r^T v - c).
template <typename Real = double>
class AffineProjector {
public:
    explicit AffineProjector(const QuadraticSystem<Real>& system, bool realDomain = false)
        : size_(system.liftedSize()), realDomain_(realDomain)
    {
        MatricizedB<Real> aug = augmentB(system);
        rows_ = aug.rows();
        if (realDomain_) aug.B = aug.B * imaginaryMask().asDiagonal();
        // Factor the tall transpose; its thin U holds the row-space basis of B~.
        Eigen::BDCSVD<RMatrix<Real>> svd(aug.B.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
        const RVector<Real>& s = svd.singularValues();
        const Real smax = s.size() > 0 ? s(0) : Real(0);
        const Real cut = smax * Real(std::max(aug.B.rows(), aug.B.cols())) * Eigen::NumTraits<Real>::epsilon();
        Index rank = 0;
        while (rank < s.size() && s(rank) > cut) ++rank;
        rank_ = rank;
        basis_ = svd.matrixU().leftCols(rank);
        const RMatrix<Real> Ur = svd.matrixV().leftCols(rank);
        const RVector<Real> coeffs = Ur.transpose() * aug.y;
        offset_ = coeffs.cwiseQuotient(s.head(rank));
        setupResidual_ = (Ur * coeffs - aug.y).norm();
        rhsNorm_ = aug.y.norm();
    }

    Index rank() const { return rank_; }
    Index constraintRows() const { return rows_; }
    Real setupResidual() const { return setupResidual_; }

    /// Feasible when the least-squares residual is within 1e-6 of ||[y; 1]||.
    bool feasible() const { return setupResidual_ <= Real(1e-6) * rhsNorm_; }

    RVector<Real> projectVector(const RVector<Real>& v) const
    {
        if (realDomain_) {
            const RVector<Real> w = v.cwiseProduct(imaginaryMask());
            return w - basis_ * (basis_.transpose() * w - offset_);
        }
        return v - basis_ * (basis_.transpose() * v - offset_);
    }

    HermitianMatrix<Real> project(const HermitianMatrix<Real>& M) const
    {
        requireDims(M.size() == size_, "projectAffine: matrix has wrong size");
        return devec<Real>(projectVector(realvec(M)), size_);
    }

private:
    /// 1 on realvec coordinates that are real parts, 0 on imaginary parts.
    RVector<Real> imaginaryMask() const
    {
        RVector<Real> mask = RVector<Real>::Ones(realvecLength(size_));
        for (Index k = size_ + 1; k < mask.size(); k += 2) mask(k) = Real(0);
        return mask;
    }

    Index size_;
    bool realDomain_ = false;
    Index rows_ = 0;
    Index rank_ = 0;
    RMatrix<Real> basis_;
    RVector<Real> offset_;
    Real setupResidual_ = 0;
    Real rhsNorm_ = 1;
};

template <typename Real>
HermitianMatrix<Real> projectAffine(const HermitianMatrix<Real>& M, const QuadraticSystem<Real>& system,
                                    const AffineProjector<Real>& projector)
{
    requireDims(M.size() == system.liftedSize(), "projectAffine: matrix has wrong size");
    if (!projector.feasible()) throw NumericalError("projectAffine: constraint set is empty");
    return projector.project(M);
}

/// Proximal map of (beta/2) sum_i |y_i - Tr(Phi_i X)|^2 + Tr(X) with X_00 = 1
/// held fixed; used as the X1 step of the denoising solver.
///
/// Writing realvec(X) = e_0 + P u, the step solves
/// (beta A^T A + rho I) u = beta A^T b' + rho w' through a cached SVD of A,
/// where A is the constraint matrix without its X_00 column.
template <typename Real = double>
class PenalizedProjector {
public:
    PenalizedProjector(const QuadraticSystem<Real>& system, Real beta) : size_(system.liftedSize()), beta_(beta)
    {
        const MatricizedB<Real> mb = matricizeB(system);
        const Index d = mb.B.cols();
        const RMatrix<Real> A = mb.B.rightCols(d - 1);
        const RVector<Real> b = mb.y - mb.B.col(0);
        Eigen::BDCSVD<RMatrix<Real>> svd(A.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
        const RVector<Real>& s = svd.singularValues();
        const Real smax = s.size() > 0 ? s(0) : Real(0);
        const Real cut = smax * Real(std::max(A.rows(), A.cols())) * Eigen::NumTraits<Real>::epsilon();
        Index rank = 0;
        while (rank < s.size() && s(rank) > cut) ++rank;
        basis_ = svd.matrixU().leftCols(rank);
        sq_ = s.head(rank).cwiseAbs2();
        atb_ = A.transpose() * b;
    }

    Real beta() const { return beta_; }

    HermitianMatrix<Real> apply(const HermitianMatrix<Real>& M, Real rho) const
    {
        requireDims(M.size() == size_, "PenalizedProjector: matrix has wrong size");
        const RVector<Real> w = realvec(M);
        const Index d = w.size();
        const RVector<Real> g = beta_ * atb_ + rho * w.tail(d - 1);
        const RVector<Real> proj = basis_.transpose() * g;
        const RVector<Real> scaled = proj.array() / (beta_ * sq_.array() + rho);
        RVector<Real> v(d);
        v(0) = Real(1);
        v.tail(d - 1) = basis_ * scaled + (g - basis_ * proj) / rho;
        return devec<Real>(v, size_);
    }

private:
    Index size_;
    Real beta_;
    RMatrix<Real> basis_;
    RVector<Real> sq_;
    RVector<Real> atb_;
};

namespace detail {

template <typename Real>
Real minEigenvalue(const HermitianMatrix<Real>& M)
{
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> eig(M.matrix(), Eigen::EigenvaluesOnly);
    return eig.eigenvalues()(0);
}

template <typename Real>
Real objective(const HermitianMatrix<Real>& Z, Real lambda)
{
    return Z.trace() + lambda * Z.l1Norm();
}

template <typename Real>
Real dataResidual(const QuadraticSystem<Real>& system, const HermitianMatrix<Real>& X)
{
    return (system.observations() - applyB(system, X)).squaredNorm();
}

template <typename Real>
void checkHermitian(const HermitianMatrix<Real>& M, const char* name)
{
    if (hermitianDefect(M.matrix()) > Real(1e-12))
        throw NumericalError(std::string("ADMM invariant: ") + name + " not Hermitian");
}

/// Shared iteration. `x1Step(M, rho)` returns the X1 update for the shifted
/// argument M = Z - (I + Y1)/rho; `x1Check(X1)` validates it when invariant
/// checking is on.
template <typename Real, typename X1Step, typename X1Check>
SolverResult<Real> runAdmm(const QuadraticSystem<Real>& system, const SolverConfig<Real>& config,
                           X1Step&& x1Step, X1Check&& x1Check)
{
    const Index s = system.liftedSize();
    const Real n = Real(system.dimension());
    const CMatrix<Real> I = CMatrix<Real>::Identity(s, s);

    HermitianMatrix<Real> X1 = config.identity_init ? HermitianMatrix<Real>::identity(s) : HermitianMatrix<Real>(s);
    if (config.init_seed != 0) {
        std::mt19937_64 rng(config.init_seed);
        std::normal_distribution<Real> g;
        CMatrix<Real> G(s, s);
        for (Index j = 0; j < s; ++j)
            for (Index i = 0; i < s; ++i)
                G(i, j) = config.real_domain ? Complex<Real>(g(rng), 0) : Complex<Real>(g(rng), g(rng));
        const CMatrix<Real> P = G * G.adjoint();
        X1 = HermitianMatrix<Real>(P * (Real(s) / P.trace().real()));
    }
    HermitianMatrix<Real> X2 = X1;
    HermitianMatrix<Real> Z = X1;
    HermitianMatrix<Real> Y1(s);
    HermitianMatrix<Real> Y2(s);
    Real rho = config.rho0;

    SolverResult<Real> result;
    result.residual_trace.reserve(static_cast<std::size_t>(std::min(config.max_iters, 20000)));
    result.termination = Termination::MaxIters;

    for (int iter = 1; iter <= config.max_iters; ++iter) {
        X1 = x1Step(HermitianMatrix<Real>(Z.matrix() - (I + Y1.matrix()) / rho), rho);
        X2 = projectPSD(HermitianMatrix<Real>(Z.matrix() - Y2.matrix() / rho));
        const HermitianMatrix<Real> Zprev = Z;
        Z = updateZ(X1, X2, Y1, Y2, rho, config.lambda);
        Y1 = HermitianMatrix<Real>(Y1.matrix() + rho * (X1.matrix() - Z.matrix()));
        Y2 = HermitianMatrix<Real>(Y2.matrix() + rho * (X2.matrix() - Z.matrix()));

        if (config.check_invariants) {
            checkHermitian(X1, "X1");
            checkHermitian(X2, "X2");
            checkHermitian(Z, "Z");
            checkHermitian(Y1, "Y1");
            checkHermitian(Y2, "Y2");
            if (minEigenvalue(X2) < Real(-1e-8)) throw NumericalError("ADMM invariant: X2 not PSD");
            x1Check(X1);
        }

        const Real r = std::sqrt((X1.matrix() - Z.matrix()).squaredNorm() + (X2.matrix() - Z.matrix()).squaredNorm());
        const Real sres = rho * std::sqrt(Real(2)) * (Z.matrix() - Zprev.matrix()).norm();
        const Real xbarNorm = ((X1.matrix() + X2.matrix()) * Real(0.5)).norm();
        const Real ybarNorm = ((Y1.matrix() + Y2.matrix()) * Real(0.5)).norm();
        const Real epsPri = n * config.eps_abs + config.eps_rel * std::max(xbarNorm, Z.frobeniusNorm());
        const Real epsDual = n * config.eps_abs + config.eps_rel * ybarNorm;

        result.residual_trace.push_back({r, sres, rho, objective(Z, config.lambda)});
        result.iterations = iter;

        if (r <= epsPri && sres <= epsDual) {
            result.termination = Termination::Converged;
            break;
        }
        if (!std::isfinite(r) || !std::isfinite(sres)) throw NumericalError("ADMM: residuals diverged");

        if (config.adapt_rho) {
            const Real next = updateRho(rho, r, sres, config);
            if (next != rho && config.rescale_duals) {
                const Real ratio = next / rho;
                Y1 = ratio * Y1;
                Y2 = ratio * Y2;
            }
            rho = next;
        }
    }

    result.rho_final = rho;
    result.data_residual = dataResidual(system, Z);
    result.Z_final = std::move(Z);
    result.X1_final = std::move(X1);
    result.X2_final = std::move(X2);
    return result;
}

template <typename Real>
SolverResult<Real> infeasibleResult(const QuadraticSystem<Real>& system, Real setupResidual)
{
    SolverResult<Real> result;
    const Index s = system.liftedSize();
    result.Z_final = HermitianMatrix<Real>(s);
    result.X1_final = result.Z_final;
    result.X2_final = result.Z_final;
    result.termination = Termination::InfeasibleProjection;
    result.setup_residual = setupResidual;
    result.data_residual = std::numeric_limits<Real>::infinity();
    return result;
}

}  // namespace detail

template <typename Real>
SolverResult<Real> solveQBPD(const QuadraticSystem<Real>& system, const SolverConfig<Real>& config);

/// Solves the noiseless program. In QBPD mode this forwards to solveQBPD.
template <typename Real>
SolverResult<Real> solve(const QuadraticSystem<Real>& system, const SolverConfig<Real>& config)
{
    config.validate();
    if (config.mode == SolverMode::QBPD) return solveQBPD(system, config);

    const AffineProjector<Real> projector(system, config.real_domain);
    if (!projector.feasible()) return detail::infeasibleResult(system, projector.setupResidual());

    const CVector<Real> y = system.observations();
    auto step = [&](const HermitianMatrix<Real>& M, Real) { return projector.project(M); };
    auto check = [&](const HermitianMatrix<Real>& X1) {
        const CVector<Real> by = applyB(system, X1);
        for (Index i = 0; i < y.size(); ++i)
            if (std::abs(by(i) - y(i)) > Real(1e-8) * (Real(1) + std::abs(y(i))))
                throw NumericalError("ADMM invariant: X1 violates a measurement");
        if (std::abs(X1(0, 0) - Complex<Real>(1)) > Real(1e-8)) throw NumericalError("ADMM invariant: X1_00 != 1");
    };
    SolverResult<Real> result = detail::runAdmm(system, config, step, check);
    result.setup_residual = projector.setupResidual();
    return result;
}

/// Denoising solve with residual budget sum_i |y_i - Tr(Phi_i X)|^2 <= epsilon.
///
/// The penalty weight beta is raised geometrically; the first level whose
/// returned Z meets the budget is reported. When none does, the last level is
/// returned with termination ConstraintUnattained.
template <typename Real>
SolverResult<Real> solveQBPD(const QuadraticSystem<Real>& system, const SolverConfig<Real>& config)
{
    SolverConfig<Real> cfg = config;
    cfg.mode = SolverMode::QBPD;
    cfg.validate();

    SolverResult<Real> last;
    Real beta = cfg.beta0;
    for (int level = 0; level < cfg.beta_levels; ++level, beta *= cfg.beta_growth) {
        const PenalizedProjector<Real> prox(system, beta);
        auto step = [&](const HermitianMatrix<Real>& M, Real rho) { return prox.apply(M, rho); };
        auto check = [](const HermitianMatrix<Real>& X1) {
            if (std::abs(X1(0, 0) - Complex<Real>(1)) > Real(1e-8))
                throw NumericalError("ADMM invariant: X1_00 != 1");
        };
        last = detail::runAdmm(system, cfg, step, check);
        last.beta = beta;
        if (last.data_residual <= cfg.epsilon_noise) return last;
    }
    last.termination = Termination::ConstraintUnattained;
    return last;
}

}  // namespace qbp

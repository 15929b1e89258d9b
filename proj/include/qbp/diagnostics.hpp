#pragma once

// Signal extraction from the lifted solution, recovery scoring, and the
// recoverability certificates: mutual coherence with its cardinality bound,
// and sampled RIP / RIP-1 constants.

#include <qbp/core.hpp>
#include <qbp/quadratic_model.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace qbp {

template <typename Real = double>
struct SignalEstimate {
    CVector<Real> x_hat;
    /// sigma_2 / sigma_1 of the matrix the estimate was read from.
    Real rank_ratio = 0;
    bool rank_one = false;
};

namespace detail {

/// Singular values (descending) and the leading eigenvector of a Hermitian matrix.
template <typename Real>
void leadingPair(const CMatrix<Real>& M, RVector<Real>& sigma, CVector<Real>& u, Real& lambda)
{
    Eigen::SelfAdjointEigenSolver<CMatrix<Real>> eig(M);
    if (eig.info() != Eigen::Success) throw NumericalError("extractSignal: eigendecomposition failed");
    const RVector<Real>& ev = eig.eigenvalues();
    std::vector<Index> order(static_cast<std::size_t>(ev.size()));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(ev(a)) > std::abs(ev(b)); });
    sigma.resize(ev.size());
    for (Index i = 0; i < ev.size(); ++i) sigma(i) = std::abs(ev(order[static_cast<std::size_t>(i)]));
    u = eig.eigenvectors().col(order[0]);
    lambda = ev(order[0]);
}

template <typename Real>
Real ratioOf(const RVector<Real>& sigma)
{
    if (sigma.size() < 2) return Real(0);
    return std::clamp(sigma(1) / sigma(0), Real(0), Real(1));
}

}  // namespace detail

/// Reads x from the trailing block when the system has no constant or linear
/// terms: there the first row and column of X are not tied to the data, so the
/// rank-1 factor of X_{1:,1:} = x x^H is used instead (x up to global phase,
/// fixed so the largest entry is real positive).
template <typename Real>
SignalEstimate<Real> extractHomogeneous(const HermitianMatrix<Real>& Z, Real rank_tol)
{
    const Index n = Z.size() - 1;
    requireDims(n >= 1, "extractSignal: matrix too small");
    RVector<Real> sigma;
    CVector<Real> u;
    Real lambda = 0;
    detail::leadingPair<Real>(Z.matrix().bottomRightCorner(n, n), sigma, u, lambda);
    SignalEstimate<Real> out;
    if (!(sigma(0) > 0)) {
        out.x_hat = CVector<Real>::Zero(n);
        out.rank_ratio = Real(0);
        out.rank_one = true;
        return out;
    }
    Index big = 0;
    u.cwiseAbs().maxCoeff(&big);
    const Complex<Real> phase = std::conj(u(big)) / std::abs(u(big));
    out.x_hat = u * phase * std::sqrt(std::max(lambda, Real(0)));
    out.rank_ratio = detail::ratioOf(sigma);
    out.rank_one = out.rank_ratio <= rank_tol;
    return out;
}

/// Rank-1 read-out of the lifted solution.
///
/// With (sigma_1, u) the leading singular pair, the first column of
/// sigma_1 u u^H scaled to unit top entry gives x_hat = u_{1:} / u_0. The
/// estimate is returned whatever the rank ratio; `rank_one` reports whether
/// sigma_2 / sigma_1 <= rank_tol.
template <typename Real>
SignalEstimate<Real> extractSignal(const HermitianMatrix<Real>& Z, Real rank_tol = Real(1e-3),
                                   bool homogeneous = false)
{
    if (homogeneous) return extractHomogeneous(Z, rank_tol);
    const Index n = Z.size() - 1;
    requireDims(n >= 1, "extractSignal: matrix too small");
    RVector<Real> sigma;
    CVector<Real> u;
    Real lambda = 0;
    detail::leadingPair<Real>(Z.matrix(), sigma, u, lambda);
    if (!(sigma(0) > 0)) throw NumericalError("extractSignal: zero matrix has no rank-1 factor");

    SignalEstimate<Real> out;
    out.rank_ratio = detail::ratioOf(sigma);
    out.rank_one = out.rank_ratio <= rank_tol;
    if (std::abs(u(0)) <= std::sqrt(Eigen::NumTraits<Real>::epsilon())) {
        // Leading factor is orthogonal to e_0; no consistent normalization.
        out.x_hat = CVector<Real>::Zero(n);
        out.rank_one = false;
        return out;
    }
    out.x_hat = u.tail(n) / u(0);
    return out;
}

enum class Alignment {
    None,         ///< plain relative error
    Sign,         ///< best of x_hat and -x_hat
    GlobalPhase,  ///< best e^{i theta} x_hat
};

template <typename Real = double>
struct SuccessVerdict {
    bool success = false;
    Real error = 0;
};

/// Relative error ||align(x_hat) - x_true|| / ||x_true||; success when <= metric_tol.
template <typename Real>
SuccessVerdict<Real> judgeSuccess(const CVector<Real>& x_hat, const CVector<Real>& x_true, Real metric_tol,
                                  Alignment alignment)
{
    requireDims(x_hat.size() == x_true.size(), "judgeSuccess: length mismatch");
    const Real truth = x_true.norm();
    if (truth == Real(0)) {
        if (x_hat.norm() == Real(0)) return {true, Real(0)};
        return {false, std::numeric_limits<Real>::infinity()};
    }
    Real err = (x_hat - x_true).norm();
    switch (alignment) {
    case Alignment::None: break;
    case Alignment::Sign: err = std::min(err, (x_hat + x_true).norm()); break;
    case Alignment::GlobalPhase: {
        const Complex<Real> ip = x_hat.dot(x_true);  // x_hat^H x_true
        if (std::abs(ip) > Real(0)) err = std::min(err, (x_hat * (ip / std::abs(ip)) - x_true).norm());
        break;
    }
    }
    const Real rel = err / truth;
    return {rel <= metric_tol, rel};
}

template <typename Real>
SuccessVerdict<Real> judgeSuccess(const CVector<Real>& x_hat, const CVector<Real>& x_true, Real metric_tol,
                                  bool phase_invariant)
{
    return judgeSuccess(x_hat, x_true, metric_tol, phase_invariant ? Alignment::GlobalPhase : Alignment::None);
}

template <typename Real = double>
struct CoherenceResult {
    Real mu = 0;
    /// Columns excluded because they are numerically zero.
    Index skipped_columns = 0;
};

/// max_{i != j} |<A_i, A_j>| / (||A_i|| ||A_j||) over nonzero columns.
template <typename Derived>
auto mutualCoherence(const Eigen::MatrixBase<Derived>& A)
{
    using Scalar = typename Derived::Scalar;
    using Real = typename Eigen::NumTraits<Scalar>::Real;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    requireDims(A.cols() >= 2, "mutualCoherence: need at least two columns");

    const auto norms = A.colwise().norm().eval();
    const Real scale = norms.maxCoeff();
    const Real tiny = scale * Real(A.rows()) * Eigen::NumTraits<Real>::epsilon();
    std::vector<Index> keep;
    for (Index j = 0; j < A.cols(); ++j)
        if (norms(j) > tiny && norms(j) > Real(0)) keep.push_back(j);

    CoherenceResult<Real> out;
    out.skipped_columns = A.cols() - static_cast<Index>(keep.size());
    if (keep.size() < 2) return out;

    Mat unit(A.rows(), static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) unit.col(static_cast<Index>(k)) = A.col(keep[k]) / norms(keep[k]);
    Mat gram = unit.adjoint() * unit;
    gram.diagonal().setZero();
    out.mu = std::min(Real(1), gram.cwiseAbs().maxCoeff());
    return out;
}

template <typename Real = double>
struct CoherenceCertificate {
    Real mu = 0;
    /// 0.5 (1 + 1/mu); infinite when mu = 0.
    Real bound = 0;
    Index X_card = 0;
    Real rank_ratio = 0;
    bool certified = false;
    Index skipped_columns = 0;
};

/// Cardinality certificate: a rank-1 solution with ||X||_0 < 0.5 (1 + 1/mu(B))
/// is the lifted sparsest solution. Coherence is measured on the complex
/// matricization of B; entries below zero_tol * max|Z| count as zero.
template <typename Real>
CoherenceCertificate<Real> certifyCoherence(const QuadraticSystem<Real>& system, const HermitianMatrix<Real>& Z,
                                            Real zero_tol = Real(1e-6), Real rank_tol = Real(1e-3))
{
    requireDims(Z.size() == system.liftedSize(), "certifyCoherence: Z has wrong size");
    const auto coh = mutualCoherence(complexMatricizeB(system));
    CoherenceCertificate<Real> cert;
    cert.mu = coh.mu;
    cert.skipped_columns = coh.skipped_columns;
    cert.bound = coh.mu > 0 ? Real(0.5) * (Real(1) + Real(1) / coh.mu) : std::numeric_limits<Real>::infinity();
    const Real maxAbs = Z.matrix().cwiseAbs().maxCoeff();
    cert.X_card = Z.cardinality(zero_tol * maxAbs);

    RVector<Real> sigma;
    CVector<Real> u;
    Real lambda = 0;
    if (maxAbs > 0) {
        detail::leadingPair<Real>(Z.matrix(), sigma, u, lambda);
        cert.rank_ratio = detail::ratioOf(sigma);
    } else {
        cert.rank_ratio = Real(1);
    }
    cert.certified = cert.rank_ratio <= rank_tol && Real(cert.X_card) < cert.bound;
    return cert;
}

template <typename Real = double>
struct RIPSampleReport {
    Index k = 0;
    /// max |‖B(X)‖² / ‖X‖² - 1| over the samples; a lower bound on the RIP constant.
    Real epsilon_hat = 0;
    /// Same for the l1 ratio ‖B(X)‖₁ / ‖X‖₁.
    Real epsilon1_hat = 0;
    Index samples = 0;
};

/// Random Hermitian matrix with at most k nonzero entries.
template <typename Real>
HermitianMatrix<Real> randomSparseHermitian(Index size, Index k, std::mt19937_64& rng)
{
    std::vector<std::pair<Index, Index>> slots;
    for (Index i = 0; i < size; ++i)
        for (Index j = i; j < size; ++j) slots.emplace_back(i, j);
    std::shuffle(slots.begin(), slots.end(), rng);
    std::normal_distribution<Real> gauss(0, 1);
    CMatrix<Real> m = CMatrix<Real>::Zero(size, size);
    Index used = 0;
    for (const auto& [i, j] : slots) {
        const Index cost = i == j ? 1 : 2;
        if (used + cost > k) continue;
        used += cost;
        if (i == j) {
            m(i, i) = Complex<Real>(gauss(rng), 0);
        } else {
            m(i, j) = Complex<Real>(gauss(rng), gauss(rng));
            m(j, i) = std::conj(m(i, j));
        }
        if (used == k) break;
    }
    return HermitianMatrix<Real>(m);
}

/// Sampled RIP / RIP-1 deviation over random k-sparse Hermitian X.
/// Sample i draws from its own stream deriveSeed(seed, i).
template <typename Real>
RIPSampleReport<Real> sampleRIP(const QuadraticSystem<Real>& system, Index k, Index samples, std::uint64_t seed)
{
    const Index s = system.liftedSize();
    requireDims(k >= 1 && k <= s * s, "sampleRIP: k out of range");
    requireDims(samples >= 1, "sampleRIP: need at least one sample");
    RIPSampleReport<Real> report;
    report.k = k;
    report.samples = samples;
    for (Index t = 0; t < samples; ++t) {
        std::mt19937_64 rng(deriveSeed(seed, static_cast<std::uint64_t>(t)));
        HermitianMatrix<Real> X = randomSparseHermitian<Real>(s, k, rng);
        if (X.frobeniusNorm() == Real(0)) X = HermitianMatrix<Real>::identity(s);
        const CVector<Real> bx = applyB(system, X);
        const Real r2 = bx.squaredNorm() / X.matrix().squaredNorm();
        const Real r1 = bx.cwiseAbs().sum() / X.l1Norm();
        report.epsilon_hat = std::max(report.epsilon_hat, std::abs(r2 - Real(1)));
        report.epsilon1_hat = std::max(report.epsilon1_hat, std::abs(r1 - Real(1)));
    }
    return report;
}

template <typename Real = double>
struct RecoveryReport {
    CVector<Real> x_hat;
    Real rank_ratio = 0;
    /// ||y - B(lift(x_hat))|| / ||y||
    Real feasibility_residual = 0;
    Index sparsity = 0;
    bool has_truth = false;
    bool success = false;
    Real phase_aligned_error = 0;
};

template <typename Real = double>
struct RecoveryOptions {
    Real rank_tol = 1e-3;
    /// Entries with |x_j| above this count toward the sparsity.
    Real sparsity_tol = 1e-3;
    Real metric_tol = 1e-3;
};

/// Extracts x from a solved instance and, when x_true is given, scores it.
/// Homogeneous systems are judged up to global phase.
template <typename Real>
RecoveryReport<Real> makeReport(const QuadraticSystem<Real>& system, const HermitianMatrix<Real>& Z,
                                const CVector<Real>* x_true = nullptr, const RecoveryOptions<Real>& opts = {})
{
    const bool homog = system.homogeneous();
    const SignalEstimate<Real> est = extractSignal(Z, opts.rank_tol, homog);
    RecoveryReport<Real> rep;
    rep.x_hat = est.x_hat;
    rep.rank_ratio = est.rank_ratio;
    const CVector<Real> y = system.observations();
    const Real ynorm = y.norm();
    const Real res = (y - evaluate(system, est.x_hat)).norm();
    rep.feasibility_residual = ynorm > 0 ? res / ynorm : res;
    rep.sparsity = (est.x_hat.cwiseAbs().array() > opts.sparsity_tol).count();
    if (x_true != nullptr) {
        rep.has_truth = true;
        const auto verdict =
            judgeSuccess(est.x_hat, *x_true, opts.metric_tol, homog ? Alignment::GlobalPhase : Alignment::None);
        rep.success = verdict.success;
        rep.phase_aligned_error = verdict.error;
    }
    return rep;
}

}  // namespace qbp

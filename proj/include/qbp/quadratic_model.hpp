#pragma once

// Systems of quadratic equations y_i = a_i + b_i^H x + x^H c_i + x^H Q_i x and
// their lifted form y_i = Tr(Phi_i X) with X = [1; x][1, x^H].

#include <qbp/core.hpp>

#include <utility>
#include <vector>

namespace qbp {

template <typename Real = double>
class QuadraticMeasurement {
public:
    using Scalar = Complex<Real>;

    QuadraticMeasurement(Scalar a, CVector<Real> b, CVector<Real> c, CMatrix<Real> Q, Scalar y)
        : a_(a), b_(std::move(b)), c_(std::move(c)), Q_(std::move(Q)), y_(y)
    {
        const Index n = b_.size();
        requireDims(c_.size() == n, "QuadraticMeasurement: c has wrong length");
        requireDims(Q_.rows() == n && Q_.cols() == n, "QuadraticMeasurement: Q has wrong shape");
        requireFinite(a_, "QuadraticMeasurement.a");
        requireFinite(y_, "QuadraticMeasurement.y");
        requireFinite(b_, "QuadraticMeasurement.b");
        requireFinite(c_, "QuadraticMeasurement.c");
        requireFinite(Q_, "QuadraticMeasurement.Q");
    }

    /// Pure quadratic measurement y = |s^H x|^2, i.e. a = b = c = 0 and Q = s s^H.
    static QuadraticMeasurement intensity(const CVector<Real>& s, Real y)
    {
        const Index n = s.size();
        return QuadraticMeasurement(Scalar(0), CVector<Real>::Zero(n), CVector<Real>::Zero(n),
                                    s * s.adjoint(), Scalar(y));
    }

    /// Inverse of lifted(): split an (n+1) x (n+1) Phi into a, b, c, Q.
    static QuadraticMeasurement fromLifted(const CMatrix<Real>& phi, Scalar y)
    {
        requireDims(phi.rows() == phi.cols() && phi.rows() >= 2, "fromLifted: Phi must be square, size >= 2");
        const Index n = phi.rows() - 1;
        return QuadraticMeasurement(phi(0, 0), phi.block(0, 1, 1, n).adjoint(), phi.block(1, 0, n, 1),
                                    phi.block(1, 1, n, n), y);
    }

    Index dimension() const { return b_.size(); }
    Scalar a() const { return a_; }
    const CVector<Real>& b() const { return b_; }
    const CVector<Real>& c() const { return c_; }
    const CMatrix<Real>& Q() const { return Q_; }
    Scalar y() const { return y_; }

    /// True when the constant and linear terms vanish.
    bool homogeneous() const
    {
        return a_ == Scalar(0) && b_.isZero(0) && c_.isZero(0);
    }

    /// Phi = [a b^H; c Q], (n+1) x (n+1).
    CMatrix<Real> lifted() const
    {
        const Index n = dimension();
        CMatrix<Real> phi(n + 1, n + 1);
        phi(0, 0) = a_;
        phi.block(0, 1, 1, n) = b_.adjoint();
        phi.block(1, 0, n, 1) = c_;
        phi.block(1, 1, n, n) = Q_;
        return phi;
    }

    /// a + b^H x + x^H c + x^H Q x
    Scalar evaluate(const CVector<Real>& x) const
    {
        return a_ + b_.dot(x) + x.dot(c_) + x.dot(Q_ * x);
    }

private:
    Scalar a_;
    CVector<Real> b_;
    CVector<Real> c_;
    CMatrix<Real> Q_;
    Scalar y_;
};

/// Ordered measurements over a common unknown dimension n.
template <typename Real = double>
class QuadraticSystem {
public:
    using Measurement = QuadraticMeasurement<Real>;

    QuadraticSystem(Index n, std::vector<Measurement> measurements)
        : n_(n), measurements_(std::move(measurements))
    {
        requireDims(n_ >= 1, "QuadraticSystem: dimension must be positive");
        requireDims(!measurements_.empty(), "QuadraticSystem: need at least one measurement");
        phis_.reserve(measurements_.size());
        for (const auto& m : measurements_) {
            requireDims(m.dimension() == n_, "QuadraticSystem: measurement dimension mismatch");
            phis_.push_back(m.lifted());
        }
    }

    Index dimension() const { return n_; }
    Index liftedSize() const { return n_ + 1; }
    Index size() const { return static_cast<Index>(measurements_.size()); }

    const std::vector<Measurement>& measurements() const { return measurements_; }
    const Measurement& operator[](Index i) const { return measurements_[static_cast<std::size_t>(i)]; }
    const CMatrix<Real>& phi(Index i) const { return phis_[static_cast<std::size_t>(i)]; }

    CVector<Real> observations() const
    {
        CVector<Real> y(size());
        for (Index i = 0; i < size(); ++i) y(i) = (*this)[i].y();
        return y;
    }

    bool homogeneous() const
    {
        for (const auto& m : measurements_)
            if (!m.homogeneous()) return false;
        return true;
    }

    /// Copy with the observation vector replaced.
    QuadraticSystem withObservations(const CVector<Real>& y) const
    {
        requireDims(y.size() == size(), "withObservations: wrong length");
        std::vector<Measurement> ms;
        ms.reserve(measurements_.size());
        for (Index i = 0; i < size(); ++i) {
            const auto& m = (*this)[i];
            ms.emplace_back(m.a(), m.b(), m.c(), m.Q(), y(i));
        }
        return QuadraticSystem(n_, std::move(ms));
    }

private:
    Index n_;
    std::vector<Measurement> measurements_;
    std::vector<CMatrix<Real>> phis_;
};

template <typename Real>
CVector<Real> evaluate(const QuadraticSystem<Real>& system, const CVector<Real>& x)
{
    requireDims(x.size() == system.dimension(), "evaluate: x has wrong length");
    CVector<Real> y(system.size());
    for (Index i = 0; i < system.size(); ++i) y(i) = system[i].evaluate(x);
    return y;
}

/// [1; x][1, x^H]
template <typename Real>
HermitianMatrix<Real> lift(const CVector<Real>& x)
{
    CVector<Real> v(x.size() + 1);
    v(0) = Complex<Real>(1);
    v.tail(x.size()) = x;
    return HermitianMatrix<Real>(v * v.adjoint());
}

/// Tr(Phi X) without forming the product.
template <typename Real>
Complex<Real> traceProduct(const CMatrix<Real>& phi, const CMatrix<Real>& X)
{
    return phi.transpose().cwiseProduct(X).sum();
}

/// B(X) = {Tr(Phi_i X)}_i
template <typename Real>
CVector<Real> applyB(const QuadraticSystem<Real>& system, const HermitianMatrix<Real>& X)
{
    requireDims(X.size() == system.liftedSize(), "applyB: X has wrong size");
    CVector<Real> out(system.size());
    for (Index i = 0; i < system.size(); ++i) out(i) = traceProduct(system.phi(i), X.matrix());
    return out;
}

/// [B(X); X_00]
template <typename Real>
CVector<Real> applyAugmentedB(const QuadraticSystem<Real>& system, const HermitianMatrix<Real>& X)
{
    CVector<Real> out(system.size() + 1);
    out.head(system.size()) = applyB(system, X);
    out(system.size()) = X(0, 0);
    return out;
}

// ---------------------------------------------------------------------------
// Real isometric parametrization of Hermitian matrices.
//
// realvec(X) = [X_00, ..., X_ss, sqrt2 Re X_01, sqrt2 Im X_01, sqrt2 Re X_02, ...]
// with the off-diagonal pairs in row-major order over i < j. The map is an
// isometry: ||realvec(X)||_2 = ||X||_F.

inline Index realvecLength(Index size) { return size * size; }

template <typename Real>
RVector<Real> realvec(const HermitianMatrix<Real>& X)
{
    const Index s = X.size();
    const Real r2 = std::sqrt(Real(2));
    RVector<Real> v(realvecLength(s));
    for (Index i = 0; i < s; ++i) v(i) = X(i, i).real();
    Index k = s;
    for (Index i = 0; i < s; ++i) {
        for (Index j = i + 1; j < s; ++j) {
            v(k++) = r2 * X(i, j).real();
            v(k++) = r2 * X(i, j).imag();
        }
    }
    return v;
}

template <typename Real, typename Derived>
HermitianMatrix<Real> devec(const Eigen::MatrixBase<Derived>& v, Index size)
{
    requireDims(v.size() == realvecLength(size), "devec: vector has wrong length");
    const Real inv = Real(1) / std::sqrt(Real(2));
    CMatrix<Real> m(size, size);
    for (Index i = 0; i < size; ++i) m(i, i) = Complex<Real>(v(i), 0);
    Index k = size;
    for (Index i = 0; i < size; ++i) {
        for (Index j = i + 1; j < size; ++j) {
            const Complex<Real> z(v(k) * inv, v(k + 1) * inv);
            k += 2;
            m(i, j) = z;
            m(j, i) = std::conj(z);
        }
    }
    return HermitianMatrix<Real>(m);
}

/// Complex coefficients w with Tr(Phi X) = w . realvec(X) for Hermitian X.
template <typename Real>
CVector<Real> traceCoefficients(const CMatrix<Real>& phi)
{
    const Index s = phi.rows();
    const Real inv = Real(1) / std::sqrt(Real(2));
    const Complex<Real> I(0, 1);
    CVector<Real> w(realvecLength(s));
    for (Index i = 0; i < s; ++i) w(i) = phi(i, i);
    Index k = s;
    for (Index i = 0; i < s; ++i) {
        for (Index j = i + 1; j < s; ++j) {
            // Phi_ij X_ji + Phi_ji X_ij with X_ij = (u + i w)/sqrt2
            w(k++) = (phi(i, j) + phi(j, i)) * inv;
            w(k++) = I * (phi(j, i) - phi(i, j)) * inv;
        }
    }
    return w;
}

/// Real constraint system acting on realvec(X).
template <typename Real>
struct MatricizedB {
    RMatrix<Real> B;
    RVector<Real> y;
    /// Source measurement of each row; -1 marks the X_00 row of the augmented form.
    std::vector<Index> source;
    /// Whether each row constrains the imaginary part.
    std::vector<bool> imaginary;

    Index rows() const { return B.rows(); }
};

/// Stacks the real parts of every measurement, then the imaginary parts that
/// carry information. An imaginary row is dropped when its coefficients and
/// Im y both vanish (Hermitian Phi with real y).
template <typename Real>
MatricizedB<Real> matricizeB(const QuadraticSystem<Real>& system)
{
    const Index N = system.size();
    const Index d = realvecLength(system.liftedSize());
    std::vector<CVector<Real>> coeffs;
    coeffs.reserve(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) coeffs.push_back(traceCoefficients(system.phi(i)));

    std::vector<Index> imagRows;
    for (Index i = 0; i < N; ++i) {
        const auto& w = coeffs[static_cast<std::size_t>(i)];
        const Real scale = std::max(Real(1), w.cwiseAbs().maxCoeff());
        const Real tiny = Real(64) * Eigen::NumTraits<Real>::epsilon() * scale;
        const Real imMax = w.imag().cwiseAbs().maxCoeff();
        const Real yIm = std::abs(system[i].y().imag());
        if (imMax > tiny || yIm > tiny) imagRows.push_back(i);
    }

    MatricizedB<Real> out;
    const Index rows = N + static_cast<Index>(imagRows.size());
    out.B.resize(rows, d);
    out.y.resize(rows);
    Index r = 0;
    for (Index i = 0; i < N; ++i, ++r) {
        out.B.row(r) = coeffs[static_cast<std::size_t>(i)].real().transpose();
        out.y(r) = system[i].y().real();
        out.source.push_back(i);
        out.imaginary.push_back(false);
    }
    for (Index i : imagRows) {
        out.B.row(r) = coeffs[static_cast<std::size_t>(i)].imag().transpose();
        out.y(r) = system[i].y().imag();
        out.source.push_back(i);
        out.imaginary.push_back(true);
        ++r;
    }
    return out;
}

/// matricizeB plus one row enforcing X_00 = 1.
template <typename Real>
MatricizedB<Real> augmentB(const QuadraticSystem<Real>& system)
{
    MatricizedB<Real> base = matricizeB(system);
    const Index rows = base.rows();
    MatricizedB<Real> out;
    out.B.resize(rows + 1, base.B.cols());
    out.B.topRows(rows) = base.B;
    out.B.row(rows).setZero();
    out.B(rows, 0) = Real(1);
    out.y.resize(rows + 1);
    out.y.head(rows) = base.y;
    out.y(rows) = Real(1);
    out.source = std::move(base.source);
    out.source.push_back(-1);
    out.imaginary = std::move(base.imaginary);
    out.imaginary.push_back(false);
    return out;
}

/// Complex matrix B with B vec(X) = B(X), one column per entry of X
/// (column-major vec). Row i is vec(Phi_i^T).
template <typename Real>
CMatrix<Real> complexMatricizeB(const QuadraticSystem<Real>& system)
{
    const Index s = system.liftedSize();
    CMatrix<Real> out(system.size(), s * s);
    for (Index i = 0; i < system.size(); ++i) {
        const CMatrix<Real> phiT = system.phi(i).transpose();
        out.row(i) = Eigen::Map<const CVector<Real>>(phiT.data(), s * s).transpose();
    }
    return out;
}

}  // namespace qbp

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qbp {

template <typename Real>
using Complex = std::complex<Real>;

template <typename Real>
using CMatrix = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using CVector = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;

template <typename Real>
using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Raised when operand shapes disagree with the system dimension.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical kernel cannot produce a usable result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a NaN or Inf would enter a measurement or matrix.
class NonFiniteError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// splitmix64 mix of (master, index); used to give every trial or sample an
/// independent, reproducible stream.
inline std::uint64_t deriveSeed(std::uint64_t master, std::uint64_t index)
{
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline void requireDims(bool ok, const std::string& what)
{
    if (!ok) throw DimensionError(what);
}

template <typename Derived>
bool allFinite(const Eigen::DenseBase<Derived>& m)
{
    using Scalar = typename Derived::Scalar;
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            const Scalar& v = m(i, j);
            if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
            } else {
                if (!std::isfinite(v)) return false;
            }
        }
    }
    return true;
}

template <typename Derived>
void requireFinite(const Eigen::DenseBase<Derived>& m, const std::string& what)
{
    if (!allFinite(m)) throw NonFiniteError(what + ": non-finite entry");
}

template <typename Real>
void requireFinite(const Complex<Real>& v, const std::string& what)
{
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw NonFiniteError(what + ": non-finite value");
}

/// Dense complex square matrix with enforced conjugate symmetry.
///
/// Every constructor symmetrizes its input as (M + M^H)/2 and clears the
/// imaginary part of the diagonal, so downstream eigendecompositions always
/// see an exactly Hermitian operand.
template <typename Real = double>
class HermitianMatrix {
public:
    using Scalar = Complex<Real>;
    using Matrix = CMatrix<Real>;

    HermitianMatrix() = default;

    explicit HermitianMatrix(Index size) : m_(Matrix::Zero(size, size)) {}

    template <typename Derived>
    explicit HermitianMatrix(const Eigen::MatrixBase<Derived>& m)
    {
        requireDims(m.rows() == m.cols(), "HermitianMatrix: matrix must be square");
        m_ = (m + m.adjoint()) * Real(0.5);
        for (Index i = 0; i < m_.rows(); ++i) m_(i, i) = Scalar(m_(i, i).real(), Real(0));
        requireFinite(m_, "HermitianMatrix");
    }

    static HermitianMatrix identity(Index size)
    {
        return HermitianMatrix(Matrix::Identity(size, size));
    }

    static HermitianMatrix zero(Index size) { return HermitianMatrix(size); }

    Index size() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    Scalar operator()(Index i, Index j) const { return m_(i, j); }

    Real trace() const { return m_.diagonal().real().sum(); }
    Real frobeniusNorm() const { return m_.norm(); }

    /// Entrywise l1 norm: sum of complex magnitudes.
    Real l1Norm() const { return m_.cwiseAbs().sum(); }

    /// Number of entries whose magnitude exceeds `tol`.
    Index cardinality(Real tol) const { return (m_.cwiseAbs().array() > tol).count(); }

private:
    Matrix m_;
};

template <typename Real>
HermitianMatrix<Real> operator+(const HermitianMatrix<Real>& a, const HermitianMatrix<Real>& b)
{
    return HermitianMatrix<Real>(a.matrix() + b.matrix());
}

template <typename Real>
HermitianMatrix<Real> operator-(const HermitianMatrix<Real>& a, const HermitianMatrix<Real>& b)
{
    return HermitianMatrix<Real>(a.matrix() - b.matrix());
}

template <typename Real>
HermitianMatrix<Real> operator*(Real s, const HermitianMatrix<Real>& a)
{
    return HermitianMatrix<Real>(a.matrix() * s);
}

/// Largest |M_ij - conj(M_ji)|; zero for a valid HermitianMatrix.
template <typename Derived>
auto hermitianDefect(const Eigen::MatrixBase<Derived>& m)
{
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace qbp

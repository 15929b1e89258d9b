#pragma once

#include <qbp/quadratic_model.hpp>

#include <cstdint>
#include <string>

namespace qbp::harness {

using System = QuadraticSystem<double>;
using Vec = CVector<double>;
using Mat = CMatrix<double>;

enum class Ensemble { GeneralQuadratic, PurePhase, FourierSparseImage, HolePattern };
enum class SignalKind { BinarySupport, GaussianSupport };

Ensemble parseEnsemble(const std::string& name);
std::string toString(Ensemble e);
SignalKind parseSignal(const std::string& name);
std::string toString(SignalKind s);

struct Instance {
    System system;
    Vec x_true;
    Ensemble ensemble;
};

/// a_i, b_i, Q_i i.i.d. standard normal, c_i = 0; x_true has k nonzeros on a
/// uniformly random support (ones, or standard normal values).
Instance generateGeneralQuadratic(int n, int N, int k, SignalKind signal, std::uint64_t seed);

/// y_i = |a_i^H x|^2 with a_i complex Gaussian and x_true complex k-sparse.
Instance generatePurePhase(int n, int N, int k, std::uint64_t seed);

/// Unitary 2-D inverse DFT on a side x side grid: image = F x, stacked row-major.
Mat fourierBasis(int side);

/// Intensity measurements of the image F x through a complex Gaussian mixing
/// matrix R: y_i = |(R F x)_i|^2.
System fourierSensingSystem(int side, const Vec& coefficients, int N, std::uint64_t seed);

struct FourierInstance {
    Instance instance;
    /// F x_true, row-major side x side.
    Vec image;
    int side;
};

/// k-sparse Fourier coefficient vector, its image, and intensity measurements.
FourierInstance generateFourierSparseImage(int side, int k, int N, std::uint64_t seed);

/// Synthetic diffraction instance: binary x over `positions` candidate hole
/// sites on a line aperture, far-field intensity samples at random angles.
Instance generateHolePattern(int positions, int k, int N, std::uint64_t seed);

Instance generate(Ensemble ensemble, int n, int N, int k, SignalKind signal, std::uint64_t seed);

/// Piecewise-constant ellipse phantom on a side x side grid, row-major.
Eigen::VectorXd sheppLoganPhantom(int side);

}  // namespace qbp::harness

#include <qbp/harness/generators.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace qbp::harness {

namespace {

using Cx = std::complex<double>;

void checkSparsity(int n, int N, int k)
{
    if (n < 1) throw std::invalid_argument("generator: n must be >= 1");
    if (N < 1) throw std::invalid_argument("generator: N must be >= 1");
    if (k < 0 || k > n) throw std::invalid_argument("generator: need 0 <= k <= n");
}

std::vector<int> randomSupport(int n, int k, std::mt19937_64& rng)
{
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

Cx complexGaussian(std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    const double re = g(rng);
    const double im = g(rng);
    return {re, im};
}

System intensitySystem(const Mat& rows, const Vec& x)
{
    // rows holds a_i^H, so y_i = |rows_i x|^2 and Q_i = a_i a_i^H.
    std::vector<QuadraticMeasurement<double>> ms;
    ms.reserve(static_cast<std::size_t>(rows.rows()));
    for (Index i = 0; i < rows.rows(); ++i) {
        const Vec a = rows.row(i).adjoint();
        const double y = std::norm(Cx((rows.row(i) * x)(0)));
        ms.push_back(QuadraticMeasurement<double>::intensity(a, y));
    }
    return System(rows.cols(), std::move(ms));
}

}  // namespace

Ensemble parseEnsemble(const std::string& name)
{
    if (name == "general" || name == "GeneralQuadratic") return Ensemble::GeneralQuadratic;
    if (name == "phase" || name == "PurePhase") return Ensemble::PurePhase;
    if (name == "fourier" || name == "FourierSparseImage") return Ensemble::FourierSparseImage;
    if (name == "holes" || name == "HolePattern") return Ensemble::HolePattern;
    throw std::invalid_argument("unknown ensemble '" + name + "'");
}

std::string toString(Ensemble e)
{
    switch (e) {
    case Ensemble::GeneralQuadratic: return "general";
    case Ensemble::PurePhase: return "phase";
    case Ensemble::FourierSparseImage: return "fourier";
    case Ensemble::HolePattern: return "holes";
    }
    return "general";
}

SignalKind parseSignal(const std::string& name)
{
    if (name == "binary" || name == "BinarySupport") return SignalKind::BinarySupport;
    if (name == "gaussian" || name == "GaussianSupport") return SignalKind::GaussianSupport;
    throw std::invalid_argument("unknown signal kind '" + name + "'");
}

std::string toString(SignalKind s) { return s == SignalKind::BinarySupport ? "binary" : "gaussian"; }

Instance generateGeneralQuadratic(int n, int N, int k, SignalKind signal, std::uint64_t seed)
{
    checkSparsity(n, N, k);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);

    Vec x = Vec::Zero(n);
    for (int j : randomSupport(n, k, rng)) x(j) = signal == SignalKind::BinarySupport ? 1.0 : g(rng);

    std::vector<QuadraticMeasurement<double>> ms;
    ms.reserve(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        const Cx a(g(rng), 0.0);
        Vec b(n);
        for (int j = 0; j < n; ++j) b(j) = g(rng);
        Mat Q(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) Q(r, c) = g(rng);
        QuadraticMeasurement<double> probe(a, b, Vec::Zero(n), Q, Cx(0));
        const Cx y = probe.evaluate(x);
        ms.emplace_back(a, std::move(b), Vec::Zero(n), std::move(Q), y);
    }
    return {System(n, std::move(ms)), x, Ensemble::GeneralQuadratic};
}

Instance generatePurePhase(int n, int N, int k, std::uint64_t seed)
{
    checkSparsity(n, N, k);
    std::mt19937_64 rng(seed);
    Vec x = Vec::Zero(n);
    for (int j : randomSupport(n, k, rng)) x(j) = complexGaussian(rng);
    Mat rows(N, n);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < n; ++j) rows(i, j) = complexGaussian(rng);
    return {intensitySystem(rows, x), x, Ensemble::PurePhase};
}

Mat fourierBasis(int side)
{
    if (side < 1) throw std::invalid_argument("fourierBasis: side must be >= 1");
    const int n = side * side;
    Mat F(n, n);
    const double w = 2.0 * std::numbers::pi / side;
    for (int p = 0; p < side; ++p)
        for (int q = 0; q < side; ++q)
            for (int u = 0; u < side; ++u)
                for (int v = 0; v < side; ++v)
                    F(p * side + q, u * side + v) = std::polar(1.0 / side, w * (p * u + q * v));
    return F;
}

System fourierSensingSystem(int side, const Vec& coefficients, int N, std::uint64_t seed)
{
    const int n = side * side;
    if (coefficients.size() != n) throw std::invalid_argument("fourierSensingSystem: need side^2 coefficients");
    if (N < 1) throw std::invalid_argument("fourierSensingSystem: N must be >= 1");
    std::mt19937_64 rng(seed);
    Mat R(N, n);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = complexGaussian(rng);
    return intensitySystem(R * fourierBasis(side), coefficients);
}

FourierInstance generateFourierSparseImage(int side, int k, int N, std::uint64_t seed)
{
    if (side < 1) throw std::invalid_argument("generateFourierSparseImage: side must be >= 1");
    const int n = side * side;
    checkSparsity(n, N, k);
    std::mt19937_64 rng(seed);
    Vec x = Vec::Zero(n);
    for (int j : randomSupport(n, k, rng)) x(j) = complexGaussian(rng);
    System sys = fourierSensingSystem(side, x, N, deriveSeed(seed, 1));
    Vec image = fourierBasis(side) * x;
    return {Instance{std::move(sys), x, Ensemble::FourierSparseImage}, std::move(image), side};
}

Instance generateHolePattern(int positions, int k, int N, std::uint64_t seed)
{
    checkSparsity(positions, N, k);
    std::mt19937_64 rng(seed);
    Vec x = Vec::Zero(positions);
    for (int j : randomSupport(positions, k, rng)) x(j) = 1.0;
    // Far-field phase of site j at spatial frequency f_i; sites spaced 1 apart.
    std::uniform_real_distribution<double> freq(-0.5, 0.5);
    Mat rows(N, positions);
    const double norm = 1.0 / std::sqrt(static_cast<double>(positions));
    for (int i = 0; i < N; ++i) {
        const double f = freq(rng);
        for (int j = 0; j < positions; ++j) rows(i, j) = std::polar(norm, 2.0 * std::numbers::pi * f * j);
    }
    return {intensitySystem(rows, x), x, Ensemble::HolePattern};
}

Instance generate(Ensemble ensemble, int n, int N, int k, SignalKind signal, std::uint64_t seed)
{
    switch (ensemble) {
    case Ensemble::GeneralQuadratic: return generateGeneralQuadratic(n, N, k, signal, seed);
    case Ensemble::PurePhase: return generatePurePhase(n, N, k, seed);
    case Ensemble::FourierSparseImage: {
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
        if (side * side != n) throw std::invalid_argument("fourier ensemble needs n = side^2");
        return generateFourierSparseImage(side, k, N, seed).instance;
    }
    case Ensemble::HolePattern: return generateHolePattern(n, k, N, seed);
    }
    throw std::invalid_argument("unknown ensemble");
}

Eigen::VectorXd sheppLoganPhantom(int side)
{
    if (side < 1) throw std::invalid_argument("sheppLoganPhantom: side must be >= 1");
    struct Ellipse {
        double value, a, b, x0, y0, phiDeg;
    };
    static constexpr Ellipse ellipses[] = {
        {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},       {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
        {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},   {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
        {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},      {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
        {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},    {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
        {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},  {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
    };
    Eigen::VectorXd img = Eigen::VectorXd::Zero(side * side);
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const double px = -1.0 + (2.0 * c + 1.0) / side;
            const double py = 1.0 - (2.0 * r + 1.0) / side;
            double v = 0.0;
            for (const auto& e : ellipses) {
                const double t = e.phiDeg * std::numbers::pi / 180.0;
                const double dx = px - e.x0;
                const double dy = py - e.y0;
                const double u = (dx * std::cos(t) + dy * std::sin(t)) / e.a;
                const double w = (-dx * std::sin(t) + dy * std::cos(t)) / e.b;
                if (u * u + w * w <= 1.0) v += e.value;
            }
            img(r * side + c) = v;
        }
    }
    return img;
}

}  // namespace qbp::harness

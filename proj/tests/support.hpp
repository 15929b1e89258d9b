#pragma once

#include <qbp/qbp.hpp>

#include <random>
#include <vector>

namespace qbp::testing {

using Cx = std::complex<double>;
using Vec = CVector<double>;
using Mat = CMatrix<double>;
using System = QuadraticSystem<double>;

inline Cx cgauss(std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    const double re = g(rng);
    return {re, g(rng)};
}

inline Vec randomVec(Index n, std::mt19937_64& rng, bool complex = true)
{
    std::normal_distribution<double> g;
    Vec v(n);
    for (Index i = 0; i < n; ++i) v(i) = complex ? cgauss(rng) : Cx(g(rng), 0);
    return v;
}

inline Mat randomMat(Index r, Index c, std::mt19937_64& rng, bool complex = true)
{
    std::normal_distribution<double> g;
    Mat m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = complex ? cgauss(rng) : Cx(g(rng), 0);
    return m;
}

inline HermitianMatrix<double> randomHermitian(Index s, std::mt19937_64& rng)
{
    return HermitianMatrix<double>(randomMat(s, s, rng));
}

/// Fully generic measurements: independent a, b, c, Q, with y from x.
inline System randomSystem(Index n, Index N, std::mt19937_64& rng, const Vec& x, bool complex = true)
{
    std::vector<QuadraticMeasurement<double>> ms;
    for (Index i = 0; i < N; ++i) {
        const Cx a = complex ? cgauss(rng) : Cx(std::normal_distribution<double>{}(rng), 0);
        QuadraticMeasurement<double> m(a, randomVec(n, rng, complex), randomVec(n, rng, complex),
                                       randomMat(n, n, rng, complex), Cx(0));
        ms.emplace_back(m.a(), m.b(), m.c(), m.Q(), m.evaluate(x));
    }
    return System(n, std::move(ms));
}

inline Vec sparseVec(Index n, Index k, std::mt19937_64& rng, bool complex = true)
{
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    Vec x = Vec::Zero(n);
    for (Index i = 0; i < k; ++i) {
        Cx v = complex ? cgauss(rng) : Cx(std::normal_distribution<double>{}(rng), 0);
        if (std::abs(v) < 0.2) v = v / std::max(std::abs(v), 1e-12) * 0.2;
        x(idx[static_cast<std::size_t>(i)]) = v;
    }
    return x;
}

}  // namespace qbp::testing

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include <qbp/harness/generators.hpp>

using namespace qbp;
using namespace qbp::testing;

namespace {

/// Nearest PSD matrix via the polar factor: (M + |M|)/2 with |M| = V S V^H
/// from an SVD, independent of the eigensolver used by projectPSD.
Mat nearestPSDOracle(const Mat& M)
{
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat absM = svd.matrixV() * svd.singularValues().cast<Cx>().asDiagonal() * svd.matrixV().adjoint();
    return (M + absM) / 2.0;
}

/// Least-norm correction through the normal equations of the augmented system.
RVector<double> affineOracle(const System& sys, const RVector<double>& v)
{
    const auto ab = augmentB(sys);
    const RMatrix<double> G = ab.B * ab.B.transpose();
    const RVector<double> lam = G.ldlt().solve(ab.B * v - ab.y);
    return v - ab.B.transpose() * lam;
}

System intensitySystem(const std::vector<Vec>& rows, const Vec& x)
{
    std::vector<QuadraticMeasurement<double>> ms;
    for (const auto& a : rows) ms.push_back(QuadraticMeasurement<double>::intensity(a, std::norm(a.dot(x))));
    return System(x.size(), ms);
}

System hermitianSystem(const std::vector<Mat>& phis, const HermitianMatrix<double>& X)
{
    std::vector<QuadraticMeasurement<double>> ms;
    for (const auto& p : phis) ms.push_back(QuadraticMeasurement<double>::fromLifted(p, traceProduct(p, X.matrix())));
    return System(phis.front().rows() - 1, ms);
}

double minEig(const HermitianMatrix<double>& M) { return detail::minEigenvalue(M); }

}  // namespace

TEST_CASE("soft threshold examples")
{
    CHECK(std::abs(softThreshold(Cx(3, 4), 1.0) - Cx(2.4, 3.2)) < 1e-15);
    CHECK(softThreshold(Cx(1, 0), 2.0) == Cx(0));
    CHECK(softThreshold(Cx(2, 0), 2.0) == Cx(0));
    std::mt19937_64 rng(1);
    for (int t = 0; t < 10; ++t) {
        const Cx z = cgauss(rng);
        CHECK(softThreshold(z, 0.0) == z);
    }
}

TEST_CASE("projectPSD examples")
{
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = -1;
    Mat want = Mat::Zero(2, 2);
    want(0, 0) = 2;
    CHECK((projectPSD(HermitianMatrix<double>(d)).matrix() - want).norm() < 1e-14);

    std::mt19937_64 rng(2);
    const Mat G = randomMat(5, 5, rng);
    const HermitianMatrix<double> P(G * G.adjoint());
    CHECK((projectPSD(P).matrix() - P.matrix()).norm() < 1e-10);
}

TEST_CASE("projectPSD matches the polar-factor oracle")
{
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const auto M = randomHermitian(5, rng);
        const auto P = projectPSD(M);
        CHECK((P.matrix() - nearestPSDOracle(M.matrix())).norm() < 1e-10);
        CHECK(minEig(P) >= -1e-12);
        // No PSD competitor is closer.
        for (int c = 0; c < 5; ++c) {
            const Mat G = randomMat(5, 2, rng);
            const Mat Q = P.matrix() + 0.1 * G * G.adjoint();
            CHECK((M.matrix() - P.matrix()).norm() <= (M.matrix() - Q).norm() + 1e-12);
        }
    }
}

TEST_CASE("projections are idempotent and nonexpansive")
{
    std::mt19937_64 rng(4);
    const Vec x0 = randomVec(3, rng);
    const System sys = randomSystem(3, 5, rng, x0);
    const AffineProjector<double> proj(sys);
    REQUIRE(proj.feasible());
    for (int t = 0; t < 20; ++t) {
        const auto A = randomHermitian(4, rng);
        const auto B = randomHermitian(4, rng);
        const auto pa = projectAffine(A, sys, proj);
        const auto pb = projectAffine(B, sys, proj);
        CHECK((projectAffine(pa, sys, proj).matrix() - pa.matrix()).norm() < 1e-10);
        CHECK((pa.matrix() - pb.matrix()).norm() <= (A.matrix() - B.matrix()).norm() + 1e-12);
        const auto qa = projectPSD(A);
        CHECK((projectPSD(qa).matrix() - qa.matrix()).norm() < 1e-10);
        CHECK((qa.matrix() - projectPSD(B).matrix()).norm() <= (A.matrix() - B.matrix()).norm() + 1e-12);
    }
}

TEST_CASE("projectAffine agrees with the normal-equation oracle and is feasible")
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        const System sys = randomSystem(3, 4, rng, randomVec(3, rng));
        const AffineProjector<double> proj(sys);
        const auto M = randomHermitian(4, rng);
        const auto P = projectAffine(M, sys, proj);
        CHECK((realvec(P) - affineOracle(sys, realvec(M))).norm() < 1e-9);
        const Vec r = applyB(sys, P) - sys.observations();
        CHECK(r.cwiseAbs().maxCoeff() < 1e-8 * (1 + sys.observations().cwiseAbs().maxCoeff()));
        CHECK(std::abs(P(0, 0) - Cx(1)) < 1e-10);
    }
}

TEST_CASE("projectAffine leaves a feasible point unchanged")
{
    std::mt19937_64 rng(6);
    const Vec x = randomVec(3, rng);
    const System sys = randomSystem(3, 5, rng, x);
    const AffineProjector<double> proj(sys);
    const auto L = lift(x);
    CHECK((projectAffine(L, sys, proj).matrix() - L.matrix()).norm() < 1e-10);
}

TEST_CASE("projectAffine with only X00 = 1")
{
    Mat e0 = Mat::Zero(2, 2);
    e0(0, 0) = 1;
    const System sys(1, {QuadraticMeasurement<double>::fromLifted(e0, 1.0)});
    const AffineProjector<double> proj(sys);
    const auto P = projectAffine(HermitianMatrix<double>(2), sys, proj);
    CHECK((P.matrix() - e0).norm() < 1e-14);
}

TEST_CASE("contradictory constraints are reported, not solved")
{
    const Mat phi = Mat::Identity(2, 2);
    const System sys(1, {QuadraticMeasurement<double>::fromLifted(phi, 2.0),
                         QuadraticMeasurement<double>::fromLifted(phi, 5.0)});
    const AffineProjector<double> proj(sys);
    CHECK_FALSE(proj.feasible());
    CHECK_THROWS_AS(projectAffine(HermitianMatrix<double>(2), sys, proj), NumericalError);
    const auto res = solve(sys, SolverConfig<double>{});
    CHECK_MESSAGE((res.termination == Termination::InfeasibleProjection), toString(res.termination));
    CHECK(res.setup_residual > 1);
    CHECK(res.iterations == 0);
}

TEST_CASE("updateZ examples")
{
    const auto zero = HermitianMatrix<double>(2);
    CHECK(updateZ(zero, zero, zero, zero, 1.0, 5.0).frobeniusNorm() == 0.0);

    std::mt19937_64 rng(7);
    const auto X1 = randomHermitian(3, rng), X2 = randomHermitian(3, rng);
    const auto Y1 = randomHermitian(3, rng), Y2 = randomHermitian(3, rng);
    const double rho = 1.7;
    const Mat want = (X1.matrix() + X2.matrix()) / 2.0 + (Y1.matrix() + Y2.matrix()) / (2.0 * rho);
    CHECK((updateZ(X1, X2, Y1, Y2, rho, 0.0).matrix() - want).norm() < 1e-14);

    Mat c = Mat::Zero(2, 2);
    c(0, 0) = 3;
    c(1, 1) = 1;
    // rho = 1, lambda = 4 gives threshold 2.
    const auto Z = updateZ(HermitianMatrix<double>(c), HermitianMatrix<double>(c), zero, zero, 1.0, 4.0);
    Mat z = Mat::Zero(2, 2);
    z(0, 0) = 1;
    CHECK((Z.matrix() - z).norm() < 1e-15);
}

TEST_CASE("updateRho examples")
{
    SolverConfig<double> cfg;
    CHECK(updateRho(1.0, 10.0, 0.5, cfg) == 2.0);
    CHECK(updateRho(1.0, 3.0, 3.0, cfg) == 1.0);
    CHECK(updateRho(1.0, 0.5, 10.0, cfg) == 0.5);
    CHECK(updateRho(cfg.rho_max, 10.0, 0.5, cfg) == cfg.rho_max);
    CHECK(updateRho(cfg.rho_min, 0.5, 10.0, cfg) == cfg.rho_min);
}

TEST_CASE("config validation")
{
    SolverConfig<double> cfg;
    cfg.rho0 = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.lambda = -1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.mode = SolverMode::QBPD;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.epsilon_noise = 0.1;
    CHECK_NOTHROW(cfg.validate());
    CHECK(SolverConfig<double>{}.eps_abs == 1e-3);
    CHECK(SolverConfig<double>{}.mu == 10);
    CHECK(SolverConfig<double>{}.max_iters == 10000);
}

TEST_CASE("fully determined system recovers the planted PSD matrix")
{
    std::mt19937_64 rng(8);
    const Index s = 3;
    const Mat G = randomMat(s, 2, rng);
    Mat Xs = G * G.adjoint();
    Xs /= Xs(0, 0).real();
    const HermitianMatrix<double> Xstar(Xs);
    std::vector<Mat> phis;
    for (Index i = 0; i < s * s; ++i) phis.push_back(randomHermitian(s, rng).matrix());
    const System sys = hermitianSystem(phis, Xstar);
    SolverConfig<double> cfg;
    cfg.lambda = 0;
    cfg.eps_abs = cfg.eps_rel = 1e-8;
    const auto res = solve(sys, cfg);
    CHECK_MESSAGE((res.termination == Termination::Converged), toString(res.termination));
    CHECK((res.Z_final.matrix() - Xstar.matrix()).norm() < 1e-3);
}

TEST_CASE("scalar intensity: x^2 = 4")
{
    Vec one(1);
    one << 1;
    const System sys = intensitySystem({one}, Vec::Constant(1, 2.0));
    SolverConfig<double> cfg;
    cfg.lambda = 0;
    cfg.eps_abs = cfg.eps_rel = 1e-8;
    const auto res = solve(sys, cfg);
    CHECK_MESSAGE((res.termination == Termination::Converged), toString(res.termination));
    CHECK(res.Z_final(0, 0).real() == doctest::Approx(1).epsilon(1e-6));
    CHECK(res.Z_final(1, 1).real() == doctest::Approx(4).epsilon(1e-6));
    CHECK(minEig(res.Z_final) >= -1e-6);
    // The cross term is free within the PSD bound; the magnitude is pinned.
    CHECK(std::abs(res.Z_final(0, 1)) <= 2 + 1e-6);
    const auto est = extractSignal(res.Z_final, 1e-3, true);
    CHECK(std::abs(est.x_hat(0)) == doctest::Approx(2).epsilon(1e-6));
}

TEST_CASE("iterate invariants hold every iteration")
{
    std::mt19937_64 rng(9);
    const Vec x = sparseVec(6, 2, rng);
    const System sys = randomSystem(6, 10, rng, x);
    SolverConfig<double> cfg;
    cfg.lambda = 5;
    cfg.check_invariants = true;
    cfg.max_iters = 400;
    SolverResult<double> res;
    CHECK_NOTHROW(res = solve(sys, cfg));
    CHECK(res.residual_trace.size() == static_cast<std::size_t>(res.iterations));
    CHECK(hermitianDefect(res.Z_final.matrix()) <= 1e-12);
    CHECK(minEig(res.X2_final) >= -1e-8);
    const Vec r = applyB(sys, res.X1_final) - sys.observations();
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-8 * (1 + sys.observations().cwiseAbs().maxCoeff()));
}

TEST_CASE("converged solves satisfy the termination guarantees")
{
    for (int t = 0; t < 5; ++t) {
        const auto inst = harness::generateGeneralQuadratic(10, 14, 2, harness::SignalKind::BinarySupport, 100 + t);
        SolverConfig<double> cfg;
        const auto res = solve(inst.system, cfg);
        if (res.termination != Termination::Converged) continue;
        const auto& last = res.residual_trace.back();
        const double n = 10;
        const double xbar = ((res.X1_final.matrix() + res.X2_final.matrix()) / 2.0).norm();
        const double tol = n * cfg.eps_abs + cfg.eps_rel * std::max(xbar, res.Z_final.frobeniusNorm());
        CHECK(last.primal <= tol);
        CHECK((res.X1_final.matrix() - res.Z_final.matrix()).norm() <= tol);
        CHECK((res.X2_final.matrix() - res.Z_final.matrix()).norm() <= tol);
        CHECK(minEig(res.Z_final) >= -1e-3 * n);
        CHECK(std::sqrt(res.data_residual) <= 10 * tol);
    }
}

TEST_CASE("objective settles over the last tenth of a converged run")
{
    // At the default 1e-3 tolerances the stopping rule can fire mid-swing (seed 103).
    for (int t = 0; t < 5; ++t) {
        const auto inst = harness::generateGeneralQuadratic(10, 14, 2, harness::SignalKind::BinarySupport, 100 + t);
        SolverConfig<double> cfg;
        cfg.eps_abs = cfg.eps_rel = 1e-6;
        const auto res = solve(inst.system, cfg);
        if (res.termination != Termination::Converged) continue;
        const std::size_t from = res.residual_trace.size() * 9 / 10;
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = from; i < res.residual_trace.size(); ++i) {
            lo = std::min(lo, res.residual_trace[i].objective);
            hi = std::max(hi, res.residual_trace[i].objective);
        }
        CHECK(hi - lo <= 0.01 * std::abs(res.residual_trace.back().objective));
    }
}

TEST_CASE("n=20, N=25 benchmark regime converges within the iteration budget")
{
    int converged = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        const auto inst =
            harness::generateGeneralQuadratic(20, 25, 3, harness::SignalKind::BinarySupport, deriveSeed(11, t));
        converged += solve(inst.system, SolverConfig<double>{}).termination == Termination::Converged;
    }
    CHECK(converged >= trials * 9 / 10);
}

TEST_CASE("solves are deterministic")
{
    const auto inst = harness::generateGeneralQuadratic(8, 12, 2, harness::SignalKind::BinarySupport, 5);
    const auto a = solve(inst.system, SolverConfig<double>{});
    const auto b = solve(inst.system, SolverConfig<double>{});
    CHECK(a.iterations == b.iterations);
    CHECK((a.Z_final.matrix() - b.Z_final.matrix()).norm() == 0.0);
}

TEST_CASE("real domain keeps every iterate real")
{
    const auto inst = harness::generateGeneralQuadratic(6, 10, 2, harness::SignalKind::BinarySupport, 6);
    SolverConfig<double> cfg;
    cfg.real_domain = true;
    cfg.max_iters = 300;
    const auto res = solve(inst.system, cfg);
    CHECK(res.Z_final.matrix().imag().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random start reaches the same optimum on a determined system")
{
    std::mt19937_64 rng(12);
    const Index s = 3;
    const Mat G = randomMat(s, 1, rng);
    Mat Xs = G * G.adjoint();
    Xs /= Xs(0, 0).real();
    std::vector<Mat> phis;
    for (Index i = 0; i < s * s; ++i) phis.push_back(randomHermitian(s, rng).matrix());
    const System sys = hermitianSystem(phis, HermitianMatrix<double>(Xs));
    SolverConfig<double> cfg;
    cfg.lambda = 0;
    cfg.eps_abs = cfg.eps_rel = 1e-8;
    cfg.init_seed = 99;
    const auto res = solve(sys, cfg);
    CHECK((res.Z_final.matrix() - Xs).norm() < 1e-3);
}

TEST_CASE("denoising: loose budget gives the minimal-trace point")
{
    std::mt19937_64 rng(13);
    const std::vector<Vec> rows{randomVec(2, rng), randomVec(2, rng), randomVec(2, rng)};
    const System sys = intensitySystem(rows, randomVec(2, rng));
    SolverConfig<double> cfg;
    cfg.mode = SolverMode::QBPD;
    cfg.lambda = 0;
    cfg.epsilon_noise = 2 * sys.observations().squaredNorm();
    const auto res = solve(sys, cfg);
    CHECK_MESSAGE((res.termination == Termination::Converged), toString(res.termination));
    Mat e0 = Mat::Zero(3, 3);
    e0(0, 0) = 1;
    CHECK((res.Z_final.matrix() - e0).norm() < 1e-2);
    CHECK(res.data_residual <= cfg.epsilon_noise);
}

TEST_CASE("denoising with a small budget matches the exact solve")
{
    const auto inst = harness::generateGeneralQuadratic(6, 12, 2, harness::SignalKind::BinarySupport, 21);
    SolverConfig<double> exact;
    exact.lambda = 1;
    exact.eps_abs = exact.eps_rel = 1e-6;
    SolverConfig<double> noisy = exact;
    noisy.mode = SolverMode::QBPD;
    noisy.epsilon_noise = 1e-6;
    const auto a = solve(inst.system, exact);
    const auto b = solve(inst.system, noisy);
    CHECK_MESSAGE((b.termination == Termination::Converged), toString(b.termination));
    CHECK(b.data_residual <= noisy.epsilon_noise);
    CHECK((a.Z_final.matrix() - b.Z_final.matrix()).norm() < 1e-2);
}

TEST_CASE("denoising scalar: y = 4.1, budget 0.02")
{
    Vec one(1);
    one << 1;
    const System sys(1, {QuadraticMeasurement<double>::intensity(one, 4.1)});
    SolverConfig<double> cfg;
    cfg.mode = SolverMode::QBPD;
    cfg.lambda = 0;
    cfg.epsilon_noise = 0.02;
    const auto res = solve(sys, cfg);
    CHECK(res.data_residual <= 0.02 * (1 + 1e-6));
    const double x2 = res.Z_final(1, 1).real();
    CHECK(x2 >= 3.9);
    CHECK(x2 <= 4.1);
}

TEST_CASE("denoising reports an unattainable budget")
{
    const Mat phi = Mat::Identity(2, 2);
    const System sys(1, {QuadraticMeasurement<double>::fromLifted(phi, 2.0),
                         QuadraticMeasurement<double>::fromLifted(phi, 6.0)});
    SolverConfig<double> cfg;
    cfg.mode = SolverMode::QBPD;
    cfg.lambda = 0;
    cfg.epsilon_noise = 1.0;  // best achievable is 8
    cfg.max_iters = 2000;
    const auto res = solve(sys, cfg);
    CHECK_MESSAGE((res.termination == Termination::ConstraintUnattained), toString(res.termination));
    CHECK(res.data_residual > 1.0);
}

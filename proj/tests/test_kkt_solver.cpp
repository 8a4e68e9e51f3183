#include "doctest.h"

#include "mdr/bounds.hpp"
#include "mdr/kkt_solver.hpp"
#include "mdr/scalar_solver.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace mdr;
using testutil::s1;

namespace {

MDInstance flagship() {
    return MDInstance{s1(1.0), {s1(0.5), s1(0.5)}, s1(0.2)};
}

// Frobenius inner product.
double dot(const SymMatrix& a, const SymMatrix& b) {
    return (a.mat().array() * b.mat().array()).sum();
}

} // namespace

TEST_CASE("objective and gradient reference values") {
    const SymMatrix kw0 = s1(0.25);
    const std::vector<SymMatrix> kw = {s1(1.0), s1(1.0)};
    CHECK(kkt::objective_F(s1(0.0), kw0, kw) ==
          doctest::Approx(std::log(0.25)).epsilon(1e-14));
    CHECK(kkt::objective_F(s1(0.5), kw0, kw) ==
          doctest::Approx(std::log(1.0 / 3)).epsilon(1e-14));
    CHECK(kkt::gradient_f(s1(0.0), kw0, kw)(0, 0) == doctest::Approx(2.0));
    CHECK(kkt::gradient_f(s1(0.5), kw0, kw)(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("gradient matches second-order finite differences") {
    std::mt19937_64 rng(401);
    for (int rep = 0; rep < 5; ++rep) {
        const int n = 2 + rep % 3, l = 2 + rep % 2;
        const MDInstance inst = testutil::random_instance(rng, n, l, true);
        const SymMatrix kw0 = noise_of_distortion(inst.d0, inst.kx);
        std::vector<SymMatrix> kw;
        for (const auto& d : inst.d) kw.push_back(noise_of_distortion(d, inst.kx));
        const SymMatrix a = SymMatrix::identity(n).scaled(0.4);
        const SymMatrix g = kkt::gradient_f(a, kw0, kw);
        for (int dir = 0; dir < 4; ++dir) {
            const SymMatrix e = testutil::random_spd(rng, n, 0.5, 1.0);
            const double ge = dot(g, e);
            double prev_err = 1e300;
            for (const double h : {1e-3, 1e-4}) {
                const SymMatrix ap(a.mat() + h * e.mat());
                const SymMatrix am(a.mat() - h * e.mat());
                const double fd = (kkt::objective_F(ap, kw0, kw) -
                                   kkt::objective_F(am, kw0, kw)) / (2 * h);
                const double err = std::abs(fd - ge);
                CHECK(err <= 50.0 * h * h); // central differences: O(h^2)
                CHECK(err <= prev_err + 1e-12);
                prev_err = err;
            }
        }
    }
}

TEST_CASE("maximize_F solves the whitened pair problem") {
    const SymMatrix kw0 = s1(0.25);
    const std::vector<SymMatrix> kw = {s1(1.0), s1(1.0)};
    const kkt::MaximizeResult r = kkt::maximize_F(kw0, kw);
    CHECK(r.a_star(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.f_value == doctest::Approx(std::log(1.0 / 3)).epsilon(1e-12));
    CHECK(r.stat_residual <= 1e-8);
    CHECK(r.concavity_ok);
    CHECK(r.multistart_spread <= 1e-9);
}

TEST_CASE("classify_case reads the boundary pattern of the spectrum") {
    const Eigen::Vector3d mid(0.3, 0.5, 0.7);
    CHECK(kkt::classify_case(SymMatrix::diagonal(mid)).c == kkt::Case::interior);
    CHECK(kkt::classify_case(SymMatrix::diagonal(Eigen::Vector2d(1e-9, 0.5))).c ==
          kkt::Case::zero_eigs);
    CHECK(kkt::classify_case(SymMatrix::diagonal(Eigen::Vector2d(0.5, 1 - 1e-9))).c ==
          kkt::Case::one_eigs);
    const kkt::CaseInfo both =
        kkt::classify_case(SymMatrix::diagonal(Eigen::Vector2d(1e-9, 1 - 1e-9)));
    CHECK(both.c == kkt::Case::both);
    CHECK(both.basis_zero.cols() == 1);
    CHECK(both.basis_one.cols() == 1);
    CHECK(std::string(kkt::to_string(kkt::Case::both)) == "Both");
}

TEST_CASE("multipliers on the zero face match the scalar closed form") {
    // d = (0.5, 0.5), d0 = 0.4 whitened: kw0 = 2/3, kw_l = 1, optimum at 0.
    const SymMatrix kw0 = s1(2.0 / 3);
    const std::vector<SymMatrix> kw = {s1(1.0), s1(1.0)};
    const SymMatrix a0 = s1(0.0);
    const SymMatrix g = kkt::gradient_f(a0, kw0, kw);
    CHECK(g(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
    const kkt::CaseInfo info = kkt::classify_case(a0);
    REQUIRE(info.c == kkt::Case::zero_eigs);
    const kkt::Multipliers m = kkt::multipliers(a0, g, info);
    CHECK(m.lambda1(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.lambda2.mat().norm() <= 1e-14);
    CHECK(m.stationarity <= 1e-12);
    CHECK(m.slack1 <= 1e-12);
    CHECK(m.slack2 <= 1e-12);
}

TEST_CASE("multipliers reject a non-maximizing boundary point") {
    // At A = 0 the pair problem with a demanding central cap has gradient
    // +2, so the lower face multiplier would need to be -2.
    const SymMatrix kw0 = s1(0.25);
    const std::vector<SymMatrix> kw = {s1(1.0), s1(1.0)};
    const SymMatrix a0 = s1(0.0);
    const SymMatrix g = kkt::gradient_f(a0, kw0, kw);
    CHECK_THROWS_AS(kkt::multipliers(a0, g, kkt::classify_case(a0)), KKTViolation);
}

TEST_CASE("enhanced distortion maps") {
    CHECK(kkt::enhanced_central(s1(0.4), s1(1.0))(0, 0) ==
          doctest::Approx(2.0 / 7).epsilon(1e-14));
    CHECK(kkt::enhanced_central(s1(0.4), s1(0.0))(0, 0) == doctest::Approx(0.4));
    CHECK(kkt::enhanced_individual(s1(0.9), s1(0.1))(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("sum_rate: interior pair instance end to end") {
    const kkt::SumRateSolution s = kkt::sum_rate(flagship());
    CHECK(s.sum_rate_nats == doctest::Approx(0.5 * std::log(16.0 / 3)).epsilon(1e-9));
    CHECK(s.scase == kkt::Case::interior);
    CHECK(s.a_star_white(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(s.stationarity <= 1e-6);
    CHECK(s.slack1 <= 1e-7);
    CHECK(s.slack2 <= 1e-7);
    CHECK(s.concavity_certified);
    CHECK(s.achievable_gap <= 1e-9);
    REQUIRE(s.kz.has_value());
    CHECK((*s.kz)(0, 0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(s.d_achieved[0](0, 0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(s.d0_achieved(0, 0) == doctest::Approx(0.2).epsilon(1e-8));
    CHECK(s.channel.kw[0](0, 0) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(s.channel.a(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("sum_rate: slack central cap keeps the coupling at zero") {
    const MDInstance inst{s1(1.0), {s1(0.5), s1(0.5)}, s1(0.45)};
    const kkt::SumRateSolution s = kkt::sum_rate(inst);
    CHECK(s.scase == kkt::Case::zero_eigs);
    CHECK(s.sum_rate_nats == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(s.d0_achieved(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-6));
    REQUIRE(s.kz.has_value());
    CHECK(s.kz->mat().norm() <= 1e-6);
    CHECK(s.lambda1(0, 0) > 0.0);
}

TEST_CASE("sum_rate: saturated coupling relaxes the last description") {
    const MDInstance inst{s1(1.0), {s1(0.9), s1(0.9)}, s1(0.7)};
    const kkt::SumRateSolution s = kkt::sum_rate(inst);
    CHECK(s.scase == kkt::Case::one_eigs);
    CHECK(s.sum_rate_nats == doctest::Approx(0.5 * std::log(1.0 / 0.7)).epsilon(1e-9));
    CHECK_FALSE(s.kz.has_value());
    CHECK(s.d_achieved[0](0, 0) == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(s.d_achieved[1](0, 0) == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(s.lambda2(0, 0) > 0.0);
}

TEST_CASE("sum_rate: single description reduces to the central floor") {
    const MDInstance inst{s1(1.0), {s1(0.5)}, s1(0.2)};
    const kkt::SumRateSolution s = kkt::sum_rate(inst);
    CHECK(s.sum_rate_nats == doctest::Approx(0.5 * std::log(5.0)).epsilon(1e-9));
    CHECK(s.d0_achieved(0, 0) == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("sum_rate: commuting family equals the per-coordinate scalar sum") {
    using testutil::CoordCase;
    std::mt19937_64 rng(409);
    const std::vector<std::vector<CoordCase>> mixes = {
        {CoordCase::interior, CoordCase::interior},
        {CoordCase::interior, CoordCase::zero},
        {CoordCase::interior, CoordCase::saturated},
        {CoordCase::zero, CoordCase::saturated},
        {CoordCase::interior, CoordCase::zero, CoordCase::saturated},
    };
    const std::vector<kkt::Case> want = {
        kkt::Case::interior, kkt::Case::zero_eigs, kkt::Case::one_eigs,
        kkt::Case::both, kkt::Case::both,
    };
    for (std::size_t m = 0; m < mixes.size(); ++m) {
        const int l = 2 + int(m % 2);
        const MDInstance inst = testutil::case_instance(rng, l, mixes[m]);
        const WhitenReport w = whiten(inst);
        // The whitened caps share one eigenbasis; pair the spectra by
        // diagonalizing both in the basis of the central cap.
        const EigSym e0 = eig_sym(w.whitened.d0);
        const Eigen::VectorXd d0spec = e0.values;
        const Eigen::VectorXd dspec =
            (e0.vectors.transpose() * w.whitened.d[0].mat() * e0.vectors).diagonal();

        double scalar_sum = 0.0;
        for (int j = 0; j < inst.n(); ++j) {
            const ScalarInstance sj{1.0, std::vector<double>(std::size_t(l), dspec(j)),
                                    d0spec(j)};
            scalar_sum += solve(sj).sum_rate_nats;
        }
        const kkt::SumRateSolution s = kkt::sum_rate(inst);
        CHECK(s.sum_rate_nats == doctest::Approx(scalar_sum).epsilon(1e-7));
        CHECK(s.scase == want[m]);
        CHECK(s.stationarity <= 1e-6);
        CHECK(s.slack1 <= 1e-7);
        CHECK(s.slack2 <= 1e-7);
        CHECK(s.achievable_gap <= 1e-5 * std::max(1.0, scalar_sum));
    }
}

TEST_CASE("sum_rate dominates the budgeted converse scan") {
    std::mt19937_64 rng(419);
    for (int k = 0; k < 6; ++k) {
        const MDInstance inst = testutil::random_instance(rng, 2 + k % 2, 2 + k % 3);
        const kkt::SumRateSolution s = kkt::sum_rate(inst);
        const SupResult grid = sup_lower_bound(inst, 20000);
        CHECK(grid.value <= s.sum_rate_nats + 1e-9);
        CHECK(grid.value == doctest::Approx(s.sum_rate_nats).epsilon(2e-2));
        // The achieving channel meets its caps.
        const ChannelDistortions cd = distortions_of_channel(inst.kx, s.channel);
        for (int l = 0; l < inst.l(); ++l) {
            const auto v = psd_compare(cd.individual[std::size_t(l)],
                                       inst.d[std::size_t(l)], 1e-7).verdict;
            CHECK(v != PsdVerdict::greater);
            CHECK(v != PsdVerdict::incomparable);
        }
    }
}

TEST_CASE("sum_rate is invariant under whitening") {
    std::mt19937_64 rng(421);
    for (int k = 0; k < 8; ++k) {
        const MDInstance inst = testutil::random_instance(rng, 2 + k % 3, 2 + k % 2);
        const WhitenReport w = whiten(inst);
        const double a = kkt::sum_rate(inst).sum_rate_nats;
        const double b = kkt::sum_rate(w.whitened).sum_rate_nats;
        CHECK(a == doctest::Approx(b).epsilon(1e-8));
    }
}

TEST_CASE("sum_rate rejects invalid instances") {
    MDInstance bad = flagship();
    bad.d0 = s1(0.6);
    CHECK_THROWS_AS(kkt::sum_rate(bad), OrderingViolation);
}

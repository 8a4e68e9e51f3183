#include "doctest.h"

#include "mdr/bounds.hpp"
#include "mdr/kkt_solver.hpp"
#include "mdr/region.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace mdr;
using testutil::s1;

namespace {

MDInstance flagship() {
    return MDInstance{s1(1.0), {s1(0.5), s1(0.5)}, s1(0.2)};
}

TestChannel flagship_channel() {
    return TestChannel{{s1(1.0), s1(1.0)}, s1(0.5)};
}

int popcount(std::uint32_t m) {
    int c = 0;
    for (; m; m &= m - 1) ++c;
    return c;
}

} // namespace

TEST_CASE("phi reference values on the pair channel") {
    const SymMatrix kx = s1(1.0);
    const TestChannel tc = flagship_channel();
    CHECK(phi(1u, kx, tc) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
    CHECK(phi(2u, kx, tc) == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
    CHECK(phi(3u, kx, tc) == doctest::Approx(0.5 * std::log(16.0 / 3)).epsilon(1e-12));
}

TEST_CASE("phi is additive exactly when the coupling vanishes") {
    std::mt19937_64 rng(601);
    const int n = 2, l = 3;
    std::vector<SymMatrix> blocks;
    for (int i = 0; i < l; ++i) blocks.push_back(testutil::random_spd(rng, n, 0.3, 3.0));
    const SymMatrix kx = testutil::random_spd(rng, n, 0.5, 2.0);
    const TestChannel decoupled{blocks, SymMatrix::zero(n)};
    double singles = 0.0;
    for (int i = 0; i < l; ++i) singles += phi(1u << i, kx, decoupled);
    CHECK(phi(7u, kx, decoupled) == doctest::Approx(singles).epsilon(1e-11));

    const TestChannel coupled = testutil::random_channel(rng, n, l);
    double singles2 = 0.0;
    for (int i = 0; i < l; ++i) singles2 += phi(1u << i, kx, coupled);
    CHECK(phi(7u, kx, coupled) > singles2); // coupling strictly helps the union
}

TEST_CASE("random channels generate contra-polymatroids") {
    std::mt19937_64 rng(603);
    for (int k = 0; k < 12; ++k) {
        const int n = 1 + k % 3, l = 2 + k % 4; // up to L = 5
        const SymMatrix kx = testutil::random_spd(rng, n, 0.5, 2.0);
        const TestChannel tc = testutil::random_channel(rng, n, l);
        const PolymatroidReport rep = is_contra_polymatroid(kx, tc);
        CHECK(rep.ok);
        CHECK(rep.worst_margin >= -1e-12);
        CHECK(rep.checks > 0);
    }
}

TEST_CASE("contra-polymatroid check samples above the exhaustive cutoff") {
    std::mt19937_64 rng(605);
    const TestChannel tc = testutil::random_channel(rng, 1, 7);
    const SymMatrix kx = s1(1.5);
    const PolymatroidReport rep = is_contra_polymatroid(kx, tc, 5000);
    CHECK(rep.ok);
    CHECK(rep.checks >= 5000);
}

TEST_CASE("vertices of the pair channel are the two corners") {
    const auto vs = vertices(s1(1.0), flagship_channel());
    REQUIRE(vs.size() == 2);
    const double r1 = 0.5 * std::log(2.0);
    const double sum = 0.5 * std::log(16.0 / 3);
    CHECK(vs[0][0] == doctest::Approx(r1).epsilon(1e-12));
    CHECK(vs[0][1] == doctest::Approx(sum - r1).epsilon(1e-12));
    CHECK(vs[1][1] == doctest::Approx(r1).epsilon(1e-12));
    CHECK(vs[1][0] == doctest::Approx(sum - r1).epsilon(1e-12));
}

TEST_CASE("every greedy vertex lies in the region and spends the full rate") {
    std::mt19937_64 rng(607);
    for (int k = 0; k < 6; ++k) {
        const int n = 1 + k % 2, l = 2 + k % 3;
        const SymMatrix kx = testutil::random_spd(rng, n, 0.5, 2.0);
        const TestChannel tc = testutil::random_channel(rng, n, l);
        const auto vs = vertices(kx, tc);
        long expect = 1;
        for (int i = 2; i <= l; ++i) expect *= i;
        REQUIRE(long(vs.size()) == expect);
        const double total = phi((1u << l) - 1, kx, tc);
        for (const auto& v : vs) {
            double sum = 0.0;
            for (double r : v) {
                CHECK(r >= -1e-12);
                sum += r;
            }
            CHECK(sum == doctest::Approx(total).epsilon(1e-10));
            for (std::uint32_t s = 1; s < (1u << l); ++s) {
                double subset = 0.0;
                for (int i = 0; i < l; ++i)
                    if (s & (1u << i)) subset += v[std::size_t(i)];
                CHECK(subset >= phi(s, kx, tc) - 1e-9);
            }
        }
    }
}

TEST_CASE("two_description_region on the pair instance") {
    const RateRegion r = two_description_region(flagship());
    CHECK(r.l == 2);
    REQUIRE(r.constraints.size() == 3);
    for (const auto& c : r.constraints) {
        if (c.subset == 1u || c.subset == 2u) {
            CHECK(c.value_nats == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-10));
        } else {
            CHECK(c.subset == 3u);
            CHECK(c.value_nats ==
                  doctest::Approx(0.5 * std::log(16.0 / 3)).epsilon(1e-9));
        }
    }
    REQUIRE(r.vertices.size() == 2);
    CHECK(r.vertices[0][0] + r.vertices[0][1] ==
          doctest::Approx(0.5 * std::log(16.0 / 3)).epsilon(1e-9));
}

TEST_CASE("general_region_from_channel is consistent with its generator") {
    const MDInstance inst{s1(1.0), {s1(0.4), s1(0.4), s1(0.4)}, s1(0.15)};
    const kkt::SumRateSolution s = kkt::sum_rate(inst);
    const RateRegion r = general_region_from_channel(inst.kx, s.channel);
    CHECK(r.l == 3);
    CHECK(r.constraints.size() == 7);
    double full = -1.0;
    for (const auto& c : r.constraints) {
        CHECK(popcount(c.subset) >= 1);
        if (c.subset == 7u) full = c.value_nats;
    }
    CHECK(full == doctest::Approx(s.sum_rate_nats).epsilon(1e-8));
    CHECK(r.vertices.size() == 6);
}

TEST_CASE("subset_distortion interpolates the receivers") {
    const SymMatrix kx = s1(1.0);
    const TestChannel tc = flagship_channel();
    CHECK(subset_distortion(1u, kx, tc)(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(subset_distortion(3u, kx, tc)(0, 0) == doctest::Approx(0.2).epsilon(1e-12));

    std::mt19937_64 rng(613);
    const int n = 2, l = 3;
    const SymMatrix kx2 = testutil::random_spd(rng, n, 0.5, 2.0);
    const TestChannel tc2 = testutil::random_channel(rng, n, l);
    const ChannelDistortions cd = distortions_of_channel(kx2, tc2);
    for (int i = 0; i < l; ++i) {
        CHECK((subset_distortion(1u << i, kx2, tc2).mat() -
               cd.individual[std::size_t(i)].mat()).norm() <= 1e-10);
    }
    CHECK((subset_distortion(7u, kx2, tc2).mat() - cd.central.mat()).norm() <= 1e-10);
    // Observing more descriptions never increases the distortion.
    for (std::uint32_t s = 1; s < 7u; ++s) {
        for (std::uint32_t t = s + 1; t < 8u; ++t) {
            if ((s & t) != s) continue;
            const auto v = psd_compare(subset_distortion(t, kx2, tc2),
                                       subset_distortion(s, kx2, tc2), 1e-9).verdict;
            CHECK(v != PsdVerdict::greater);
            CHECK(v != PsdVerdict::incomparable);
        }
    }
}

TEST_CASE("separate certificate accepts a comfortably achievable pair") {
    const SymMatrix kx = SymMatrix::identity(2);
    const SymMatrix d0 = SymMatrix::identity(2).scaled(0.35);
    const std::array<double, 2> rates = {std::log(2.0), std::log(2.0)};
    const SeparateCertificate cert =
        separate_constraint_certificate(kx, 1, s1(0.5), s1(0.5), d0, rates);
    CHECK(cert.achievable);
    CHECK(cert.evaluated > 0);
    // The witness is honest: valid completions dominated by the targets,
    // and the claimed rate pair satisfies the witness region.
    CHECK(cert.d1_completion.n() == 2);
    CHECK(psd_compare(SymMatrix(cert.d1_completion.mat().topLeftCorner(1, 1)),
                      s1(0.5), 1e-9).verdict != PsdVerdict::greater);
    CHECK(psd_compare(SymMatrix(cert.d2_completion.mat().bottomRightCorner(1, 1)),
                      s1(0.5), 1e-9).verdict != PsdVerdict::greater);
    CHECK(validate(MDInstance{kx, {cert.d1_completion, cert.d2_completion}, d0}).ok());
    for (const auto& c : cert.witness_region.constraints) {
        double lhs = 0.0;
        if (c.subset & 1u) lhs += rates[0];
        if (c.subset & 2u) lhs += rates[1];
        CHECK(lhs >= c.value_nats - 1e-9);
    }
}

TEST_CASE("separate certificate never claims an impossible pair") {
    const SymMatrix kx = SymMatrix::identity(2);
    const SymMatrix d0 = SymMatrix::identity(2).scaled(0.35);

    // Below the central floor: rejected before any search.
    const SeparateCertificate below =
        separate_constraint_certificate(kx, 1, s1(0.5), s1(0.5), d0, {0.1, 0.1});
    CHECK_FALSE(below.achievable);
    CHECK(below.evaluated == 0);

    // Above the central floor but under description 1's individual floor:
    // every completion satisfies |D1'| <= 0.5, so R1 >= log(2)/2 > 0.2.
    const SeparateCertificate starved =
        separate_constraint_certificate(kx, 1, s1(0.5), s1(0.5), d0, {0.2, 1.2}, 300);
    CHECK_FALSE(starved.achievable);
    CHECK(starved.evaluated > 0);
}

TEST_CASE("separate certificate validates its inputs") {
    const SymMatrix kx = SymMatrix::identity(2);
    CHECK_THROWS_AS(separate_constraint_certificate(
                        kx, 1, s1(0.5), s1(0.5), SymMatrix::identity(2).scaled(1.5),
                        {1.0, 1.0}),
                    OrderingViolation);
    CHECK_THROWS_AS(separate_constraint_certificate(
                        kx, 2, s1(0.5), s1(0.5), SymMatrix::identity(2).scaled(0.3),
                        {1.0, 1.0}),
                    Error);
}

#include "mdr/region.hpp"

#include "mdr/bounds.hpp"
#include "mdr/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace mdr {

namespace {

constexpr double kRegionTol = 1e-9;

std::vector<int> bits_of(std::uint32_t mask) {
    std::vector<int> idx;
    for (int i = 0; mask >> i; ++i)
        if ((mask >> i) & 1u) idx.push_back(i);
    return idx;
}

void check_channel_shape(const SymMatrix& kx, const TestChannel& tc, const char* what) {
    if (tc.kw.empty()) throw DimensionError(std::string(what) + ": channel has no blocks");
    if (tc.a.n() != kx.n()) throw DimensionError(std::string(what) + ": coupling size mismatch");
    for (const SymMatrix& b : tc.kw)
        if (b.n() != kx.n()) throw DimensionError(std::string(what) + ": block size mismatch");
}

// phi over all masks below 2^l, memoized; entry 0 stays 0.
std::vector<double> phi_table(const SymMatrix& kx, const TestChannel& tc) {
    const int l = tc.l();
    std::vector<double> t(std::size_t{1} << l, 0.0);
    for (std::uint32_t s = 1; s < t.size(); ++s) t[s] = phi(s, kx, tc);
    return t;
}

void check_vertices_satisfy(const RateRegion& r, const char* what) {
    for (const auto& v : r.vertices) {
        for (const Constraint& c : r.constraints) {
            double sum = 0.0;
            for (int i = 0; i < r.l; ++i)
                if ((c.subset >> i) & 1u) sum += v[i];
            if (sum < c.value_nats - kRegionTol) {
                std::ostringstream os;
                os << what << ": vertex violates subset constraint " << c.subset << " by "
                   << (c.value_nats - sum);
                throw TheoryViolation(os.str());
            }
        }
    }
}

SymMatrix principal_block(const SymMatrix& m, int from, int size) {
    return SymMatrix(m.mat().block(from, from, size, size));
}

} // namespace

double phi(std::uint32_t subset, const SymMatrix& kx, const TestChannel& tc) {
    check_channel_shape(kx, tc, "phi");
    if (subset >> tc.l()) throw DimensionError("phi: subset mask out of range");
    if (subset == 0) return 0.0;
    const std::vector<int> idx = bits_of(subset);
    std::vector<SymMatrix> blocks;
    blocks.reserve(idx.size());
    double v = 0.0;
    for (int i : idx) {
        blocks.push_back(tc.kw[std::size_t(i)]);
        v += log_det_pd(kx + tc.kw[std::size_t(i)]);
    }
    v -= log_det_pd(assemble_kw(blocks, tc.a));
    return 0.5 * v;
}

PolymatroidReport is_contra_polymatroid(const SymMatrix& kx, const TestChannel& tc,
                                        long sample_budget) {
    check_channel_shape(kx, tc, "is_contra_polymatroid");
    const int l = tc.l();
    const std::uint32_t full = (l >= 32) ? 0xffffffffu : ((1u << l) - 1u);

    PolymatroidReport rep;
    rep.worst_margin = std::numeric_limits<double>::infinity();
    auto record = [&](double slack, std::uint32_t s, std::uint32_t t) {
        ++rep.checks;
        if (slack < rep.worst_margin) {
            rep.worst_margin = slack;
            rep.worst_s = s;
            rep.worst_t = t;
        }
    };

    if (l <= 6) {
        const std::vector<double> f = phi_table(kx, tc);
        for (std::uint32_t s = 0; s <= full; ++s) {
            for (int t = 0; t < l; ++t) {
                if ((s >> t) & 1u) continue;
                record(f[s | (1u << t)] - f[s], s, 1u << t);
            }
        }
        for (std::uint32_t s = 0; s <= full; ++s)
            for (std::uint32_t t = s; t <= full; ++t)
                record(f[s | t] + f[s & t] - f[s] - f[t], s, t);
    } else {
        std::mt19937_64 rng(0xC0117EC7ULL);
        std::uniform_int_distribution<std::uint32_t> mask_dist(0, full);
        std::uniform_int_distribution<int> bit_dist(0, l - 1);
        std::vector<double> memo(std::size_t{1} << l,
                                 std::numeric_limits<double>::quiet_NaN());
        memo[0] = 0.0;
        auto f = [&](std::uint32_t m) {
            if (std::isnan(memo[m])) memo[m] = phi(m, kx, tc);
            return memo[m];
        };
        for (long i = 0; i < sample_budget; ++i) {
            const std::uint32_t s = mask_dist(rng);
            const std::uint32_t t = mask_dist(rng);
            record(f(s | t) + f(s & t) - f(s) - f(t), s, t);
            const int b = bit_dist(rng);
            if (!((s >> b) & 1u)) record(f(s | (1u << b)) - f(s), s, 1u << b);
        }
    }
    rep.ok = rep.worst_margin >= -kRegionTol;
    return rep;
}

std::vector<std::vector<double>> vertices(const SymMatrix& kx, const TestChannel& tc) {
    check_channel_shape(kx, tc, "vertices");
    const int l = tc.l();
    if (l > 8) throw Unsupported("vertices: factorial enumeration capped at 8 descriptions");
    const std::vector<double> f = phi_table(kx, tc);

    std::vector<int> perm(static_cast<std::size_t>(l), 0);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<double>> out;
    do {
        std::vector<double> v(std::size_t(l), 0.0);
        std::uint32_t prefix = 0;
        for (int i : perm) {
            const std::uint32_t next = prefix | (1u << i);
            v[std::size_t(i)] = f[next] - f[prefix];
            prefix = next;
        }
        out.push_back(std::move(v));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

RateRegion two_description_region(const MDInstance& inst) {
    const TwoDescSolution sol = two_description_solve(inst);
    RateRegion r;
    r.l = 2;
    r.constraints = {{0b01u, individual_bound(inst, 0)},
                     {0b10u, individual_bound(inst, 1)},
                     {0b11u, sol.sum_rate_nats}};
    r.vertices = {{sol.corners[0][0], sol.corners[0][1]},
                  {sol.corners[1][0], sol.corners[1][1]}};
    check_vertices_satisfy(r, "two_description_region");
    return r;
}

SymMatrix subset_distortion(std::uint32_t subset, const SymMatrix& kx,
                            const TestChannel& tc) {
    check_channel_shape(kx, tc, "subset_distortion");
    if (subset == 0) throw DimensionError("subset_distortion: empty subset");
    if (subset >> tc.l()) throw DimensionError("subset_distortion: subset mask out of range");
    std::vector<SymMatrix> blocks;
    for (int i : bits_of(subset)) blocks.push_back(tc.kw[std::size_t(i)]);
    return inverse_pd(inverse_pd(kx) + collapsed_inverse(blocks, tc.a));
}

RateRegion general_region_from_channel(const SymMatrix& kx, const TestChannel& tc) {
    check_channel_shape(kx, tc, "general_region_from_channel");
    const int l = tc.l();
    if (l > 8) throw Unsupported("general_region_from_channel: capped at 8 descriptions");
    const std::uint32_t full = (1u << l) - 1u;

    RateRegion r;
    r.l = l;
    const std::vector<double> f = phi_table(kx, tc);
    for (std::uint32_t s = 1; s <= full; ++s) r.constraints.push_back({s, f[s]});
    r.vertices = vertices(kx, tc);
    check_vertices_satisfy(r, "general_region_from_channel");

    // When the coupling sits inside [0, Kx) the channel corresponds to a
    // remote observation y = x + z, and each subset value must match the
    // converse expression evaluated at that Kz with the induced distortions.
    if (is_psd(tc.a) && psd_compare(tc.a, kx).verdict == PsdVerdict::less) {
        const SymMatrix kz = kz_from_A(tc.a, kx);
        const double ld_kx = log_det_pd(kx);
        const double ld_kxz = log_det_pd(kx + kz);
        std::vector<double> ld_dl(static_cast<std::size_t>(l), 0.0);
        std::vector<double> ld_dlz(static_cast<std::size_t>(l), 0.0);
        for (int i = 0; i < l; ++i) {
            const SymMatrix di = distortion_of_noise(tc.kw[std::size_t(i)], kx);
            ld_dl[std::size_t(i)] = log_det_pd(di);
            ld_dlz[std::size_t(i)] = log_det_pd(di + kz);
        }
        for (std::uint32_t s = 1; s <= full; ++s) {
            const std::vector<int> idx = bits_of(s);
            const SymMatrix ds = subset_distortion(s, kx, tc);
            double outer = ld_kx + double(idx.size() - 1) * ld_kxz + log_det_pd(ds + kz) -
                           log_det_pd(ds);
            for (int i : idx) outer -= ld_dlz[std::size_t(i)];
            outer *= 0.5;
            if (std::abs(outer - f[s]) > 1e-8 * std::max(1.0, std::abs(f[s]))) {
                std::ostringstream os;
                os << "general_region_from_channel: converse value " << outer
                   << " disagrees with subset rate " << f[s] << " for mask " << s;
                throw TheoryViolation(os.str());
            }
        }
    }
    return r;
}

SeparateCertificate separate_constraint_certificate(const SymMatrix& kx, int n1,
                                                    const SymMatrix& d1,
                                                    const SymMatrix& d2,
                                                    const SymMatrix& d0,
                                                    std::array<double, 2> rates,
                                                    long budget) {
    const int n = kx.n();
    const int n2 = n - n1;
    if (n1 < 1 || n2 < 1)
        throw DimensionError("separate_constraint_certificate: need two nonempty blocks");
    if (d1.n() != n1 || d2.n() != n2 || d0.n() != n)
        throw DimensionError("separate_constraint_certificate: block size mismatch");
    const double margin = 1e-9 * spectral_norm(kx);
    if (!is_pd(d0)) throw NotPd("separate_constraint_certificate: D0 not positive definite");
    if (!is_pd(d1) || !is_pd(d2))
        throw NotPd("separate_constraint_certificate: distortion block not positive definite");
    if (!is_pd(kx - d0, margin))
        throw OrderingViolation("separate_constraint_certificate: D0 < Kx fails");

    SeparateCertificate cert;
    // No completion can beat the central converse, which ignores D1', D2'.
    if (rates[0] + rates[1] <
        0.5 * (log_det_pd(kx) - log_det_pd(d0)) - kRegionTol)
        return cert;

    // Candidate completions [[B(t), C], [C^t, S(u)]]: the designated block is
    // pulled from the target toward D0's block, the complement interpolates
    // D0 toward Kx, and the cross block scales a base coupling. Invalid
    // combinations are filtered, never repaired.
    struct Side {
        int from, size, other_from, other_size;
        const SymMatrix* target;
    };
    const Side sides[2] = {{0, n1, n1, n2, &d1}, {n1, n2, 0, n1, &d2}};
    std::mt19937_64 rng(0x5E9A7A7EULL);

    auto candidates_for = [&](const Side& sd, long cap) {
        std::vector<SymMatrix> out;
        const SymMatrix d0_block = principal_block(d0, sd.from, sd.size);
        const SymMatrix d0_other = principal_block(d0, sd.other_from, sd.other_size);
        const SymMatrix kx_other = principal_block(kx, sd.other_from, sd.other_size);
        const Eigen::MatrixXd cross_d0 =
            d0.mat().block(sd.from, sd.other_from, sd.size, sd.other_size);
        const Eigen::MatrixXd cross_kx =
            kx.mat().block(sd.from, sd.other_from, sd.size, sd.other_size);

        auto push = [&](const SymMatrix& block, const Eigen::MatrixXd& cross,
                        const SymMatrix& comp) {
            Eigen::MatrixXd m(n, n);
            m.block(sd.from, sd.from, sd.size, sd.size) = block.mat();
            m.block(sd.other_from, sd.other_from, sd.other_size, sd.other_size) = comp.mat();
            m.block(sd.from, sd.other_from, sd.size, sd.other_size) = cross;
            m.block(sd.other_from, sd.from, sd.other_size, sd.size) = cross.transpose();
            SymMatrix cand(m);
            if (!is_pd(cand)) return;
            if (!is_pd(cand - d0, margin) || !is_pd(kx - cand, margin)) return;
            const PsdVerdict v = psd_compare(principal_block(cand, sd.from, sd.size),
                                             *sd.target).verdict;
            if (v != PsdVerdict::less && v != PsdVerdict::less_equal &&
                v != PsdVerdict::equal)
                return;
            out.push_back(std::move(cand));
        };

        const double ts[] = {0.0, 0.25, 0.5, 0.75};
        const double us[] = {0.999, 0.99, 0.9, 0.7, 0.5, 0.3};
        const double rhos[] = {0.0, 0.5, 1.0, -0.5};
        for (double t : ts) {
            const SymMatrix block = *sd.target - (*sd.target - d0_block).scaled(t);
            for (double u : us) {
                const SymMatrix comp = d0_other + (kx_other - d0_other).scaled(u);
                for (double rho : rhos) {
                    push(block, rho * cross_d0, comp);
                    if (rho != 0.0) push(block, rho * cross_kx, comp);
                }
                if (long(out.size()) >= cap) return out;
            }
        }
        // Jittered complements extend the family once the grid is exhausted.
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (long tries = 0; long(out.size()) < cap && tries < 4 * cap; ++tries) {
            Eigen::MatrixXd g(sd.other_size, sd.other_size);
            for (int i = 0; i < sd.other_size; ++i)
                for (int j = 0; j < sd.other_size; ++j) g(i, j) = gauss(rng);
            const SymMatrix base = d0_other + (kx_other - d0_other).scaled(0.7);
            const SymMatrix comp(
                base.mat() + (0.05 * spectral_norm(base) / sd.other_size) *
                                 (g * g.transpose()));
            push(*sd.target, Eigen::MatrixXd::Zero(sd.size, sd.other_size), comp);
        }
        return out;
    };

    const long side_cap = std::max<long>(8, budget / 8);
    const std::vector<SymMatrix> c1 = candidates_for(sides[0], side_cap);
    const std::vector<SymMatrix> c2 = candidates_for(sides[1], side_cap);

    for (std::size_t k = 0; k < c1.size() + c2.size(); ++k) {
        for (std::size_t i = 0; i <= k && i < c1.size(); ++i) {
            const std::size_t j = k - i;
            if (j >= c2.size()) continue;
            if (cert.evaluated >= budget) return cert;
            ++cert.evaluated;
            try {
                const MDInstance inst{kx, {c1[i], c2[j]}, d0};
                const RateRegion reg = two_description_region(inst);
                bool inside = true;
                for (const Constraint& c : reg.constraints) {
                    double sum = 0.0;
                    if (c.subset & 1u) sum += rates[0];
                    if (c.subset & 2u) sum += rates[1];
                    if (sum < c.value_nats - kRegionTol) {
                        inside = false;
                        break;
                    }
                }
                if (inside) {
                    cert.achievable = true;
                    cert.d1_completion = c1[i];
                    cert.d2_completion = c2[j];
                    cert.witness_region = reg;
                    return cert;
                }
            } catch (const Error&) {
                // A candidate that trips numerics is simply skipped.
            }
        }
    }
    return cert;
}

} // namespace mdr

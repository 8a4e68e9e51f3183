#include "CLI11.hpp"
#include "json.hpp"

#include "mdr/bounds.hpp"
#include "mdr/instance_io.hpp"
#include "mdr/kkt_solver.hpp"
#include "mdr/mc_verify.hpp"
#include "mdr/region.hpp"
#include "mdr/riccati.hpp"
#include "mdr/scalar_solver.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

namespace {

using nlohmann::ordered_json;

std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double sig12(double v) {
    return std::atof(fmt12(v).c_str());
}

struct Ctx {
    bool bits = false;
    bool json = false;
    ordered_json doc;
    std::ostringstream text;

    double conv(double nats) const { return bits ? nats / M_LN2 : nats; }
    const char* unit() const { return bits ? "bits" : "nats"; }

    void rate(const std::string& key, double nats) {
        text << key << "_" << unit() << ": " << fmt12(conv(nats)) << "\n";
        doc[key + "_nats"] = sig12(nats);
        if (bits) doc[key + "_bits"] = sig12(nats / M_LN2);
    }
    void scalar(const std::string& key, double v) {
        text << key << ": " << fmt12(v) << "\n";
        doc[key] = sig12(v);
    }
    void tag(const std::string& key, const std::string& v) {
        text << key << ": " << v << "\n";
        doc[key] = v;
    }
    void matrix(const std::string& key, const mdr::SymMatrix& m) {
        text << key << ":\n";
        ordered_json rows = ordered_json::array();
        for (int i = 0; i < m.n(); ++i) {
            ordered_json row = ordered_json::array();
            text << " ";
            for (int j = 0; j < m.n(); ++j) {
                text << " " << fmt12(m(i, j));
                row.push_back(sig12(m(i, j)));
            }
            text << "\n";
            rows.push_back(std::move(row));
        }
        doc[key] = std::move(rows);
    }
    void emit() const {
        if (json)
            std::cout << doc.dump(2) << "\n";
        else
            std::cout << text.str();
    }
};

void render_channel(Ctx& ctx, const mdr::TestChannel& tc,
                    const std::vector<mdr::SymMatrix>& d_achieved,
                    const mdr::SymMatrix& d0_achieved) {
    for (std::size_t i = 0; i < tc.kw.size(); ++i)
        ctx.matrix("Kw_block_" + std::to_string(i + 1), tc.kw[i]);
    for (std::size_t i = 0; i < d_achieved.size(); ++i)
        ctx.matrix("D_achieved_" + std::to_string(i + 1), d_achieved[i]);
    ctx.matrix("D0_achieved", d0_achieved);
}

void run_sumrate(Ctx& ctx, const mdr::MDInstance& inst) {
    const mdr::kkt::SumRateSolution s = mdr::kkt::sum_rate(inst);
    ctx.rate("sum_rate", s.sum_rate_nats);
    ctx.tag("case", mdr::kkt::to_string(s.scase));
    ctx.matrix("A_star", s.channel.a);
    if (s.kz) {
        ctx.matrix("Kz", *s.kz);
    } else {
        ctx.text << "Kz: unbounded\n";
        ctx.doc["Kz"] = nullptr;
    }
    render_channel(ctx, s.channel, s.d_achieved, s.d0_achieved);
    ctx.scalar("stationarity", s.stationarity);
    ctx.scalar("achievable_gap", s.achievable_gap);
}

void run_scalar(Ctx& ctx, const mdr::MDInstance& inst) {
    if (inst.n() != 1)
        throw mdr::Unsupported("scalar: instance dimension is " +
                               std::to_string(inst.n()) + ", need 1");
    mdr::ScalarInstance si;
    si.var_x = inst.kx(0, 0);
    for (const auto& m : inst.d) si.d.push_back(m(0, 0));
    si.d0 = inst.d0(0, 0);
    const mdr::ScalarSolution s = mdr::solve(si);
    ctx.rate("sum_rate", s.sum_rate_nats);
    ctx.tag("case", mdr::to_string(s.scase));
    ctx.scalar("a_star", s.a_star);
    ordered_json arr = ordered_json::array();
    ctx.text << "noise_variances:";
    for (double v : s.sigma2) {
        ctx.text << " " << fmt12(v);
        arr.push_back(sig12(v));
    }
    ctx.text << "\n";
    ctx.doc["noise_variances"] = std::move(arr);
    ordered_json da = ordered_json::array();
    ctx.text << "d_achieved:";
    for (double v : s.d_achieved) {
        ctx.text << " " << fmt12(v);
        da.push_back(sig12(v));
    }
    ctx.text << "\n";
    ctx.doc["d_achieved"] = std::move(da);
    ctx.scalar("d0_achieved", s.d0_achieved);
    ctx.scalar("residual", s.residual);
}

void run_riccati(Ctx& ctx, const mdr::MDInstance& inst) {
    const mdr::TwoDescSolution s = mdr::two_description_solve(inst);
    const mdr::SufficiencyReport suff = mdr::check_sufficient(inst);
    ctx.rate("sum_rate", s.sum_rate_nats);
    ctx.tag("path", mdr::to_string(s.path));
    ctx.tag("case", mdr::kkt::to_string(s.scase));
    ctx.scalar("sum_margin", suff.sum_margin);
    ctx.scalar("inverse_margin", suff.inverse_margin);
    ctx.matrix("A_star", s.a_star);
    render_channel(ctx, s.channel, s.d_achieved, s.d0_achieved);
    ordered_json corners = ordered_json::array();
    for (const auto& c : s.corners) {
        ctx.text << "corner: (" << fmt12(ctx.conv(c[0])) << ", " << fmt12(ctx.conv(c[1]))
                 << ") " << ctx.unit() << "\n";
        corners.push_back({sig12(c[0]), sig12(c[1])});
    }
    ctx.doc["corners"] = std::move(corners);
}

void render_region(Ctx& ctx, const mdr::RateRegion& reg) {
    ctx.text << "subset masks: bit k set means description k+1 is in S\n";
    ordered_json cons = ordered_json::array();
    for (const mdr::Constraint& c : reg.constraints) {
        ctx.text << "constraint mask=" << c.subset << " {";
        bool first = true;
        for (int i = 0; i < reg.l; ++i)
            if ((c.subset >> i) & 1u) {
                ctx.text << (first ? "" : ",") << (i + 1);
                first = false;
            }
        ctx.text << "}: sum >= " << fmt12(ctx.conv(c.value_nats)) << " " << ctx.unit()
                 << "\n";
        cons.push_back({{"subset_mask", c.subset}, {"value_nats", sig12(c.value_nats)}});
    }
    ctx.doc["constraints"] = std::move(cons);
    ordered_json verts = ordered_json::array();
    for (const auto& v : reg.vertices) {
        ctx.text << "vertex:";
        ordered_json row = ordered_json::array();
        for (double x : v) {
            ctx.text << " " << fmt12(ctx.conv(x));
            row.push_back(sig12(x));
        }
        ctx.text << "\n";
        verts.push_back(std::move(row));
    }
    ctx.doc["vertices"] = std::move(verts);
}

void run_region(Ctx& ctx, const mdr::MDInstance& inst) {
    ctx.doc["L"] = inst.l();
    if (inst.l() == 2) {
        const mdr::RateRegion reg = mdr::two_description_region(inst);
        ctx.tag("region", "exact for the given distortions");
        render_region(ctx, reg);
        ordered_json corners = ordered_json::array();
        for (const auto& v : reg.vertices) corners.push_back({sig12(v[0]), sig12(v[1])});
        ctx.doc["corners"] = std::move(corners);
    } else {
        const mdr::kkt::SumRateSolution s = mdr::kkt::sum_rate(inst);
        const mdr::RateRegion reg = mdr::general_region_from_channel(inst.kx, s.channel);
        ctx.tag("region",
                "induced by the sum-rate-optimal channel; exact for the subset "
                "distortions that channel delivers");
        render_region(ctx, reg);
    }
}

void run_vertices(Ctx& ctx, const mdr::MDInstance& inst) {
    const mdr::kkt::SumRateSolution s = mdr::kkt::sum_rate(inst);
    const auto verts = mdr::vertices(inst.kx, s.channel);
    ctx.text << "vertices of the sum-rate-optimal channel region, permutation order\n";
    ordered_json arr = ordered_json::array();
    for (const auto& v : verts) {
        ctx.text << "vertex:";
        ordered_json row = ordered_json::array();
        for (double x : v) {
            ctx.text << " " << fmt12(ctx.conv(x));
            row.push_back(sig12(x));
        }
        ctx.text << "\n";
        arr.push_back(std::move(row));
    }
    ctx.doc["vertices"] = std::move(arr);
}

int run_verify(Ctx& ctx, const mdr::MDInstance& inst, long samples, std::uint64_t seed) {
    const mdr::kkt::SumRateSolution s = mdr::kkt::sum_rate(inst);
    const mdr::McReport rep = mdr::sample_verify(inst.kx, s.channel, samples, seed);
    ctx.tag("pass", rep.pass ? "true" : "false");
    ctx.doc["pass"] = rep.pass;
    ctx.scalar("n_samples", double(rep.n_samples));
    ctx.text << "seed: " << rep.seed << "\n";
    ctx.doc["seed"] = rep.seed;
    ctx.scalar("tolerance", rep.tolerance);
    ctx.scalar("max_rel_frobenius_error", rep.max_rel_frobenius_error);
    for (std::size_t i = 0; i < rep.empirical_dl.size(); ++i)
        ctx.matrix("empirical_D_" + std::to_string(i + 1), rep.empirical_dl[i]);
    ctx.matrix("empirical_D0", rep.empirical_d0);

    if (mdr::is_psd(s.channel.a) &&
        mdr::psd_compare(s.channel.a, inst.kx).verdict == mdr::PsdVerdict::less) {
        ctx.scalar("independence_residual",
                   mdr::independence_check(inst.kx, s.channel, s.channel.a));
    } else {
        ctx.text << "independence_residual: skipped (coupling saturated)\n";
        ctx.doc["independence_residual"] = nullptr;
    }
    const mdr::ConsistencyReport cons = mdr::bound_consistency(inst, s.channel, 300);
    ctx.rate("achievable_rate", cons.achievable_rate);
    ctx.scalar("min_gap", cons.min_gap);
    ctx.emit();
    if (!rep.pass) {
        std::cerr << "error: VerificationFailed: max relative error "
                  << fmt12(rep.max_rel_frobenius_error) << " exceeds tolerance "
                  << fmt12(rep.tolerance) << "\n";
        return 3;
    }
    return 0;
}

int exit_code_for(const mdr::Error& e) {
    const std::string k = e.kind();
    if (k == "ParseError" || k == "InvalidMatrix" || k == "DimensionError" ||
        k == "OrderingViolation" || k == "Unsupported")
        return 2;
    return 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact sum rates, regions and optimal test channels for the\n"
                 "vector Gaussian multiple description problem with individual\n"
                 "and central receivers"};
    app.require_subcommand(1);
    Ctx ctx;
    app.add_flag("--bits", ctx.bits, "report rates in bits instead of nats");
    app.add_flag("--json", ctx.json, "emit a JSON document instead of text");

    std::string file;
    long samples = 1000000;
    std::uint64_t seed = 42;

    auto common = [&](CLI::App* sub) {
        sub->fallthrough();
        sub->add_option("file", file, "instance file")->required();
        return sub;
    };
    CLI::App* c_sum = common(app.add_subcommand("sumrate", "minimal sum rate and optimal channel"));
    CLI::App* c_reg = common(app.add_subcommand("region", "rate-region constraints and vertices"));
    CLI::App* c_sca = common(app.add_subcommand("scalar", "closed-form solution for a scalar source"));
    CLI::App* c_ric = common(app.add_subcommand("riccati", "two-description solution with corner points"));
    CLI::App* c_ver = common(app.add_subcommand("verify", "Monte Carlo check of the optimal channel"));
    CLI::App* c_vtx = common(app.add_subcommand("vertices", "all greedy vertices of the channel region"));
    c_ver->add_option("--samples", samples, "Monte Carlo sample count")
        ->check(CLI::Range(1000L, 1000000000L));
    c_ver->add_option("--seed", seed, "Monte Carlo seed");

    CLI11_PARSE(app, argc, argv);

    try {
        const mdr::MDInstance inst = mdr::load_instance(file);
        if (c_ver->parsed()) return run_verify(ctx, inst, samples, seed);
        if (c_sum->parsed()) run_sumrate(ctx, inst);
        if (c_reg->parsed()) run_region(ctx, inst);
        if (c_sca->parsed()) run_scalar(ctx, inst);
        if (c_ric->parsed()) run_riccati(ctx, inst);
        if (c_vtx->parsed()) run_vertices(ctx, inst);
        ctx.emit();
    } catch (const mdr::Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: Unhandled: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

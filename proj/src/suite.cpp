#include "affine/suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "affine/analysis.hpp"
#include "affine/hash.hpp"
#include "affine/model.hpp"

namespace affine
{
namespace
{
using Clock = std::chrono::steady_clock;

struct Context
{
    SuiteOptions const& opts;

    ModelParams model(std::string const& name) const
    {
        return load_model(opts.models_dir + "/" + name);
    }

    SimConfig config(double dt, double T, std::size_t n, std::string const& label) const
    {
        SimConfig c;
        c.dt = dt;
        c.T = T;
        c.n_paths = std::max<std::size_t>(n, 2);
        c.seed = derive_seed(opts.seed, label);
        c.threads = opts.threads;
        return c;
    }
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

template<class F>
double mean_of(std::size_t n, F&& f, double* se)
{
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        double v = f(i);
        s += v;
        s2 += v * v;
    }
    double m = s / double(n);
    double var = std::max(0.0, (s2 - double(n) * m * m) / double(n - 1));
    *se = std::sqrt(var / double(n));
    return m;
}

//---------------------------------------------------------------------------//
CriterionResult riccati_closed_form(Context const& ctx)
{
    CriterionResult r{1, "Riccati vs closed forms", false, "", 0, {}};
    auto p = ctx.model("cir_ou.json");
    auto t0 = Clock::now();
    RiccatiSolver s(p);
    double alpha = p.a11() + p.a12();
    double worst = 0;
    RiccatiOptions o;
    o.tol = 1e-12;
    o.output_times = {0.1, 1, 5};
    for (double u1 : {-0.5, -1.0, -2.0})
    {
        auto sol = s.solve_V(UPoint(u1, 0), 5, o);
        for (double t : o.output_times)
        {
            double e = std::exp(-p.a1 * t);
            double exact = u1 * e / (1 - alpha * u1 * (1 - e) / p.a1);
            double rel = std::abs(sol.V1[sol.index_of(t)] - exact) / std::abs(exact);
            worst = std::max(worst, rel);
            r.data["rel_err"].push_back({{"u1", u1}, {"t", t}, {"rel", rel}});
        }
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.data["max_rel_err"] = worst;
    r.pass = worst <= 1e-8 && r.seconds < 1;
    r.detail = "max rel err " + num(worst) + " (tol 1e-8), " + num(r.seconds)
               + " s (limit 1 s), solver tol 1e-12";
    return r;
}

//---------------------------------------------------------------------------//
CriterionResult charfn_consistency(Context const& ctx)
{
    CriterionResult r{2, "MC characteristic function vs Riccati", true, "", 0, {}};
    std::vector<std::pair<cplx, cplx>> probes = {
        {cplx(-0.5, 0), cplx(0, 0)},    {cplx(-1, 0), cplx(0, 0)},
        {cplx(0, 0), cplx(0, 0.5)},     {cplx(0, 0.5), cplx(0, 0.5)},
        {cplx(-0.25, 0.5), cplx(0, -0.5)}, {cplx(0, 1), cplx(0, -1)},
    };
    double worst_ratio = 0, worst_time = 0;
    for (std::string name : {"cir_ou.json", "jump_cbi_ou.json", "gamma_imm.json"})
    {
        auto p = ctx.model(name);
        auto t0 = Clock::now();
        auto cfg = ctx.config(1e-3, 1, ctx.opts.paths, "c2:" + name);
        cfg.eps_trunc = 0.01;
        auto e = simulate_paths(p, 1, 0.5, cfg);
        RiccatiSolver s(p);
        nlohmann::json jm;
        for (auto [u1, u2] : probes)
        {
            double se_re = 0, se_im = 0;
            auto val = [&](std::size_t i) { return std::exp(u1 * e.y(0, i) + u2 * e.z(0, i)); };
            double re = mean_of(e.n_paths, [&](std::size_t i) { return val(i).real(); }, &se_re);
            double im = mean_of(e.n_paths, [&](std::size_t i) { return val(i).imag(); }, &se_im);
            cplx cf = s.char_fn(1, 1, 0.5, UPoint(u1, u2));
            double diff = std::abs(cplx(re, im) - cf);
            double se = std::hypot(se_re, se_im);
            double ratio = se > 0 ? diff / se : (diff == 0 ? 0 : INFINITY);
            worst_ratio = std::max(worst_ratio, ratio);
            if (!(diff <= 3 * se))
                r.pass = false;
            jm.push_back({{"u1", {u1.real(), u1.imag()}},
                          {"u2", {u2.real(), u2.imag()}},
                          {"mc", {re, im}},
                          {"riccati", {cf.real(), cf.imag()}},
                          {"se", se}});
        }
        double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        worst_time = std::max(worst_time, secs);
        r.seconds += secs;
        r.data[name] = jm;
    }
    if (worst_time >= 120)
        r.pass = false;
    r.detail = "worst |MC - cf| / se = " + num(worst_ratio)
               + " (limit 3), slowest model " + num(worst_time) + " s (limit 120 s)";
    return r;
}

//---------------------------------------------------------------------------//
void coupled_criteria(Context const& ctx, std::vector<CriterionResult>& out, bool want3, bool want4)
{
    auto p = ctx.model("jump_cbi_ou.json");
    XPoint x{2, 1}, y{1, 0};
    auto t0 = Clock::now();
    auto cfg = ctx.config(2.5e-3, 2, ctx.opts.paths, "c3");
    for (int k = 1; k <= 20; ++k)
        cfg.record_times.push_back(0.1 * k);
    cfg.record_times.push_back(0.25);
    auto e = simulate_coupled(p, x.x1, x.x2, y.x1, y.x2, cfg);
    double sim_secs = std::chrono::duration<double>(Clock::now() - t0).count();

    if (want3)
    {
        CriterionResult r{3, "Moment bound on |Z(x) - Z(y)|", false, "", 0, {}};
        auto t1 = Clock::now();
        bool sub = 0 < 2 * p.b2 && 2 * p.b2 < p.a1;
        auto res = lemma31_check(p, e, x, y, {0.25, 0.5, 1, 2});
        r.seconds = sim_secs + std::chrono::duration<double>(Clock::now() - t1).count();
        r.data = res.mean.to_json();
        double worst = -INFINITY;
        for (auto const& row : res.mean.rows)
            worst = std::max(worst, (row.empirical - row.bound) / std::max(row.se, 1e-300));
        r.pass = sub && !res.mean.any_violation() && r.seconds < 180;
        r.detail = "max (E|dZ| - bound) / se = " + num(worst) + " (limit 3), "
                   + num(r.seconds) + " s (limit 180 s)";
        out.push_back(r);
    }
    if (want4)
    {
        CriterionResult r{4, "Coupling order and mean", true, "", sim_secs, {}};
        std::size_t bad = 0;
        for (std::size_t i = 0; i < e.Yx.size(); ++i)
            bad += e.Yx[i] < e.Yy[i];
        double worst = 0;
        for (double t : {0.5, 1.0, 2.0})
        {
            std::size_t k = e.time_index(t);
            double se = 0;
            double m = mean_of(e.n_paths, [&](std::size_t i) {
                return e.Yx[e.at(k, i)] - e.Yy[e.at(k, i)];
            }, &se);
            double exact = (x.x1 - y.x1) * std::exp(-p.a1 * t);
            double ratio = std::abs(m - exact) / se;
            worst = std::max(worst, ratio);
            if (!(std::abs(m - exact) <= 3 * se))
                r.pass = false;
            r.data["mean"].push_back({{"t", t}, {"mc", m}, {"se", se}, {"exact", exact}});
        }
        r.data["order_violations"] = bad;
        r.data["checked_points"] = e.Yx.size();
        if (bad != 0)
            r.pass = false;
        r.detail = std::to_string(bad) + " order violations over "
                   + std::to_string(e.Yx.size()) + " path-times, worst mean gap "
                   + num(worst) + " se (limit 3)";
        out.push_back(r);
    }
}

//---------------------------------------------------------------------------//
CriterionResult vbar_closed_form(Context const&)
{
    CriterionResult r{5, "vbar closed form", false, "", 0, {}};
    auto t0 = Clock::now();
    ModelParams p;
    p.a1 = 2;
    p.alpha[0][0] = 1;
    RiccatiSolver s(p);
    auto tab = s.vbar_table(0.01, 10, 41);
    double worst = 0;
    bool monotone = true;
    for (std::size_t i = 0; i < tab.t.size(); ++i)
    {
        double exact = 2 / std::expm1(2 * tab.t[i]);
        worst = std::max(worst, std::abs(tab.v[i] - exact) / tab.v[i]);
        if (i > 0 && !(tab.v[i] < tab.v[i - 1]))
            monotone = false;
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.data = {{"points", tab.t.size()}, {"max_rel_err", worst}, {"monotone", monotone}};
    r.pass = worst <= 1e-8 && monotone;
    r.detail = "max rel err " + num(worst) + " (tol 1e-8) over 41 log-spaced t, "
               + (monotone ? "strictly decreasing" : "NOT decreasing");
    return r;
}

//---------------------------------------------------------------------------//
CriterionResult coalescence_vs_vbar(Context const& ctx)
{
    CriterionResult r{6, "Coalescence vs vbar", false, "", 0, {}};
    auto p = ctx.model("cir_ou.json");
    auto t0 = Clock::now();
    auto cfg = ctx.config(1e-2, 4, ctx.opts.paths, "c6");
    auto rep = coalescence_curve(p, 2, 1, {0.5, 1, 2, 4}, cfg);
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.data = rep.to_json();
    double worst = -INFINITY;
    for (auto const& row : rep.rows)
        worst = std::max(worst, row.empirical - row.bound - 3 * row.se);
    r.pass = !rep.any_violation();
    double bias = rep.constants[1].second;
    r.detail = "max (P - bound - 3 se) = " + num(worst) + " (allowance: coal_tol bias "
               + num(bias) + ")";
    return r;
}

//---------------------------------------------------------------------------//
CriterionResult stationary_law(Context const& ctx)
{
    CriterionResult r{7, "Stationary law", true, "", 0, {}};
    auto p = ctx.model("cir_ou.json");
    auto t0 = Clock::now();
    RiccatiSolver s(p);
    double worst = 0;
    for (double u1 : {-0.25, -1.0, -4.0})
    {
        double closed = s.stationary_transform_closed(u1);
        double ode = s.stationary_transform(UPoint(u1, 0)).value.real();
        worst = std::max(worst, std::abs(closed - ode));
        r.data["transform"].push_back({{"u1", u1}, {"closed", closed}, {"ode", ode}});
    }
    if (!(worst <= 1e-6))
        r.pass = false;
    double T = 40 / std::min(p.a1, p.b2);
    auto cfg = ctx.config(2e-2, T, ctx.opts.paths / 2, "c7");
    auto m = stationary_moments(p, {1, 0.5}, cfg);
    auto const& last = m.by_horizon.back();
    r.data["delta1_hat"] = last.delta1;
    r.data["delta1_se"] = last.delta1_se;
    r.data["delta1"] = m.delta1_exact;
    r.data["delta2_hat"] = last.delta2;
    if (!m.delta1_within_3se)
        r.pass = false;
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.detail = "max |closed - ode| = " + num(worst) + " (tol 1e-6), |D1_hat - D1| = "
               + num(std::abs(last.delta1 - m.delta1_exact)) + " vs 3 se = "
               + num(3 * last.delta1_se) + " at T = " + num(T);
    return r;
}

//---------------------------------------------------------------------------//
CriterionResult tv_decay(Context const& ctx)
{
    CriterionResult r{8, "TV decay", true, "", 0, {}};
    auto p = ctx.model("jump_cbi_ou.json");
    auto t0 = Clock::now();
    auto a = check_A(p, {1e-3, 1e-2, 0.1, 1}, 100);
    auto cp = check_Cprime(p, 0.1, {1e-1, 1e-2, 1e-3, 1e-4});
    r.data["condition_A"] = to_string(a.verdict);
    r.data["condition_Cprime"] = to_string(cp.verdict);
    bool conditions = a.verdict == Verdict::holds && cp.verdict == Verdict::holds;
    std::optional<Prop42Constants> c42;
    if (conditions)
        c42 = prop42_constants(p, 0.1, {1e-1, 1e-2, 1e-3, 1e-4});
    auto cfg = ctx.config(1e-2, 8, ctx.opts.paths, "c8");
    auto res = ergodicity_curve(p, {3, 2}, {1, 2, 4, 8}, cfg, c42, 20, 3);
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.data["curve"] = res.curve.to_json();
    double last = res.curve.rows.back().empirical;
    bool below = last < 2 * res.floor;
    r.pass = conditions && res.monotone && below && res.fitted_rate > 0 && r.seconds < 600;
    r.detail = std::string("A ") + to_string(a.verdict) + ", C' " + to_string(cp.verdict)
               + "; non-increasing(3 se) " + (res.monotone ? "yes" : "NO")
               + "; 2TV(8) = " + num(last) + " vs 2 x floor " + num(2 * res.floor)
               + "; rate " + num(res.fitted_rate) + " (kappa_tilde "
               + (res.kappa_tilde ? num(*res.kappa_tilde) : std::string("n/a")) + "); "
               + num(r.seconds) + " s (limit 600 s)";
    return r;
}

//---------------------------------------------------------------------------//
CriterionResult constants_regression(Context const&)
{
    CriterionResult r{9, "Constants regression", true, "", 0, {}};
    // (a1, b1, b2, alpha21, alpha22, int |z2|^2 m, C_eps, Lambda)
    double a1 = 2, b1 = 1, b2 = 0.5, a21 = 0, a22 = 0, mz = 1, ceps = 1, lam = 1;
    auto c = lemma31_constants(a1, b1, b2, a21, a22, mz);
    auto k = prop42_constants(c, b2, lam, ceps);
    ModelParams p;
    p.a1 = a1;
    p.b1 = b1;
    p.b2 = b2;
    p.alpha[1] = {a21, a22};
    p.m = LevyMeasure::atomic({{0, 1, mz}});
    auto c51 = lemma51_constants(p, 1, lam, 1);
    struct Row
    {
        char const* name;
        double got;
        double want;
    };
    std::vector<Row> rows = {
        {"C11", c.C11, 1},
        {"C12", c.C12, 0},
        {"C1", c.C1, 4},
        {"C2", c.C2, 2.0 / 3},
        {"kappa", kappa(b2), 1},
        {"kappa_tilde", k.kappa_tilde, 1.0 / 3},
        {"C_tilde", k.C_tilde, 2},
        {"C1(1)", c51.C1_t, 4 * (1 - std::exp(-1.0))},
        {"C2(1)", c51.C2_t, (1 - std::exp(-1.5)) / 1.5},
        {"C_k8", c51.C_k8, 1},
    };
    std::string bad;
    for (auto const& row : rows)
    {
        bool ok = std::abs(row.got - row.want) <= 1e-12 * std::max(1.0, std::abs(row.want));
        r.data[row.name] = row.got;
        if (!ok)
        {
            r.pass = false;
            bad += std::string(" ") + row.name;
        }
    }
    r.detail = r.pass ? "10 constants match hand values to 1e-12"
                      : "mismatch:" + bad;
    return r;
}

}  // namespace

//---------------------------------------------------------------------------//
std::vector<CriterionResult> run_suite(SuiteOptions const& opts)
{
    Context ctx{opts};
    auto want = [&](int id) {
        return opts.only.empty()
               || std::find(opts.only.begin(), opts.only.end(), id) != opts.only.end();
    };
    std::vector<CriterionResult> out;
    auto guarded = [&](int id, char const* name, std::function<void()> body) {
        try
        {
            body();
        }
        catch (std::exception const& e)
        {
            out.push_back({id, name, false, std::string("error: ") + e.what(), 0, {}});
        }
    };
    if (want(1))
        guarded(1, "Riccati vs closed forms", [&] { out.push_back(riccati_closed_form(ctx)); });
    if (want(2))
        guarded(2, "MC characteristic function vs Riccati",
                [&] { out.push_back(charfn_consistency(ctx)); });
    if (want(3) || want(4))
        guarded(3, "Coupled ensemble", [&] { coupled_criteria(ctx, out, want(3), want(4)); });
    if (want(5))
        guarded(5, "vbar closed form", [&] { out.push_back(vbar_closed_form(ctx)); });
    if (want(6))
        guarded(6, "Coalescence vs vbar", [&] { out.push_back(coalescence_vs_vbar(ctx)); });
    if (want(7))
        guarded(7, "Stationary law", [&] { out.push_back(stationary_law(ctx)); });
    if (want(8))
        guarded(8, "TV decay", [&] { out.push_back(tv_decay(ctx)); });
    if (want(9))
        guarded(9, "Constants regression", [&] { out.push_back(constants_regression(ctx)); });
    return out;
}

nlohmann::json suite_data(std::vector<CriterionResult> const& results)
{
    nlohmann::json j = nlohmann::json::array();
    for (auto const& r : results)
        j.push_back({{"id", r.id}, {"name", r.name}, {"data", r.data}});
    return j;
}

std::uint64_t suite_hash(std::vector<CriterionResult> const& results)
{
    return fnv1a(suite_data(results).dump());
}

std::string hex64(std::uint64_t h)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace affine

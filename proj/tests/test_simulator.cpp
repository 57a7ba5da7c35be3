#include <cmath>
#include <numeric>

#include "doctest.h"

#include "affine/riccati.hpp"
#include "affine/simulator.hpp"

using namespace affine;

namespace
{
ModelParams bundled(std::string const& name)
{
    return load_model(std::string(AFFINE_MODELS_DIR) + "/" + name);
}

struct Stats
{
    double mean = 0;
    double se = 0;
};

template<class F>
Stats stats(std::size_t n, F&& f)
{
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        double v = f(i);
        s += v;
        s2 += v * v;
    }
    double mean = s / double(n);
    double var = std::max(0.0, s2 / double(n) - mean * mean);
    return {mean, std::sqrt(var / double(n - 1))};
}

SimConfig config(double dt, double T, std::size_t n, std::uint64_t seed = 11)
{
    SimConfig c;
    c.dt = dt;
    c.T = T;
    c.n_paths = n;
    c.seed = seed;
    return c;
}
}  // namespace

TEST_CASE("zero branching mass stays at zero and Z is OU")
{
    ModelParams p;
    p.a1 = 1;
    p.b0 = 0.4;
    p.b2 = 0.7;
    p.sigma = 0.9;
    p.alpha = {{{0.3, 0.2}, {0.1, 0.4}}};
    auto cfg = config(1e-2, 2, 20000);
    cfg.record_times = {0.5, 1.0};
    auto e = simulate_paths(p, 0, 1.5, cfg);
    for (double y : e.Y)
        CHECK(y == 0.0);
    for (double t : {0.5, 1.0, 2.0})
    {
        std::size_t r = e.time_index(t);
        auto s = stats(e.n_paths, [&](std::size_t i) { return e.z(r, i); });
        double decay = std::exp(-p.b2 * t);
        double mean = decay * 1.5 - p.b0 * (1 - decay) / p.b2;
        CHECK(std::abs(s.mean - mean) < 3 * s.se);
    }
}

TEST_CASE("deterministic skeleton follows the explicit ODE")
{
    ModelParams p;
    p.a1 = 1.5;
    p.a2 = 0.6;
    p.b0 = 0.2;
    p.b1 = 0.3;
    p.b2 = 0.8;
    double dt = 1e-3;
    auto e = simulate_paths(p, 2.0, -1.0, config(dt, 3, 3));
    double Y = 0.6 / 1.5 + (2.0 - 0.4) * std::exp(-1.5 * 3);
    for (std::size_t i = 0; i < e.n_paths; ++i)
    {
        CHECK(std::abs(e.y(0, i) - Y) < 5 * dt);
        CHECK(e.y(0, i) == e.y(0, 0));
    }
}

TEST_CASE("CIR mean matches the closed-form CBI mean")
{
    auto p = bundled("cir_ou.json");
    auto cfg = config(2e-3, 1, 20000);
    auto e = simulate_paths(p, 1.0, 0.5, cfg);
    auto s = stats(e.n_paths, [&](std::size_t i) { return e.y(0, i); });
    double exact = RiccatiSolver(p).cbi_mean(1, 1.0);
    CHECK(std::abs(s.mean - exact) < 3 * s.se);
    for (double y : e.Y)
        CHECK(y >= 0);
}

TEST_CASE("infinite activity needs truncation")
{
    auto p = bundled("gamma_imm.json");
    CHECK_THROWS_AS(simulate_paths(p, 1, 0, config(1e-2, 1, 10)), ConfigError);

    for (auto mode : {SmallJumpMode::drop_compensate, SmallJumpMode::gaussian_approx})
    {
        auto cfg = config(2e-3, 1, 20000);
        cfg.eps_trunc = 0.01;
        cfg.small_jump_mode = mode;
        auto e = simulate_paths(p, 1.0, 0.0, cfg);
        CHECK_FALSE(e.small_jump_note.empty());
        auto s = stats(e.n_paths, [&](std::size_t i) { return e.y(0, i); });
        double exact = RiccatiSolver(p).cbi_mean(1, 1.0);
        CHECK(std::abs(s.mean - exact) < 3 * s.se);
    }
}

TEST_CASE("configuration errors")
{
    auto p = bundled("cir_ou.json");
    CHECK_THROWS_AS(simulate_paths(p, 1, 0, config(0, 1, 10)), ConfigError);
    CHECK_THROWS_AS(simulate_paths(p, 1, 0, config(0.5, 0.1, 10)), ConfigError);
    auto cfg = config(0.1, 1, 10);
    cfg.record_times = {0.55};
    CHECK_THROWS_AS(simulate_paths(p, 1, 0, cfg), ConfigError);
    cfg.record_times = {};
    cfg.coal_tol = 0.0;
    CHECK_THROWS_AS(simulate_coupled(p, 1, 0, 0, 0, cfg), ConfigError);
    CHECK_THROWS_AS(simulate_paths(p, -1, 0, config(0.1, 1, 10)), ConfigError);
    CHECK_THROWS_AS(small_jump_mode_from_string("nope"), ConfigError);
}

TEST_CASE("results do not depend on the thread count")
{
    auto p = bundled("jump_cbi_ou.json");
    auto cfg = config(1e-2, 1, 257, 42);
    cfg.record_times = {0.5};
    auto a = simulate_paths(p, 1, 0.5, cfg);
    cfg.threads = 4;
    auto b = simulate_paths(p, 1, 0.5, cfg);
    CHECK(a.Y == b.Y);
    CHECK(a.Z == b.Z);

    auto ca = simulate_coupled(p, 2, 1, 1, 0, cfg);
    cfg.threads = 1;
    auto cb = simulate_coupled(p, 2, 1, 1, 0, cfg);
    CHECK(ca.Yx == cb.Yx);
    CHECK(ca.Zx == cb.Zx);
    CHECK(ca.varsigma == cb.varsigma);

    cfg.seed = 43;
    auto c = simulate_paths(p, 1, 0.5, cfg);
    CHECK(c.Y != a.Y);
}

TEST_CASE("coupled ensemble structure")
{
    auto p = bundled("jump_cbi_ou.json");
    auto cfg = config(1e-2, 2, 2000);
    cfg.record_times = {0.5, 1.0, 1.5};

    auto same = simulate_coupled(p, 1, 0.3, 1, 0.3, cfg);
    for (std::size_t i = 0; i < same.n_paths; ++i)
        CHECK(same.varsigma[i] == 0);
    CHECK(same.Yx == same.Yy);
    CHECK(same.Zx == same.Zy);

    auto e = simulate_coupled(p, 2, 1, 1, 0, cfg);
    auto alone = simulate_paths(p, 1, 0, cfg);
    CHECK(e.Yy == alone.Y);
    CHECK(e.Zy == alone.Z);
    CHECK_FALSE(e.swapped);

    std::size_t merged_late = 0;
    for (std::size_t i = 0; i < e.n_paths; ++i)
    {
        for (std::size_t r = 0; r < e.times.size(); ++r)
            CHECK(e.Yx[e.at(r, i)] >= e.Yy[e.at(r, i)]);
        if (e.varsigma[i] <= 0.5)
        {
            ++merged_late;
            std::size_t r1 = e.time_index(1.0), r2 = e.time_index(2.0);
            CHECK(e.Yx[e.at(r2, i)] == e.Yy[e.at(r2, i)]);
            double d1 = e.Zx[e.at(r1, i)] - e.Zy[e.at(r1, i)];
            double d2 = e.Zx[e.at(r2, i)] - e.Zy[e.at(r2, i)];
            CHECK(d2 == doctest::Approx(d1 * std::exp(-p.b2)).epsilon(1e-9));
        }
    }
    CHECK(merged_late > 0);

    auto sw = simulate_coupled(p, 1, 0, 2, 1, cfg);
    CHECK(sw.swapped);
    CHECK(sw.Yy == e.Yx);
    CHECK(sw.Zx == e.Zy);
}

TEST_CASE("mean of the coupled difference decays at rate a1")
{
    auto p = bundled("jump_cbi_ou.json");
    auto cfg = config(2e-3, 2, 20000);
    cfg.record_times = {0.5, 1.0};
    auto e = simulate_coupled(p, 2, 1, 1, 0, cfg);
    for (double t : {0.5, 1.0, 2.0})
    {
        std::size_t r = e.time_index(t);
        auto s = stats(e.n_paths, [&](std::size_t i) {
            return std::exp(p.a1 * t) * (e.Yx[e.at(r, i)] - e.Yy[e.at(r, i)]);
        });
        CHECK(std::abs(s.mean - 1.0) < 3 * s.se);
    }
}

TEST_CASE("MC characteristic function matches the Riccati solution")
{
    auto p = bundled("jump_cbi_ou.json");
    auto e = simulate_paths(p, 1, 0.5, config(2e-3, 1, 20000, 5));
    RiccatiSolver solver(p);
    for (auto [u1, u2] : {std::pair{cplx(-0.5, 0), cplx(0, 0)},
                          std::pair{cplx(0, 1), cplx(0, -0.5)}})
    {
        std::vector<cplx> v(e.n_paths);
        for (std::size_t i = 0; i < e.n_paths; ++i)
            v[i] = std::exp(u1 * e.y(0, i) + u2 * e.z(0, i));
        auto re = stats(v.size(), [&](std::size_t i) { return v[i].real(); });
        auto im = stats(v.size(), [&](std::size_t i) { return v[i].imag(); });
        cplx cf = solver.char_fn(1, 1, 0.5, UPoint(u1, u2));
        double se = std::hypot(re.se, im.se);
        CHECK(std::abs(cplx(re.mean, im.mean) - cf) < 3 * se);
    }
}

TEST_CASE("halving dt moves the mean by less than one standard error")
{
    auto p = bundled("cir_ou.json");
    auto a = simulate_paths(p, 1, 0.5, config(1e-2, 1, 20000, 3));
    auto b = simulate_paths(p, 1, 0.5, config(5e-3, 1, 20000, 3));
    auto sa = stats(a.n_paths, [&](std::size_t i) { return a.y(0, i); });
    auto sb = stats(b.n_paths, [&](std::size_t i) { return b.y(0, i); });
    CHECK(std::abs(sa.mean - sb.mean) < sa.se);
    auto za = stats(a.n_paths, [&](std::size_t i) { return a.z(0, i); });
    auto zb = stats(b.n_paths, [&](std::size_t i) { return b.z(0, i); });
    CHECK(std::abs(za.mean - zb.mean) < za.se);
}

TEST_CASE("empirical distributions")
{
    auto p = bundled("cir_ou.json");
    auto cfg = config(1e-2, 1, 1);
    auto one = empirical_at(simulate_paths(p, 1, 0, cfg), 1.0);
    CHECK(one.size() == 1);
    CHECK(one.w[0] == 1.0);

    cfg.n_paths = 999;
    cfg.record_times = {0.5};
    auto e = simulate_paths(p, 1, 0, cfg);
    auto d = empirical_at(e, 0.5);
    CHECK(std::accumulate(d.w.begin(), d.w.end(), 0.0) == doctest::Approx(1).epsilon(1e-12));
    CHECK_THROWS_AS(empirical_at(e, 0.3), TimeNotRecorded);

    // weighted sum against a reversed running accumulator
    double m1 = 0, m2 = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
        m1 += d.w[i] * d.Y[i];
    for (std::size_t i = d.size(); i-- > 0;)
        m2 += (d.Y[i] - m2) / double(d.size() - i);
    CHECK(std::abs(m1 - m2) < 1e-12);

    auto c = simulate_coupled(p, 2, 0, 1, 0, cfg);
    auto dx = empirical_at(c, 0.5, true);
    auto dy = empirical_at(c, 0.5, false);
    CHECK(dx.size() == 999);
    for (std::size_t i = 0; i < dx.size(); ++i)
        CHECK(dx.Y[i] >= dy.Y[i]);
}

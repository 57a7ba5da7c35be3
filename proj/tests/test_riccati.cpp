#include <cmath>

#include "doctest.h"

#include "affine/riccati.hpp"

using namespace affine;

namespace
{
constexpr cplx I(0, 1);

ModelParams cir(double a1, double alpha, double a2)
{
    ModelParams p;
    p.a1 = a1;
    p.a2 = a2;
    p.b2 = 1;
    p.alpha[0][0] = 0.6 * alpha;
    p.alpha[0][1] = 0.4 * alpha;
    return p;
}

cplx cir_V1(double t, cplx u, double a1, double alpha)
{
    double e = std::exp(-a1 * t);
    return u * e / (1.0 - alpha * u * (1 - e) / a1);
}

ModelParams jump_model()
{
    ModelParams p;
    p.a1 = 2;
    p.a2 = 0.5;
    p.b0 = 0.2;
    p.b1 = 0.5;
    p.b2 = 0.5;
    p.sigma = 0.5;
    p.alpha = {{{0.5, 0}, {0.25, 0}}};
    p.m = LevyMeasure::atomic({{0.5, 0.5, 1}, {1, -0.5, 0.5}});
    auto f2 = LevyMeasure::density(
        Expression::parse_1d("exp(-z^2/2)/sqrt(2*pi)", 1), {0, 0, -8, 8}, 1, 64);
    p.n = LevyMeasure::product(LevyMeasure::atomic({{1, 0, 0.5}}), f2);
    return p;
}
}  // namespace

TEST_CASE("zero input stays at zero")
{
    RiccatiSolver s(jump_model());
    auto sol = s.solve_V(UPoint(0, 0), 3.0);
    for (std::size_t i = 0; i < sol.t.size(); ++i)
    {
        CHECK(sol.V1[i] == cplx(0));
        CHECK(sol.psi_accum[i] == cplx(0));
    }
    CHECK(s.char_fn(2.0, 1.0, 0.3, UPoint(0, 0)) == cplx(1));
}

TEST_CASE("solution grid invariants")
{
    RiccatiSolver s(jump_model());
    UPoint u(cplx(-0.5, 0.4), cplx(0, 1.2));
    RiccatiOptions opts;
    opts.output_times = {0.5, 1.0, 1.5};
    auto sol = s.solve_V(u, 2.0, opts);
    CHECK(sol.V1.front() == u.u1());
    CHECK(sol.psi_accum.front() == cplx(0));
    for (std::size_t i = 0; i < sol.t.size(); ++i)
    {
        CHECK(sol.V1[i].real() <= 1e-9);
        CHECK(std::abs(sol.V2[i] - std::exp(-0.5 * sol.t[i]) * u.u2()) < 1e-15);
    }
    CHECK(sol.t[sol.index_of(1.0)] == 1.0);
    CHECK_THROWS_AS(sol.index_of(0.123456), TimeNotRecorded);
    CHECK(sol.stats.accepted > 0);
}

TEST_CASE("CIR closed form")
{
    double a1 = 2, alpha = 0.5, a2 = 0.7;
    RiccatiSolver s(cir(a1, alpha, a2));
    for (double u1 : {-1.5, -0.1, -20.0})
    {
        auto sol = s.solve_V(UPoint(u1, 0), 4.0);
        for (std::size_t i = 0; i < sol.t.size(); ++i)
        {
            cplx exact = cir_V1(sol.t[i], u1, a1, alpha);
            CHECK(std::abs(sol.V1[i] - exact) < 1e-8);
            cplx psi = a2 / alpha
                       * std::log((a1 - alpha * exact) / (a1 - alpha * u1));
            CHECK(std::abs(sol.psi_accum[i] - psi) < 1e-8);
        }
    }
    // complex u1
    cplx u1(-0.3, 2.0);
    auto sol = s.solve_V(UPoint(u1, 0), 2.0);
    CHECK(std::abs(sol.V1.back() - cir_V1(2.0, u1, a1, alpha)) < 1e-8);
}

TEST_CASE("linear branching")
{
    ModelParams p;
    p.a1 = 2;
    RiccatiSolver s(p);
    auto sol = s.solve_V(UPoint(-1, 0), 3.0);
    for (std::size_t i = 0; i < sol.t.size(); ++i)
        CHECK(std::abs(sol.V1[i] + std::exp(-2 * sol.t[i])) < 1e-9);
}

TEST_CASE("char_fn basics and the OU oracle")
{
    RiccatiSolver s(jump_model());
    UPoint u(cplx(-0.2, 0.3), cplx(0, -0.7));
    cplx at0 = s.char_fn(0, 1.5, -0.5, u);
    CHECK(std::abs(at0 - std::exp(1.5 * u.u1() - 0.5 * u.u2())) < 1e-15);

    ModelParams ou;
    ou.b0 = 0.3;
    ou.b2 = 0.8;
    ou.sigma = 1.1;
    RiccatiSolver so(ou);
    for (double theta : {0.5, -2.0})
    {
        for (double t : {0.3, 2.0})
        {
            double x2 = 0.7, e = std::exp(-ou.b2 * t);
            cplx lc = I * theta * e * x2 - I * theta * ou.b0 * (1 - e) / ou.b2
                      - ou.sigma * ou.sigma * theta * theta
                            * (1 - std::exp(-2 * ou.b2 * t)) / (4 * ou.b2);
            cplx got = std::log(so.char_fn(t, 0, x2, UPoint(0, I * theta)));
            CHECK(std::abs(got - lc) < 1e-8);
        }
    }
}

TEST_CASE("flow property")
{
    RiccatiSolver s(jump_model());
    double b2 = 0.5;
    for (auto [t, sd] : {std::pair{0.4, 0.7}, std::pair{1.3, 0.2}})
    {
        UPoint u(cplx(-0.8, 1.1), cplx(0, 0.9));
        cplx whole = s.solve_V(u, t + sd).V1.back();
        auto first = s.solve_V(u, sd);
        UPoint mid(first.V1.back(), std::exp(-b2 * sd) * u.u2());
        cplx two = s.solve_V(mid, t).V1.back();
        CHECK(std::abs(whole - two) < 1e-7);
    }
}

TEST_CASE("characteristic function bounds and long-time limit")
{
    auto p = jump_model();
    RiccatiSolver s(p);
    for (double th1 : {-2.0, 0.5, 3.0})
    {
        for (double th2 : {-1.0, 2.0})
        {
            UPoint u(I * th1, I * th2);
            CHECK(std::abs(s.char_fn(1.0, 2.0, 1.0, u)) <= 1 + 1e-12);
        }
    }
    UPoint u(cplx(-0.5, 0.5), cplx(0, 0.8));
    double T = 40 / std::min(p.a1, p.b2);
    cplx cf = s.char_fn(T, 2.0, 1.0, u);
    auto st = s.stationary_transform(u);
    CHECK(std::abs(cf - st.value) < 1e-4);
}

TEST_CASE("vbar")
{
    ModelParams quad;
    quad.alpha[0][0] = 1;  // phi0 = x^2
    RiccatiSolver sq(quad);
    for (double t : {0.01, 0.5, 3.0})
        CHECK(sq.vbar(t) == doctest::Approx(1 / t).epsilon(1e-9));

    ModelParams logi;
    logi.a1 = 2;
    logi.alpha[0][0] = 1;
    RiccatiSolver sl(logi);
    auto tab = sl.vbar_table(1e-3, 10, 25);
    for (std::size_t i = 0; i < tab.t.size(); ++i)
    {
        double exact = 2 / std::expm1(2 * tab.t[i]);
        CHECK(std::abs(tab.v[i] - exact) < 1e-8 * exact);
        if (i > 0)
            CHECK(tab.v[i] < tab.v[i - 1]);
    }
    for (double t : {0.05, 0.4, 2.0})
        CHECK(sl.vbar(2 * t) < sl.vbar(t));

    ModelParams lin;
    lin.a1 = 2;
    RiccatiSolver slin(lin);
    CHECK_THROWS_AS(slin.vbar(1.0), ConditionAViolated);
    CHECK_THROWS_AS(sl.vbar(0), DomainError);
}

TEST_CASE("stationary transforms")
{
    RiccatiSolver s(jump_model());
    CHECK(std::abs(s.stationary_transform(UPoint(0, 0)).value - 1.0) < 1e-14);

    ModelParams ou;
    ou.a1 = 1;
    ou.b0 = 0.3;
    ou.b2 = 0.8;
    ou.sigma = 1.1;
    RiccatiSolver so(ou);
    double theta = 1.7;
    cplx exact = std::exp(-I * theta * ou.b0 / ou.b2
                          - ou.sigma * ou.sigma * theta * theta / (4 * ou.b2));
    CHECK(std::abs(so.stationary_transform(UPoint(0, I * theta)).value - exact)
          < 1e-9);

    double a1 = 2, alpha = 0.5, a2 = 0.7;
    RiccatiSolver sc(cir(a1, alpha, a2));
    for (double u1 : {-0.5, -3.0})
    {
        double gamma_lt = std::pow(1 - alpha * u1 / a1, -a2 / alpha);
        auto st = sc.stationary_transform(UPoint(u1, 0));
        CHECK(std::abs(st.value - gamma_lt) < 1e-9);
        CHECK(st.horizon > 0);
        CHECK(std::abs(sc.stationary_transform_closed(u1) - gamma_lt) < 1e-6);
    }

    for (double u1 : {-0.2, -1.0, -4.0})
    {
        double closed = s.stationary_transform_closed(u1);
        double ode = s.stationary_transform(UPoint(u1, 0)).value.real();
        CHECK(std::abs(closed - ode) < 1e-6);
    }
    CHECK(s.stationary_transform_closed(0) == 1.0);

    double h = 1e-5;
    double slope = (1 - s.stationary_transform_closed(-h)) / h;
    CHECK(slope == doctest::Approx(s.delta1()).epsilon(1e-4));

    ModelParams bad = jump_model();
    bad.b2 = 0;
    CHECK_THROWS_AS(RiccatiSolver(bad).stationary_transform(UPoint(-1, 0)),
                    DomainError);
}

TEST_CASE("delta1, gamma and the CBI mean")
{
    ModelParams p;
    p.a1 = 2;
    p.a2 = 1;
    RiccatiSolver s(p);
    CHECK(s.delta1() == 0.5);
    CHECK(s.cbi_mean(0, 1.7) == 1.7);
    CHECK(s.cbi_mean(1, 1) == doctest::Approx(0.567668).epsilon(1e-6));
    CHECK(s.cbi_mean(200, 1) == doctest::Approx(s.gamma() / p.a1));

    ModelParams z;
    z.a1 = 1;
    CHECK(RiccatiSolver(z).delta1() == 0);

    ModelParams q;
    q.a1 = 1;
    q.n = LevyMeasure::atomic({{3, 0, 1}});
    CHECK(RiccatiSolver(q).delta1() == 3);
}

TEST_CASE("solver errors")
{
    RiccatiSolver s(jump_model());
    CHECK_THROWS_AS(s.solve_V(UPoint(-1, 0), 0), DomainError);
    RiccatiOptions tiny;
    tiny.max_steps = 3;
    CHECK_THROWS_AS(s.solve_V(UPoint(cplx(-1, 5), 0), 50, tiny),
                    StiffnessFailure);
    CHECK_THROWS_AS(UPoint(0.5, 0), InvalidUPoint);
}

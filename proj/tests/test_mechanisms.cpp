#include <cmath>
#include <numbers>

#include "doctest.h"

#include "affine/mechanisms.hpp"

using namespace affine;

namespace
{
constexpr cplx I(0, 1);

double Phi(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

LevyMeasure normal_z2(double weight = 1)
{
    auto f2 = LevyMeasure::density(
        Expression::parse_1d("exp(-z^2/2)/sqrt(2*pi)", 1), {0, 0, -9, 9}, 1, 64);
    return LevyMeasure::product(LevyMeasure::atomic({{1, 0, weight}}), f2);
}

ModelParams zero_model()
{
    ModelParams p;
    p.a1 = 2;
    p.b2 = 0.5;
    return p;
}

// brute-force midpoint sum on a fine grid
template<class F>
double fine_sum(F f, double lo, double hi, int n = 2000000)
{
    double h = (hi - lo) / n, s = 0;
    for (int i = 0; i < n; ++i)
        s += f(lo + (i + 0.5) * h);
    return s * h;
}
}  // namespace

TEST_CASE("U membership")
{
    CHECK_NOTHROW(UPoint(cplx(-1, 2), cplx(0, 3)));
    CHECK_NOTHROW(UPoint(cplx(1e-13, 0), cplx(1e-13, 1)));
    CHECK_THROWS_AS(UPoint(cplx(0.1, 0), 0), InvalidUPoint);
    CHECK_THROWS_AS(UPoint(0, cplx(0.5, 1)), InvalidUPoint);
}

TEST_CASE("exp minus one minus identity")
{
    for (double x : {1e-9, 1e-4, 0.3, 0.49, 0.51, 2.0, -3.0})
        CHECK(exp_m1_m_id(x) == doctest::Approx(std::expm1(x) - x).epsilon(1e-12));
    CHECK(exp_m1_m_id(1e-9) == doctest::Approx(0.5e-18).epsilon(1e-9));
    cplx w(0.1, -0.2);
    CHECK(std::abs(exp_m1_m_id(w) - (std::exp(w) - 1.0 - w)) < 1e-15);
}

TEST_CASE("phi")
{
    ModelParams p;
    CHECK(phi(UPoint(0, 0), p) == cplx(0));
    p.a1 = 2;
    CHECK(phi(UPoint(-1, 0), p) == cplx(2));
    p.a1 = 0;
    p.m = LevyMeasure::atomic({{1, 0, 1}});
    CHECK(std::abs(phi(UPoint(-1, 0), p) - std::exp(-1.0)) < 1e-15);
}

TEST_CASE("psi")
{
    ModelParams p;
    CHECK(psi(UPoint(0, 0), p) == cplx(0));
    p.a2 = 1;
    CHECK(psi(UPoint(-3, 0), p) == cplx(-3));
    p = ModelParams{};
    p.sigma = 2;
    CHECK(std::abs(psi(UPoint(0, I), p) - cplx(-2)) < 1e-15);
}

TEST_CASE("phi0, phi0_tilde and P")
{
    ModelParams p;
    CHECK(phi0(0, p) == 0);
    p.a1 = 2;
    p.alpha[0][0] = 0.4;
    p.alpha[0][1] = 0.6;
    CHECK(phi0(1, p) == doctest::Approx(3));
    CHECK(phi0_tilde(-1, p) == doctest::Approx(3));
    CHECK_THROWS_AS(phi0(-1, p), DomainError);
    CHECK_THROWS_AS(phi0_tilde(1, p), DomainError);

    ModelParams q;
    q.m = LevyMeasure::atomic({{1, 0, 1}});
    CHECK(phi0(1, q) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

    ModelParams r;
    r.a2 = 1;
    CHECK(P_mech(0, r) == 0);
    CHECK(P_mech(-2, r) == -2);
    CHECK(phi0_tilde(0, r) == 0);
    CHECK_THROWS_AS(P_mech(1, r), DomainError);
}

TEST_CASE("mechanism identities")
{
    ModelParams p = zero_model();
    p.alpha = {{{0.5, 0.1}, {0.2, 0.3}}};
    p.m = LevyMeasure::density(Expression::parse("exp(-z1)"), {0, 30, 0, 0},
                               64, 1);
    for (double x = -10; x <= 0; x += 0.5)
    {
        CHECK(std::abs(phi0_tilde(x, p) - phi0(-x, p)) <= 1e-10 * (1 + phi0(-x, p)));
        // m charges only z2 = 0
        CHECK(std::abs(phi(UPoint(x, 0), p).real() - phi0(-x, p))
              <= 1e-10 * (1 + phi0(-x, p)));
    }

    p.m = LevyMeasure::atomic({{0.5, 0.5, 1}, {1, -0.5, 0.5}});
    p.n = normal_z2(0.5);
    p.sigma = 0.7;
    p.b0 = 0.3;
    p.b1 = -0.4;
    p.a2 = 0.2;
    for (cplx u1 : {cplx(-0.3, 0.7), cplx(-2, -1), cplx(0, 1.5)})
    {
        for (cplx u2 : {cplx(0, 0.4), cplx(0, -2)})
        {
            cplx a = phi(UPoint(u1, u2), p);
            cplx b = phi(UPoint(std::conj(u1), std::conj(u2)), p);
            CHECK(std::abs(b - std::conj(a)) < 1e-12);
            cplx c = psi(UPoint(u1, u2), p);
            cplx d = psi(UPoint(std::conj(u1), std::conj(u2)), p);
            CHECK(std::abs(d - std::conj(c)) < 1e-12);
        }
    }
}

TEST_CASE("frozen mechanisms agree with adaptive quadrature")
{
    ModelParams p = zero_model();
    p.alpha = {{{0.5, 0}, {0.25, 0}}};
    p.m = LevyMeasure::atomic({{0.5, 0.5, 1}, {1, -0.5, 0.5}});
    p.n = normal_z2(0.5);
    p.a2 = 0.5;
    p.sigma = 0.5;
    Mechanisms mech(p);
    for (cplx u1 : {cplx(-0.5, 0.5), cplx(-3, 0), cplx(0, -2)})
    {
        for (cplx u2 : {cplx(0, 0), cplx(0, 1.5)})
        {
            CHECK(std::abs(mech.phi(u1, u2) - phi(UPoint(u1, u2), p)) < 1e-9);
            CHECK(std::abs(mech.psi(u1, u2) - psi(UPoint(u1, u2), p)) < 1e-9);
        }
    }
    for (double x : {0.0, 0.5, 4.0})
    {
        CHECK(mech.phi0(x) == doctest::Approx(phi0(x, p)).epsilon(1e-12));
        CHECK(mech.P(-x) == doctest::Approx(P_mech(-x, p)).epsilon(1e-12));
    }
}

TEST_CASE("line measures: overlap and shift TV")
{
    auto g = LineMeasure::from_levy(z2_marginal(normal_z2()));
    CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.overlap(1.0) == doctest::Approx(2 * Phi(-0.5)).epsilon(1e-9));
    CHECK(g.overlap(0.0) == doctest::Approx(g.mass()).epsilon(1e-12));
    for (double a : {-2.0, -0.3, 1e-3, 0.7, 5.0})
    {
        double ov = g.overlap(a), tv = g.tv_shift(a);
        CHECK(std::abs(ov - 0.5 * (2 * g.mass() - tv)) < 1e-8);
        CHECK(tv <= 2 * g.mass() + 1e-12);
    }

    auto at = LineMeasure::from_atoms({{0, 1}, {1, 2}, {2, 1}});
    CHECK(at.overlap(1) == 2.0);  // min(1,2) at 1 + min(2,1) at 2
    CHECK(at.overlap(0.5) == 0.0);
    CHECK(at.tv_shift(0.5) == 8.0);
    CHECK(at.matched_atoms(1) == 2);
}

TEST_CASE("condition A")
{
    ModelParams p = zero_model();
    p.alpha[0][0] = 1;  // phi0 = 2x + x^2
    auto r = check_A(p, {1e-3, 1e-2, 0.1, 1}, 100, 12);
    CHECK(r.verdict == Verdict::holds);
    double theta = r.values.at("theta");
    CHECK(theta == 1e-3);
    double Z = r.evidence.back().first;
    double exact = 0.5 * (std::log((theta + 2) / theta) - std::log((Z + 2) / Z));
    CHECK(r.evidence.back().second == doctest::Approx(exact).epsilon(1e-9));

    ModelParams lin = zero_model();  // phi0 = 2x
    CHECK(check_A(lin, {1e-3, 1}, 100).verdict == Verdict::fails);

    ModelParams neg = zero_model();
    neg.a1 = -1;
    auto rn = check_A(neg, {1e-3, 1}, 100);
    CHECK(rn.verdict == Verdict::fails);
    CHECK_FALSE(rn.notes.empty());
}

TEST_CASE("condition B")
{
    ModelParams p = zero_model();
    p.n = normal_z2();
    auto r = check_B(p, 0.1, 1.0, {-1, -0.5, 0, 0.5, 1});
    CHECK(r.verdict == Verdict::holds);
    CHECK(r.values.at("min_overlap") == doctest::Approx(2 * Phi(-0.5)).epsilon(1e-8));
    CHECK(r.values.at("C_eps") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.evidence[2].second == doctest::Approx(1.0).epsilon(1e-9));

    p.n = LevyMeasure::atomic({{1, 0.5, 1}});
    auto ra = check_B(p, 0.1, 1.0, {-0.5, 0, 0.5});
    CHECK(ra.verdict == Verdict::fails);
    CHECK_FALSE(ra.notes.empty());

    CHECK_THROWS_AS(check_B(p, 0.1, 0.5, {1.0}), DomainError);
    CHECK_THROWS_AS(check_B(p, 0, 0.5, {0.1}), DomainError);
}

TEST_CASE("condition C")
{
    std::vector<double> rhos{1e-1, 1e-2, 1e-3, 1e-4};

    // oracle: ||g - g(. - a)|| / a -> int |g'|, computed on a fine grid
    double l1_derivative = fine_sum(
        [](double z) {
            return std::abs(z) * std::exp(-z * z / 2) / std::sqrt(2 * std::numbers::pi);
        },
        -10, 10);
    ModelParams p = zero_model();
    p.n = normal_z2();
    auto r = check_C(p, 0.1, rhos);
    CHECK(r.verdict == Verdict::holds);
    CHECK(r.evidence.back().second == doctest::Approx(l1_derivative).epsilon(1e-3));
    CHECK(*r.Lambda == doctest::Approx(l1_derivative).epsilon(1e-3));
    double c_eps = r.values.at("C_eps");
    LineMeasure ne = LineMeasure::from_levy(levy_restrict_tail(p.n, 0.1));
    for (auto const& [rho, v] : r.evidence)
    {
        CHECK(*r.Lambda * rho >= ne.tv_shift(rho) - 1e-15);
        CHECK(ne.tv_shift(rho) <= 2 * c_eps + 1e-12);
    }

    ModelParams u = zero_model();
    u.n = LevyMeasure::density(Expression::parse("1"), {0.5, 0.5, 0, 1}, 1, 8);
    auto ru = check_C(u, 0.1, rhos);
    CHECK(ru.verdict == Verdict::holds);
    CHECK(ru.evidence.back().second == doctest::Approx(2.0).epsilon(1e-8));

    ModelParams a = zero_model();
    a.n = LevyMeasure::atomic({{1, 0.5, 1}});
    CHECK(check_C(a, 0.1, rhos).verdict == Verdict::fails);

    CHECK(check_Cprime(p, 0.1, rhos).verdict == Verdict::holds);
    CHECK_THROWS_AS(check_C(p, 0.1, {1e-2, 1e-1, 1e-3}), DomainError);
}

TEST_CASE("condition D")
{
    ModelParams p = zero_model();
    p.n = LevyMeasure::density(Expression::parse("1/z2^2"), {1, 1, 0, 1}, 1, 16);
    LineDensity rho0{[](double z) { return z > 0 && z <= 1 ? 1 / (z * z) : 0.0; },
                     0, 1, "1/z^2"};
    LineDensity g{[](double z) { return std::exp(-std::abs(z)); }, -40, 40,
                  "exp(-|z|)"};
    auto r = check_D(p, rho0, g, {1, 4, 16, 64}, 1);
    CHECK(r.verdict == Verdict::holds);
    CHECK(r.values.at("sigma0_infinite_plausible") == 1);
    for (auto const& [k, mass] : r.evidence)
    {
        double kk = k;
        double oracle = fine_sum(
            [kk](double z) { return std::min(kk * std::exp(-z), 1 / (z * z)); },
            0, 1);
        CHECK(mass == doctest::Approx(oracle).epsilon(1e-6));
    }

    ModelParams b = zero_model();
    b.n = LevyMeasure::density(Expression::parse("2"), {1, 1, 0, 1}, 1, 16);
    LineDensity flat{[](double) { return 1.0; }, 0, 1, "1"};
    auto rb = check_D(b, flat, g, {1, 4, 16, 64}, 1);
    CHECK(rb.verdict == Verdict::holds);
    CHECK(rb.values.at("sigma0_infinite_plausible") == 0);
    CHECK(rb.evidence.back().second == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(check_D(b, flat, g, {0, 1}, 1), DomainError);
    ModelParams small = zero_model();
    small.n = LevyMeasure::density(Expression::parse("0.5"), {1, 1, 0, 1}, 1, 16);
    CHECK_THROWS_AS(check_D(small, flat, g, {1, 2}, 1), DominationViolated);
}

TEST_CASE("condition report json")
{
    ModelParams p = zero_model();
    p.n = normal_z2();
    auto j = to_json(check_C(p, 0.1, {1e-1, 1e-2, 1e-3}));
    CHECK(j["condition"] == "C");
    CHECK(j["verdict"] == "holds");
    CHECK(j["evidence"].size() == 3);
    CHECK(j.contains("Lambda"));
}

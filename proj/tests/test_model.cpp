#include <cmath>
#include <numbers>

#include "doctest.h"

#include "affine/model.hpp"

using namespace affine;
using nlohmann::json;

namespace
{
ModelParams base()
{
    ModelParams p;
    p.a1 = 2;
    p.b2 = 0.5;
    return p;
}

LevyMeasure inverse_square_line()
{
    return LevyMeasure::density(Expression::parse("1/z2^2"), {0, 0, -1, 1}, 1,
                                64);
}
}  // namespace

TEST_CASE("validate: zero measures")
{
    auto r = validate(base());
    CHECK(r.all_pass());
    CHECK(r.at("m_integrability").value == 0.0);
    CHECK(r.at("n_integrability").value == 0.0);
    CHECK(r.at("n_log_moment").value == 0.0);
    CHECK(r.at("n_z1_tail_moment").value == 0.0);
    CHECK_THROWS_AS(r.at("nope"), std::out_of_range);
}

TEST_CASE("validate: subcriticality and signs")
{
    ModelParams p = base();
    p.a1 = 1;
    p.b2 = 0.6;
    auto r = validate(p);
    CHECK_FALSE(r.at("subcritical_strict").pass);
    CHECK_FALSE(r.all_pass());

    p = base();
    p.sigma = -1;
    p.alpha[1][0] = -0.1;
    r = validate(p);
    CHECK_FALSE(r.at("sigma_nonnegative").pass);
    CHECK_FALSE(r.at("alpha_nonnegative").pass);
    CHECK(r.at("a2_nonnegative").pass);
}

TEST_CASE("validate: atom arithmetic")
{
    ModelParams p = base();
    p.n = LevyMeasure::atomic({{std::numbers::e, 0, 1}});
    p.m = LevyMeasure::atomic({{0.5, 2, 1}, {3, 0, 2}});
    auto r = validate(p);
    CHECK(r.at("n_log_moment").value == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.at("n_z1_tail_moment").value == doctest::Approx(std::numbers::e));
    CHECK(r.at("n_integrability").value == 1.0);
    // m: (0.5^2 + 4) + 2 * 3
    CHECK(r.at("m_integrability").value == doctest::Approx(10.25));

    auto again = validate(p);
    for (std::size_t i = 0; i < r.checks.size(); ++i)
    {
        CHECK(r.checks[i].name == again.checks[i].name);
        CHECK(r.checks[i].value == again.checks[i].value);
    }
}

TEST_CASE("validate: densities")
{
    ModelParams p = base();
    // 0.5 e^{-z}/z: int min(1, z) n = 0.5 (1 - e^{-1}) + 0.5 E1(1)
    p.n = LevyMeasure::density(Expression::parse("0.5*exp(-z1)/z1"),
                               {0, 10, 0, 0}, 64, 1);
    auto r = validate(p);
    double e1 = 0.21938393439552029;
    double expect = 0.5 * (1 - std::exp(-1.0)) + 0.5 * (e1 - 0);
    // the domain stops at 10; E1(10) ~ 4.16e-6
    CHECK(r.at("n_integrability").value
          == doctest::Approx(expect - 0.5 * 4.156968929685324e-06).epsilon(1e-6));
    CHECK(r.at("n_integrability").pass);

    p.n = inverse_square_line();
    r = validate(p);
    CHECK(r.at("n_integrability").value == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(r.at("n_integrability").pass);
}

TEST_CASE("restrict tail: finite mass keeps the marginal")
{
    auto n = LevyMeasure::atomic({{1, 0.5, 1}, {2, 0.5, 1.5}, {1, -1, 0.5}});
    auto ne = levy_restrict_tail(n, 10.0);
    CHECK(levy_mass(ne) == doctest::Approx(3.0));
    REQUIRE(ne.atoms().size() == 2);
    CHECK(ne.atoms()[1].z2 == 0.5);
    CHECK(ne.atoms()[1].w == 2.5);
    CHECK_THROWS_AS(levy_restrict_tail(n, 0), DomainError);
}

TEST_CASE("restrict tail: infinite mass")
{
    auto n = inverse_square_line();
    CHECK(std::isinf(levy_mass(n)));
    CHECK(levy_mass(levy_restrict_tail(n, 0.5)) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(levy_mass(levy_restrict_tail(n, 2.0)) == 0.0);

    double prev = INFINITY;
    for (double eps : {0.05, 0.1, 0.2, 0.4, 0.8})
    {
        double m = levy_mass(levy_restrict_tail(n, eps));
        CHECK(m <= prev);
        CHECK(m == doctest::Approx(2 * (1 / eps - 1)).epsilon(1e-7));
        prev = m;
    }

    // same marginal from a 2-D box, uniform in z1 on [0, 2]
    auto box = LevyMeasure::density(Expression::parse("0.5/z2^2"),
                                    {0, 2, -1, 1}, 4, 64);
    CHECK(levy_mass(levy_restrict_tail(box, 0.5))
          == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("restrict tail: products")
{
    auto f1 = LevyMeasure::atomic({{1, 0, 0.5}});
    auto f2 = LevyMeasure::density(
        Expression::parse_1d("exp(-z^2/2)/sqrt(2*pi)", 1), {0, 0, -8, 8}, 1, 64);
    auto ne = levy_restrict_tail(LevyMeasure::product(f1, f2), 0.1);
    CHECK(levy_mass(ne) == doctest::Approx(0.5).epsilon(1e-8));

    auto g1 = LevyMeasure::density(Expression::parse_1d("exp(-z)/z", 0),
                                   {0, 5, 0, 0}, 64, 1);
    CHECK_THROWS_AS(levy_restrict_tail(LevyMeasure::product(g1, f2), 0.1),
                    InfiniteMass);
}

TEST_CASE("json round trip")
{
    json j = json::parse(R"js({
        "a1": 2, "a2": 0.5, "b0": 0.2, "b1": 0.5, "b2": 0.5, "sigma": 0.5,
        "alpha": [[0.5, 0], [0.25, 0]],
        "m": {"kind": "atomic", "atoms": [[0.5, 0.5, 1], [1, -0.5, 0.5]]},
        "n": {"kind": "product",
              "z1": {"kind": "atomic", "atoms": [[1, 0.5]]},
              "z2": {"kind": "density", "expr": "exp(-z^2/2)/sqrt(2*pi)",
                     "domain": [-8, 8], "nodes": 64}}
    })js");
    ModelParams p = model_from_json(j);
    CHECK(p.a21() == 0.25);
    CHECK(p.subcritical_strict());
    CHECK(levy_mass(p.n) == doctest::Approx(0.5).epsilon(1e-8));
    json back = model_to_json(p);
    ModelParams q = model_from_json(back);
    CHECK(model_to_json(q) == back);
    CHECK(levy_mass(q.m) == 1.5);
}

TEST_CASE("json errors")
{
    CHECK_THROWS_AS(model_from_json(json::parse(R"({"a1": 1})")),
                    ModelFormatError);
    CHECK_THROWS_AS(
        levy_from_json(json::parse(R"({"kind":"atomic","atoms":[[0,0,1]]})")),
        ModelFormatError);
    CHECK_THROWS_AS(levy_from_json(json::parse(R"({"kind":"weird"})")),
                    ModelFormatError);
    CHECK_THROWS_AS(levy_from_json(json::parse(
                        R"({"kind":"density","expr":"exp(","domain":[[0,1],[0,0]],"nodes":[4,1]})")),
                    ExpressionError);
    CHECK_THROWS_AS(levy_from_json(json::parse(
                        R"({"kind":"density","expr":"1","domain":[[-1,1],[0,0]],"nodes":[4,1]})")),
                    ModelFormatError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), ModelFormatError);
}

TEST_CASE("bundled models load")
{
    for (char const* name : {"cir_ou.json", "jump_cbi_ou.json", "gamma_imm.json"})
    {
        ModelParams p = load_model(std::string(AFFINE_MODELS_DIR) + "/" + name);
        CHECK(p.subcritical_strict());
        CHECK(validate(p).all_pass());
    }
}

TEST_CASE("json numbers")
{
    CHECK(json_number(INFINITY) == "inf");
    CHECK(std::isinf(number_from_json(json("inf"))));
    CHECK(number_from_json(json(1.5)) == 1.5);
}

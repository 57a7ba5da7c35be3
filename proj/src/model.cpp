#include "affine/model.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace affine
{
namespace
{
using nlohmann::json;
constexpr double inf = std::numeric_limits<double>::infinity();

std::vector<std::pair<double, double>> cells(std::vector<double> cuts,
                                             double lo)
{
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<std::pair<double, double>> out;
    double prev = lo;
    for (double c : cuts)
    {
        if (c <= prev)
            continue;
        out.emplace_back(prev, c);
        prev = c;
    }
    out.emplace_back(prev, inf);
    return out;
}

std::string format_double(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double gk_integral(std::function<double(double)> const& f, double a, double b)
{
    if (!(b > a))
        return 0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, a, b, 12, 1e-12);
}

// Marginal of a density measure whose pieces are lines z1 = c or full 2-D
// boxes. Pieces with a degenerate z2 axis are handled by the caller.
LevyMeasure density_marginal(LevyMeasure const& mu)
{
    std::vector<DensityPiece> src(mu.pieces().begin(), mu.pieces().end());
    Exclusion ex = mu.exclusion();

    std::set<double> breaks;
    for (auto const& p : src)
    {
        breaks.insert(p.box.lo2);
        breaks.insert(p.box.hi2);
    }
    std::vector<double> bv(breaks.begin(), breaks.end());
    std::vector<DensityPiece> out;
    for (std::size_t i = 0; i + 1 < bv.size(); ++i)
    {
        double a = bv[i], b = bv[i + 1];
        int n2 = 0;
        for (auto const& p : src)
        {
            if (p.box.lo2 <= a && p.box.hi2 >= b)
            {
                double frac = (b - a) / (p.box.hi2 - p.box.lo2);
                n2 = std::max(n2, std::max(1, int(std::ceil(p.n2 * frac - 1e-9))));
            }
        }
        if (n2 > 0)
            out.push_back({{0, 0, a, b}, 1, n2});
    }

    DensityFn fn = [mu, src, ex](double, double z2) {
        if (ex.abs_z2 > 0 && std::abs(z2) < ex.abs_z2)
            return 0.0;
        double total = 0;
        for (auto const& p : src)
        {
            Box const& b = p.box;
            if (!(z2 > b.lo2 && z2 <= b.hi2))
                continue;
            if (b.degenerate1())
            {
                total += mu.density_at(b.lo1, z2);
                continue;
            }
            double lo = b.lo1;
            if (ex.euclid > std::abs(z2))
                lo = std::max(lo, std::sqrt(ex.euclid * ex.euclid - z2 * z2));
            total += gk_integral(
                [&](double z1) { return mu.density_at(z1, z2); }, lo, b.hi1);
        }
        return total;
    };
    return LevyMeasure::density(std::move(fn), std::move(out),
                                "z2-marginal of " + mu.describe());
}

void check_nonneg(json const& j, char const* what)
{
    if (!j.is_number())
        throw ModelFormatError(std::string(what) + " must be a number");
}

}  // namespace

//---------------------------------------------------------------------------//
bool ValidationReport::all_pass() const
{
    return std::all_of(checks.begin(), checks.end(),
                       [](ValidationCheck const& c) { return c.pass; });
}

ValidationCheck const& ValidationReport::at(std::string const& name) const
{
    for (auto const& c : checks)
    {
        if (c.name == name)
            return c;
    }
    throw std::out_of_range("no validation check named " + name);
}

double split_integral(LevyMeasure const& mu,
                      DensityFn const& f,
                      std::vector<double> const& cuts1,
                      std::vector<double> const& cuts2)
{
    try
    {
        if (mu.is_exact())
            return levy_integral(mu, f);
        double total = 0;
        for (auto const& [lo1, hi1] : cells(cuts1, 0))
        {
            for (auto const& [lo2, hi2] : cells(cuts2, -inf))
            {
                IntegralOptions opts;
                opts.region = Box{lo1, hi1, lo2, hi2};
                total += levy_integral(mu, f, opts);
            }
        }
        return total;
    }
    catch (QuadratureError const&)
    {
        return inf;
    }
    catch (NonFiniteIntegrand const&)
    {
        return inf;
    }
}

ValidationReport validate(ModelParams const& p)
{
    ValidationReport r;
    auto finite_check = [&r](std::string name, double v, std::string thr) {
        r.checks.push_back({std::move(name), v, std::move(thr),
                            std::isfinite(v)});
    };

    finite_check(
        "m_integrability",
        split_integral(
            p.m,
            [](double z1, double z2) { return std::min(z1, z1 * z1) + z2 * z2; },
            {1}, {}),
        "int (z1 ^ z1^2 + |z2|^2) m(dz) < inf");
    finite_check("n_integrability",
                 split_integral(
                     p.n,
                     [](double z1, double z2) {
                         double a = std::abs(z2);
                         return std::min(1.0, z1) + std::min(a, a * a);
                     },
                     {1}, {-1, 1}),
                 "int (1 ^ z1 + |z2| ^ |z2|^2) n(dz) < inf");
    finite_check("n_log_moment",
                 split_integral(
                     p.n,
                     [](double z1, double) {
                         return z1 >= 1 ? std::log(z1) : 0.0;
                     },
                     {1}, {}),
                 "int_{z1>=1} log z1 n(dz) < inf");
    finite_check(
        "n_z1_tail_moment",
        split_integral(
            p.n, [](double z1, double) { return z1 > 1 ? z1 : 0.0; }, {1}, {}),
        "int_{z1>1} z1 n(dz) < inf");

    r.checks.push_back({"a2_nonnegative", p.a2, "a2 >= 0", p.a2 >= 0});
    r.checks.push_back(
        {"sigma_nonnegative", p.sigma, "sigma >= 0", p.sigma >= 0});
    double amin = std::min({p.a11(), p.a12(), p.a21(), p.a22()});
    r.checks.push_back(
        {"alpha_nonnegative", amin, "min alpha_ij >= 0", amin >= 0});
    r.checks.push_back({"subcritical_strict", 2 * p.b2, "0 < 2*b2 < a1",
                        p.subcritical_strict()});
    return r;
}

LevyMeasure z2_marginal(LevyMeasure const& mu)
{
    switch (mu.kind())
    {
        case LevyMeasure::Kind::atomic:
        {
            std::map<double, double> merged;
            for (auto const& a : mu.atoms())
                merged[a.z2] += a.w * mu.scale();
            std::vector<Atom> atoms;
            for (auto const& [z2, w] : merged)
                atoms.push_back({0, z2, w});
            return LevyMeasure::atomic(std::move(atoms));
        }
        case LevyMeasure::Kind::density:
        {
            std::set<double> lines;
            bool has_density = false;
            for (auto const& p : mu.pieces())
            {
                if (p.box.degenerate2())
                    lines.insert(p.box.lo2);
                else
                    has_density = true;
            }
            if (!lines.empty() && has_density)
            {
                throw UnsupportedMeasure(
                    "z2-marginal mixes atoms and a density: " + mu.describe());
            }
            if (has_density)
                return density_marginal(mu);
            std::vector<Atom> atoms;
            for (double c : lines)
            {
                double w = levy_mass(mu.clipped({0, inf, c, c}));
                if (!std::isfinite(w))
                    throw InfiniteMass("line z2=" + format_double(c)
                                       + " carries infinite mass");
                if (w > 0)
                    atoms.push_back({0, c, w});
            }
            return LevyMeasure::atomic(std::move(atoms));
        }
        case LevyMeasure::Kind::product:
        {
            Exclusion ex = mu.exclusion();
            if (ex.euclid > 0)
            {
                throw UnsupportedMeasure(
                    "z2-marginal of a product under a Euclidean exclusion");
            }
            LevyMeasure f2 = mu.z2_factor();
            if (ex.abs_z2 > 0)
                f2 = f2.excluding({0, ex.abs_z2});
            double m2 = levy_mass(f2);
            if (!(m2 > 0))
                return LevyMeasure();
            double m1 = levy_mass(mu.z1_factor());
            if (!std::isfinite(m1))
                throw InfiniteMass("z1 factor has infinite mass");
            return z2_marginal(f2).scaled(m1 * mu.scale());
        }
    }
    return LevyMeasure();
}

LevyMeasure levy_restrict_tail(LevyMeasure const& n, double eps)
{
    if (!(eps > 0))
        throw DomainError("eps must be > 0");
    double mass = levy_mass(n);
    if (std::isfinite(mass))
        return z2_marginal(n);
    LevyMeasure restricted = n.excluding({0, eps});
    if (!std::isfinite(levy_mass(restricted)))
    {
        throw InfiniteMass("n restricted to |z2| >= " + format_double(eps)
                           + " still has infinite mass");
    }
    return z2_marginal(restricted);
}

//---------------------------------------------------------------------------//
// JSON
//---------------------------------------------------------------------------//
json json_number(double v)
{
    if (std::isfinite(v))
        return v;
    if (std::isnan(v))
        return "nan";
    return v > 0 ? "inf" : "-inf";
}

double number_from_json(json const& j)
{
    if (j.is_number())
        return j.get<double>();
    if (j.is_string())
    {
        auto s = j.get<std::string>();
        if (s == "inf")
            return inf;
        if (s == "-inf")
            return -inf;
        if (s == "nan")
            return std::numeric_limits<double>::quiet_NaN();
    }
    throw ModelFormatError("expected a number, got " + j.dump());
}

LevyMeasure levy_from_json(json const& j, int axis)
{
    try
    {
        if (!j.is_object())
            throw ModelFormatError("measure must be an object");
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "atomic")
        {
            std::vector<Atom> atoms;
            for (auto const& a : j.at("atoms"))
            {
                if (axis < 0)
                {
                    if (a.size() != 3)
                        throw ModelFormatError("atom must be [z1, z2, w]");
                    Atom at{a[0].get<double>(), a[1].get<double>(),
                            a[2].get<double>()};
                    if (at.z1 == 0 && at.z2 == 0)
                        throw ModelFormatError("atom at the origin");
                    atoms.push_back(at);
                }
                else
                {
                    if (a.size() != 2)
                        throw ModelFormatError("1-D atom must be [z, w]");
                    double z = a[0].get<double>(), w = a[1].get<double>();
                    atoms.push_back(axis == 0 ? Atom{z, 0, w} : Atom{0, z, w});
                }
            }
            return LevyMeasure::atomic(std::move(atoms));
        }
        if (kind == "density")
        {
            std::string text = j.at("expr").get<std::string>();
            auto const& d = j.at("domain");
            auto const& nd = j.at("nodes");
            if (axis < 0)
            {
                if (d.size() != 2 || d[0].size() != 2 || d[1].size() != 2
                    || nd.size() != 2)
                {
                    throw ModelFormatError(
                        "density needs domain [[z1lo,z1hi],[z2lo,z2hi]] and "
                        "nodes [n1,n2]");
                }
                Box b{d[0][0].get<double>(), d[0][1].get<double>(),
                      d[1][0].get<double>(), d[1][1].get<double>()};
                return LevyMeasure::density(Expression::parse(text), b,
                                            nd[0].get<int>(), nd[1].get<int>());
            }
            if (d.size() != 2 || !nd.is_number_integer())
            {
                throw ModelFormatError(
                    "1-D density needs domain [lo,hi] and integer nodes");
            }
            double lo = d[0].get<double>(), hi = d[1].get<double>();
            int k = nd.get<int>();
            Box b = axis == 0 ? Box{lo, hi, 0, 0} : Box{0, 0, lo, hi};
            return LevyMeasure::density(Expression::parse_1d(text, axis), b,
                                        axis == 0 ? k : 1, axis == 0 ? 1 : k);
        }
        if (kind == "product")
        {
            if (axis >= 0)
                throw ModelFormatError("product factors must be 1-D");
            auto mu = LevyMeasure::product(levy_from_json(j.at("z1"), 0),
                                           levy_from_json(j.at("z2"), 1));
            if (j.contains("scale"))
                mu = mu.scaled(j.at("scale").get<double>());
            return mu;
        }
        throw ModelFormatError("unknown measure kind '" + kind + "'");
    }
    catch (json::exception const& e)
    {
        throw ModelFormatError(e.what());
    }
    catch (DomainError const& e)
    {
        throw ModelFormatError(e.what());
    }
}

json levy_to_json(LevyMeasure const& mu, int axis)
{
    if (mu.exclusion().active())
        throw UnsupportedMeasure("cannot serialize a measure with exclusions");
    json j;
    switch (mu.kind())
    {
        case LevyMeasure::Kind::atomic:
        {
            j["kind"] = "atomic";
            j["atoms"] = json::array();
            for (auto const& a : mu.atoms())
            {
                double w = a.w * mu.scale();
                if (axis < 0)
                    j["atoms"].push_back({a.z1, a.z2, w});
                else
                    j["atoms"].push_back({axis == 0 ? a.z1 : a.z2, w});
            }
            return j;
        }
        case LevyMeasure::Kind::density:
        {
            if (!mu.expression() || mu.pieces().size() != 1)
            {
                throw UnsupportedMeasure("only single-box expression densities "
                                         "can be serialized");
            }
            std::string text = mu.expression()->text();
            if (mu.scale() != 1)
                text = "(" + format_double(mu.scale()) + ")*(" + text + ")";
            DensityPiece const& p = mu.pieces().front();
            j["kind"] = "density";
            j["expr"] = text;
            if (axis < 0)
            {
                j["domain"] = {{p.box.lo1, p.box.hi1}, {p.box.lo2, p.box.hi2}};
                j["nodes"] = {p.n1, p.n2};
            }
            else if (axis == 0)
            {
                j["domain"] = {p.box.lo1, p.box.hi1};
                j["nodes"] = p.n1;
            }
            else
            {
                j["domain"] = {p.box.lo2, p.box.hi2};
                j["nodes"] = p.n2;
            }
            return j;
        }
        case LevyMeasure::Kind::product:
            if (axis >= 0)
                throw UnsupportedMeasure("nested product measure");
            j["kind"] = "product";
            j["z1"] = levy_to_json(mu.z1_factor(), 0);
            j["z2"] = levy_to_json(mu.z2_factor(), 1);
            if (mu.scale() != 1)
                j["scale"] = mu.scale();
            return j;
    }
    return j;
}

ModelParams model_from_json(json const& j)
{
    try
    {
        ModelParams p;
        for (char const* key : {"a1", "a2", "b0", "b1", "b2", "sigma"})
            check_nonneg(j.at(key), key);
        p.a1 = j.at("a1").get<double>();
        p.a2 = j.at("a2").get<double>();
        p.b0 = j.at("b0").get<double>();
        p.b1 = j.at("b1").get<double>();
        p.b2 = j.at("b2").get<double>();
        p.sigma = j.at("sigma").get<double>();
        auto const& al = j.at("alpha");
        if (al.size() != 2 || al[0].size() != 2 || al[1].size() != 2)
            throw ModelFormatError("alpha must be a 2x2 array");
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k)
                p.alpha[i][k] = al[i][k].get<double>();
        if (j.contains("m"))
            p.m = levy_from_json(j.at("m"));
        if (j.contains("n"))
            p.n = levy_from_json(j.at("n"));
        return p;
    }
    catch (json::exception const& e)
    {
        throw ModelFormatError(e.what());
    }
}

json model_to_json(ModelParams const& p)
{
    json j;
    j["a1"] = p.a1;
    j["a2"] = p.a2;
    j["b0"] = p.b0;
    j["b1"] = p.b1;
    j["b2"] = p.b2;
    j["sigma"] = p.sigma;
    j["alpha"] = {{p.alpha[0][0], p.alpha[0][1]},
                  {p.alpha[1][0], p.alpha[1][1]}};
    j["m"] = levy_to_json(p.m);
    j["n"] = levy_to_json(p.n);
    return j;
}

ModelParams load_model(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ModelFormatError("cannot open model file " + path);
    json j;
    try
    {
        in >> j;
    }
    catch (json::exception const& e)
    {
        throw ModelFormatError(path + ": " + e.what());
    }
    return model_from_json(j);
}

json to_json(ValidationReport const& r)
{
    json j;
    j["checks"] = json::array();
    for (auto const& c : r.checks)
    {
        j["checks"].push_back({{"name", c.name},
                               {"value", json_number(c.value)},
                               {"threshold", c.threshold},
                               {"pass", c.pass}});
    }
    j["all_pass"] = r.all_pass();
    return j;
}

}  // namespace affine

#include "affine/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace affine
{
namespace
{
using nlohmann::json;
constexpr double inf = std::numeric_limits<double>::infinity();

double gk(std::function<double(double)> const& f,
          double a,
          double b,
          double tol = 1e-12)
{
    if (!(b > a))
        return 0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, a, b, 12, tol);
}

// Sign changes of d on [l, r], located by bisection on a uniform sample.
std::vector<double> crossings(std::function<double(double)> const& d,
                              double l,
                              double r,
                              int samples = 256)
{
    std::vector<double> out;
    double h = (r - l) / samples;
    double xa = l + 1e-12 * h, fa = d(xa);
    for (int i = 1; i <= samples; ++i)
    {
        double xb = i == samples ? r - 1e-12 * h : l + i * h;
        double fb = d(xb);
        if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0))
        {
            double lo = xa, hi = xb, flo = fa;
            for (int it = 0; it < 80 && hi - lo > 1e-15 * (1 + std::abs(lo)); ++it)
            {
                double mid = 0.5 * (lo + hi);
                double fm = d(mid);
                if ((fm < 0) == (flo < 0))
                {
                    lo = mid;
                    flo = fm;
                }
                else
                {
                    hi = mid;
                }
            }
            out.push_back(0.5 * (lo + hi));
        }
        xa = xb;
        fa = fb;
    }
    return out;
}

template<class T>
T series_m1_m_id(T w)
{
    // w^2/2! + w^3/3! + ...
    T term = w * w / 2.0;
    T sum = term;
    for (int k = 3; k < 40; ++k)
    {
        term *= w / static_cast<double>(k);
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum))
            break;
    }
    return sum;
}

double quad_coeff_11(ModelParams const& p)
{
    return p.a11() + p.a12();
}

double quad_coeff_12(ModelParams const& p)
{
    return 2 * (std::sqrt(p.a11() * p.a21()) + std::sqrt(p.a12() * p.a22()));
}

double quad_coeff_22(ModelParams const& p)
{
    return p.a21() + p.a22();
}

std::vector<QuadNode> frozen_nodes(LevyMeasure const& mu,
                                   std::function<cplx(double, double)> probe)
{
    if (mu.is_zero())
        return {};
    if (mu.is_exact())
        return *mu.nodes(0);
    int level = levy_integral_detail(mu, probe).level;
    return *mu.nodes(level + 1);
}

json evidence_json(std::vector<std::pair<double, double>> const& ev)
{
    json out = json::array();
    for (auto const& [x, y] : ev)
        out.push_back({json_number(x), json_number(y)});
    return out;
}

Verdict stabilization_verdict(std::vector<double> const& r)
{
    double top = *std::max_element(r.begin(), r.end());
    double tol = 1e-6 * std::max(top, 1e-300);
    bool up = false, down = false;
    for (std::size_t i = 0; i + 1 < r.size(); ++i)
    {
        double d = r[i + 1] - r[i];
        if (d > tol)
            up = true;
        if (d < -tol)
            down = true;
    }
    if (up && down)
        return Verdict::inconclusive;
    auto tail_begin = r.end() - 3;
    double mx = *std::max_element(tail_begin, r.end());
    double mn = *std::min_element(tail_begin, r.end());
    if (!std::isfinite(mx))
        return Verdict::fails;
    if (mn > 0 ? mx / mn < 2 : mx == 0)
        return Verdict::holds;
    return Verdict::fails;
}

}  // namespace

//---------------------------------------------------------------------------//
UPoint::UPoint(cplx u1, cplx u2) : u1_(u1), u2_(u2)
{
    if (!(u1.real() <= 1e-12) || !(std::abs(u2.real()) <= 1e-12)
        || !std::isfinite(u1.imag()) || !std::isfinite(u2.imag()))
    {
        throw InvalidUPoint("u = (" + std::to_string(u1.real()) + "+"
                            + std::to_string(u1.imag()) + "i, "
                            + std::to_string(u2.real()) + "+"
                            + std::to_string(u2.imag()) + "i) is not in U");
    }
}

cplx exp_m1_m_id(cplx w)
{
    if (std::abs(w) < 0.5)
        return series_m1_m_id(w);
    return std::exp(w) - 1.0 - w;
}

double exp_m1_m_id(double w)
{
    if (std::abs(w) < 0.5)
        return series_m1_m_id(w);
    return std::expm1(w) - w;
}

cplx phi(UPoint const& u, ModelParams const& p)
{
    cplx u1 = u.u1(), u2 = u.u2();
    cplx s = -p.a1 * u1 - p.b1 * u2 + quad_coeff_11(p) * u1 * u1
             + quad_coeff_12(p) * u1 * u2 + quad_coeff_22(p) * u2 * u2;
    if (!p.m.is_zero())
    {
        s += levy_integral(p.m, [&](double z1, double z2) {
            return exp_m1_m_id(u1 * z1 + u2 * z2);
        });
    }
    return s;
}

cplx psi(UPoint const& u, ModelParams const& p)
{
    cplx u1 = u.u1(), u2 = u.u2();
    cplx s = p.a2 * u1 - p.b0 * u2 + 0.5 * p.sigma * p.sigma * u2 * u2;
    if (!p.n.is_zero())
    {
        s += levy_integral(p.n, [&](double z1, double z2) {
            return exp_m1_m_id(u1 * z1 + u2 * z2) + u1 * z1;
        });
    }
    return s;
}

double phi0(double x, ModelParams const& p)
{
    if (x < 0)
        throw DomainError("phi0 needs x >= 0");
    double s = p.a1 * x + quad_coeff_11(p) * x * x;
    if (!p.m.is_zero())
    {
        s += levy_integral(
            p.m, [&](double z1, double) { return exp_m1_m_id(-x * z1); });
    }
    return s;
}

double phi0_tilde(double x, ModelParams const& p)
{
    if (x > 0)
        throw DomainError("phi0_tilde needs x <= 0");
    double s = -p.a1 * x + quad_coeff_11(p) * x * x;
    if (!p.m.is_zero())
    {
        s += levy_integral(
            p.m, [&](double z1, double) { return exp_m1_m_id(x * z1); });
    }
    return s;
}

double P_mech(double x, ModelParams const& p)
{
    if (x > 0)
        throw DomainError("P needs x <= 0");
    double s = p.a2 * x;
    if (!p.n.is_zero())
    {
        s += levy_integral(
            p.n, [&](double z1, double) { return std::expm1(x * z1); });
    }
    return s;
}

//---------------------------------------------------------------------------//
Mechanisms::Mechanisms(ModelParams p) : p_(std::move(p))
{
    cplx const pu1(-1, 0), pu2(0, 1);
    m_nodes_ = frozen_nodes(p_.m, [&](double z1, double z2) {
        return exp_m1_m_id(pu1 * z1 + pu2 * z2);
    });
    n_nodes_ = frozen_nodes(p_.n, [&](double z1, double z2) {
        return exp_m1_m_id(pu1 * z1 + pu2 * z2) + pu1 * z1;
    });
}

cplx Mechanisms::phi(cplx u1, cplx u2) const
{
    cplx s = -p_.a1 * u1 - p_.b1 * u2 + quad_coeff_11(p_) * u1 * u1
             + quad_coeff_12(p_) * u1 * u2 + quad_coeff_22(p_) * u2 * u2;
    for (auto const& n : m_nodes_)
        s += n.w * exp_m1_m_id(u1 * n.z1 + u2 * n.z2);
    return s;
}

cplx Mechanisms::psi(cplx u1, cplx u2) const
{
    cplx s = p_.a2 * u1 - p_.b0 * u2 + 0.5 * p_.sigma * p_.sigma * u2 * u2;
    for (auto const& n : n_nodes_)
        s += n.w * (exp_m1_m_id(u1 * n.z1 + u2 * n.z2) + u1 * n.z1);
    return s;
}

double Mechanisms::phi0(double x) const
{
    double s = p_.a1 * x + quad_coeff_11(p_) * x * x;
    for (auto const& n : m_nodes_)
        s += n.w * exp_m1_m_id(-x * n.z1);
    return s;
}

double Mechanisms::P(double x) const
{
    double s = p_.a2 * x;
    for (auto const& n : n_nodes_)
        s += n.w * std::expm1(x * n.z1);
    return s;
}

double Mechanisms::inverse_phi0_integral(double lo, double hi) const
{
    if (!(lo > 0))
        throw DomainError("lower limit must be > 0");
    auto inv = [this](double z) {
        double v = phi0(z);
        if (!(v > 0))
            throw DomainError("phi0 is not positive at " + std::to_string(z));
        return 1.0 / v;
    };
    double total = 0;
    for (double a = lo; a < hi; a *= 2)
        total += gk(inv, a, std::min(hi, 2 * a));
    return total;
}

//---------------------------------------------------------------------------//
LineMeasure LineMeasure::from_atoms(std::vector<std::pair<double, double>> atoms)
{
    std::sort(atoms.begin(), atoms.end());
    LineMeasure out;
    for (auto const& [x, w] : atoms)
    {
        if (w < 0 || !std::isfinite(w) || !std::isfinite(x))
            throw DomainError("line atom must be finite with weight >= 0");
        if (w == 0)
            continue;
        if (!out.atoms_.empty() && out.atoms_.back().first == x)
            out.atoms_.back().second += w;
        else
            out.atoms_.emplace_back(x, w);
    }
    return out;
}

LineMeasure LineMeasure::from_density(Fn g,
                                      std::vector<std::pair<double, double>> support)
{
    LineMeasure out;
    for (auto const& [a, b] : support)
    {
        if (!(std::isfinite(a) && std::isfinite(b) && a <= b))
            throw DomainError("line density support must be finite intervals");
    }
    std::sort(support.begin(), support.end());
    out.support_ = std::move(support);
    auto sup = out.support_;
    out.g_ = [g = std::move(g), sup](double z) {
        for (auto const& [a, b] : sup)
        {
            if (z > a && z <= b)
                return g(z);
        }
        return 0.0;
    };
    return out;
}

LineMeasure LineMeasure::from_levy(LevyMeasure const& mu)
{
    using Kind = LevyMeasure::Kind;
    if (mu.kind() == Kind::atomic)
    {
        std::vector<std::pair<double, double>> atoms;
        for (auto const& a : mu.atoms())
            atoms.emplace_back(a.z2, a.w * mu.scale());
        return from_atoms(std::move(atoms));
    }
    if (mu.kind() == Kind::density)
    {
        std::vector<std::pair<double, double>> support;
        std::optional<double> line;
        for (auto const& p : mu.pieces())
        {
            if (!p.box.degenerate1() || (line && *line != p.box.lo1))
            {
                throw UnsupportedMeasure(
                    "line measure needs a density on one z2 line: "
                    + mu.describe());
            }
            line = p.box.lo1;
            support.emplace_back(p.box.lo2, p.box.hi2);
        }
        double c = line.value_or(0);
        return from_density([mu, c](double z) { return mu.density_at(c, z); },
                            std::move(support));
    }
    throw UnsupportedMeasure("line measure from a product; take the z2 "
                             "marginal first");
}

double LineMeasure::density(double z) const
{
    return g_ ? g_(z) : 0.0;
}

double LineMeasure::integral(Fn const& f) const
{
    if (is_atomic())
    {
        double s = 0;
        for (auto const& [x, w] : atoms_)
            s += w * f(x);
        return s;
    }
    double s = 0;
    for (auto const& [a, b] : support_)
        s += gk([&](double z) { return f(z) * g_(z); }, a, b);
    return s;
}

double LineMeasure::mass() const
{
    return integral([](double) { return 1.0; });
}

int LineMeasure::matched_atoms(double a) const
{
    int count = 0;
    for (auto const& [x, w] : atoms_)
    {
        double target = x + a;
        auto it = std::lower_bound(
            atoms_.begin(), atoms_.end(), target - 1e-12,
            [](auto const& at, double v) { return at.first < v; });
        if (it != atoms_.end() && std::abs(it->first - target) <= 1e-12)
            ++count;
    }
    return count;
}

double LineMeasure::shifted_integral(
    double a, std::function<double(double, double)> const& h) const
{
    std::set<double> breaks;
    for (auto const& [lo, hi] : support_)
    {
        breaks.insert(lo);
        breaks.insert(hi);
        breaks.insert(lo + a);
        breaks.insert(hi + a);
    }
    std::vector<double> bv(breaks.begin(), breaks.end());
    auto diff = [&](double z) { return g_(z) - g_(z - a); };
    for (std::size_t i = 0; i + 1 < bv.size(); ++i)
    {
        if (a != 0)
        {
            for (double c : crossings(diff, bv[i], bv[i + 1]))
                breaks.insert(c);
        }
    }
    bv.assign(breaks.begin(), breaks.end());
    double s = 0;
    for (std::size_t i = 0; i + 1 < bv.size(); ++i)
    {
        // differences of nearby values carry relative noise ~ 1e-16 / a
        s += gk([&](double z) { return h(g_(z), g_(z - a)); }, bv[i],
                bv[i + 1], 1e-10);
    }
    return s;
}

double LineMeasure::overlap(double a) const
{
    if (is_atomic())
    {
        // (nu ^ delta_a * nu) charges x with min(w(x), w(x - a)).
        double s = 0;
        for (auto const& [x, w] : atoms_)
        {
            double src = x - a;
            auto it = std::lower_bound(
                atoms_.begin(), atoms_.end(), src - 1e-12,
                [](auto const& at, double v) { return at.first < v; });
            if (it != atoms_.end() && std::abs(it->first - src) <= 1e-12)
                s += std::min(w, it->second);
        }
        return s;
    }
    return shifted_integral(a, [](double x, double y) { return std::min(x, y); });
}

double LineMeasure::tv_shift(double a) const
{
    if (is_atomic())
        return std::max(0.0, 2 * (mass() - overlap(a)));
    return shifted_integral(a, [](double x, double y) { return std::abs(x - y); });
}

//---------------------------------------------------------------------------//
std::string to_string(Verdict v)
{
    switch (v)
    {
        case Verdict::holds:
            return "holds";
        case Verdict::fails:
            return "fails";
        case Verdict::inconclusive:
            return "inconclusive";
    }
    return "inconclusive";
}

json to_json(ConditionReport const& r)
{
    json j;
    j["condition"] = r.condition;
    j["verdict"] = to_string(r.verdict);
    j["inputs"] = r.inputs;
    j["evidence"] = evidence_json(r.evidence);
    if (r.Lambda)
        j["Lambda"] = json_number(*r.Lambda);
    json vals = json::object();
    for (auto const& [k, v] : r.values)
        vals[k] = json_number(v);
    j["values"] = vals;
    j["notes"] = r.notes;
    return j;
}

ConditionReport check_A(ModelParams const& p,
                        std::vector<double> theta_grid,
                        double z_max,
                        int doublings)
{
    ConditionReport r;
    r.condition = "A";
    r.inputs = {{"theta_grid", theta_grid}, {"z_max", z_max},
                {"doublings", doublings}};
    if (theta_grid.empty())
        throw DomainError("theta_grid is empty");
    if (doublings < 3)
        throw DomainError("check_A needs at least 3 doublings");
    std::sort(theta_grid.begin(), theta_grid.end());

    Mechanisms mech(p);
    double z_top = z_max * std::ldexp(1.0, doublings);
    auto positive_from = [&](double theta) {
        for (double z = theta; z <= z_top; z *= std::pow(2.0, 0.25))
        {
            if (!(mech.phi0(z) > 0))
                return false;
        }
        return mech.phi0(z_top) > 0;
    };

    std::optional<double> theta;
    for (double t : theta_grid)
    {
        if (t > 0 && t < z_max && positive_from(t))
        {
            theta = t;
            break;
        }
    }
    if (!theta)
    {
        r.verdict = Verdict::fails;
        r.notes.push_back("phi0 <= 0 at probes beyond every theta in the grid");
        return r;
    }
    r.values["theta"] = *theta;

    double total = mech.inverse_phi0_integral(*theta, z_max);
    r.evidence.emplace_back(z_max, total);
    std::vector<double> increments;
    double Z = z_max;
    for (int k = 0; k < doublings; ++k)
    {
        double inc = mech.inverse_phi0_integral(Z, 2 * Z);
        increments.push_back(inc);
        total += inc;
        Z *= 2;
        r.evidence.emplace_back(Z, total);
    }
    std::vector<double> ratios;
    for (std::size_t i = 0; i + 1 < increments.size(); ++i)
        ratios.push_back(increments[i + 1] / increments[i]);
    r.values["integral"] = total;
    r.values["last_ratio"] = ratios.back();

    auto last3 = std::vector<double>(ratios.end() - 3, ratios.end());
    bool decaying = std::all_of(last3.begin(), last3.end(),
                                [](double q) { return q < 0.9; });
    bool flat = std::all_of(last3.begin(), last3.end(),
                            [](double q) { return q >= 1 - 1e-9; });
    if (decaying)
        r.verdict = Verdict::holds;
    else if (flat)
        r.verdict = Verdict::fails;
    else
        r.verdict = Verdict::inconclusive;
    return r;
}

ConditionReport check_B(ModelParams const& p,
                        double eps,
                        double eta,
                        std::vector<double> const& a_grid)
{
    if (!(eps > 0) || !(eta > 0))
        throw DomainError("check_B needs eps > 0 and eta > 0");
    if (a_grid.empty())
        throw DomainError("a_grid is empty");
    ConditionReport r;
    r.condition = "B";
    r.inputs = {{"eps", eps}, {"eta", eta}, {"a_grid", a_grid}};

    LineMeasure ne = LineMeasure::from_levy(levy_restrict_tail(p.n, eps));
    double c_eps = ne.mass();
    r.values["C_eps"] = c_eps;
    double lowest = inf;
    bool mismatch = false;
    for (double a : a_grid)
    {
        if (std::abs(a) > eta)
            throw DomainError("a_grid entry outside [-eta, eta]");
        double ov = ne.overlap(a);
        r.evidence.emplace_back(a, ov);
        lowest = std::min(lowest, ov);
        if (ne.is_atomic() && a != 0 && ne.matched_atoms(a) == 0)
            mismatch = true;
    }
    if (mismatch)
    {
        r.notes.push_back(
            "n_eps is atomic and some shifts match no atom: overlap is 0");
    }
    double moment = split_integral(
        p.n,
        [eps](double, double z2) {
            return std::abs(z2) > eps ? std::abs(z2) : 0.0;
        },
        {}, {-eps, eps});
    r.values["min_overlap"] = lowest;
    r.values["abs_z2_moment"] = moment;
    r.verdict = (lowest > 0 && std::isfinite(moment)) ? Verdict::holds
                                                      : Verdict::fails;
    return r;
}

double shift_tv_ratio(LineMeasure const& mu, double rho)
{
    double best = 0;
    for (double a : {rho, -rho, rho / 2, -rho / 2})
        best = std::max(best, mu.tv_shift(a) / rho);
    return best;
}

namespace
{
ConditionReport shift_ratio_report(LineMeasure const& mu,
                                   std::vector<double> const& rho_grid)
{
    if (rho_grid.size() < 3)
        throw DomainError("rho_grid needs at least 3 entries");
    for (std::size_t i = 0; i < rho_grid.size(); ++i)
    {
        if (!(rho_grid[i] > 0)
            || (i > 0 && !(rho_grid[i] < rho_grid[i - 1])))
            throw DomainError("rho_grid must be positive and strictly "
                              "decreasing");
    }
    ConditionReport r;
    std::vector<double> ratios;
    for (double rho : rho_grid)
    {
        double v = shift_tv_ratio(mu, rho);
        ratios.push_back(v);
        r.evidence.emplace_back(rho, v);
    }
    r.Lambda = *std::max_element(ratios.begin(), ratios.end());
    r.verdict = stabilization_verdict(ratios);
    if (r.verdict == Verdict::inconclusive)
        r.notes.push_back("shift-TV ratio is not monotone along rho_grid");
    return r;
}
}  // namespace

ConditionReport check_C(ModelParams const& p,
                        double eps,
                        std::vector<double> const& rho_grid)
{
    if (!(eps > 0))
        throw DomainError("check_C needs eps > 0");
    LineMeasure ne = LineMeasure::from_levy(levy_restrict_tail(p.n, eps));
    ConditionReport r = shift_ratio_report(ne, rho_grid);
    r.condition = "C";
    r.inputs = {{"eps", eps}, {"rho_grid", rho_grid}};
    r.values["C_eps"] = ne.mass();
    if (ne.is_atomic() && ne.mass() > 0)
        r.notes.push_back("n_eps is atomic: shifts separate the atoms");
    if (!(ne.mass() > 0))
    {
        r.verdict = Verdict::fails;
        r.notes.push_back("n_eps has zero mass");
    }
    return r;
}

ConditionReport check_Cprime(ModelParams const& p,
                             double eps,
                             std::vector<double> const& rho_grid)
{
    ConditionReport r = check_C(p, eps, rho_grid);
    r.condition = "Cprime";
    double second = split_integral(
        p.n,
        [](double, double z2) { return std::abs(z2) > 1 ? z2 * z2 : 0.0; },
        {}, {-1, 1});
    r.values["z2_second_moment_tail"] = second;
    if (!std::isfinite(second))
    {
        r.verdict = Verdict::fails;
        r.notes.push_back("int_{|z2|>1} |z2|^2 n(dz) is not finite");
    }
    return r;
}

LineMeasure sigma_k(LineDensity const& rho0, LineDensity const& g, double k)
{
    double lo = std::max(rho0.lo, g.lo), hi = std::min(rho0.hi, g.hi);
    if (!(hi > lo))
        return LineMeasure::from_atoms({});
    auto f0 = rho0.f, fg = g.f;
    std::vector<std::pair<double, double>> support;
    double prev = lo;
    for (double c : crossings([&](double z) { return k * fg(z) - f0(z); }, lo,
                              hi, 1024))
    {
        support.emplace_back(prev, c);
        prev = c;
    }
    support.emplace_back(prev, hi);
    return LineMeasure::from_density(
        [f0, fg, k](double z) { return std::min(k * fg(z), f0(z)); },
        std::move(support));
}

ConditionReport check_D(ModelParams const& p,
                        LineDensity const& rho0,
                        LineDensity const& g,
                        std::vector<int> const& k_list,
                        int K,
                        std::vector<double> const& rho_grid)
{
    if (K < 1)
        throw DomainError("K must be >= 1");
    std::vector<int> ks;
    for (int k : k_list)
    {
        if (k < 1)
            throw DomainError("k_list entries must be >= 1");
        if (k >= K)
            ks.push_back(k);
    }
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.empty())
        throw DomainError("no k in k_list is >= K");
    if (!(rho0.hi > rho0.lo) || !(g.hi > g.lo))
        throw DomainError("rho0 and g need non-empty domains");

    ConditionReport r;
    r.condition = "D";
    r.inputs = {{"rho0", rho0.label}, {"g", g.label}, {"k_list", ks},
                {"K", K}, {"rho_grid", rho_grid}};

    LineMeasure marg = LineMeasure::from_levy(z2_marginal(p.n));
    constexpr int probes = 1000;
    for (int i = 0; i < probes; ++i)
    {
        double z = rho0.lo + (i + 0.5) * (rho0.hi - rho0.lo) / probes;
        double v = rho0.f(z);
        if (v < 0)
            throw DomainError("rho0 is negative at " + std::to_string(z));
        if (v > marg.density(z) + 1e-9)
        {
            throw DominationViolated(
                "rho0(" + std::to_string(z) + ") = " + std::to_string(v)
                + " exceeds the z2-marginal density of n");
        }
        double zg = g.lo + (i + 0.5) * (g.hi - g.lo) / probes;
        if (!(g.f(zg) > 0))
            throw DomainError("g must be strictly positive");
    }

    bool finite = true, monotone = true;
    double prev = -inf;
    std::vector<double> masses;
    for (int k : ks)
    {
        LineMeasure s = sigma_k(rho0, g, k);
        double mass = s.mass();
        double lam = 0;
        for (double rho : rho_grid)
            lam = std::max(lam, shift_tv_ratio(s, rho));
        double first = s.integral([](double z) { return std::abs(z); });
        std::string tag = std::to_string(k);
        r.values["mass_k" + tag] = mass;
        r.values["Lambda_k" + tag] = lam;
        r.values["abs_moment_k" + tag] = first;
        r.evidence.emplace_back(k, mass);
        finite = finite && std::isfinite(mass) && std::isfinite(lam)
                 && std::isfinite(first);
        if (mass < prev - 1e-12 * std::abs(prev))
            monotone = false;
        prev = mass;
        masses.push_back(mass);
    }
    bool unbounded = masses.size() >= 2 && masses[masses.size() - 2] > 0
                     && masses.back() / masses[masses.size() - 2] >= 1.5;
    r.values["sigma0_infinite_plausible"] = unbounded ? 1 : 0;
    if (unbounded)
        r.notes.push_back("sigma_k mass keeps growing: sigma_0(R) = inf is "
                          "plausible");
    r.verdict = (finite && monotone && masses.front() > 0) ? Verdict::holds
                                                           : Verdict::fails;
    return r;
}

}  // namespace affine

#include "affine/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "affine/hash.hpp"
#include "affine/rng.hpp"

namespace affine
{
namespace
{
constexpr double inf = std::numeric_limits<double>::infinity();

void require_nonempty(EmpiricalDistribution const& P, char const* which)
{
    if (P.size() == 0)
        throw EmptyDistribution(std::string(which) + " has no samples");
}

std::vector<double> uniform_edges(double lo, double hi, int n)
{
    if (!(hi > lo))
        hi = lo + 1;
    std::vector<double> e(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        e[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / n;
    return e;
}

std::pair<double, double> pooled_quantiles(std::vector<double> const& a,
                                           std::vector<double> const& b)
{
    std::vector<double> v(a);
    v.insert(v.end(), b.begin(), b.end());
    auto at = [&](double q) {
        auto k = static_cast<std::size_t>(std::floor(q * double(v.size() - 1)));
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
        return v[k];
    };
    double lo = at(0.01);
    double hi = at(0.99);
    return {lo, hi};
}

std::size_t locate(std::vector<double> const& e, double x)
{
    auto it = std::upper_bound(e.begin() + 1, e.end() - 1, x);
    return static_cast<std::size_t>(it - (e.begin() + 1));
}

std::vector<std::size_t>
bin_indices(EmpiricalDistribution const& P, HistogramGrid const& g)
{
    std::vector<std::size_t> idx(P.size());
    for (std::size_t i = 0; i < P.size(); ++i)
        idx[i] = g.bin(P.Y[i], P.Z[i]);
    return idx;
}

struct MeanSe
{
    double mean = 0;
    double se = 0;
};

template<class F>
MeanSe mean_se(std::size_t n, F&& f)
{
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        double v = f(i);
        s += v;
        s2 += v * v;
    }
    double m = s / double(n);
    double var = n > 1 ? std::max(0.0, (s2 - double(n) * m * m) / double(n - 1))
                       : 0.0;
    return {m, std::sqrt(var / double(n))};
}

double bernoulli_se(double p, std::size_t n)
{
    return std::sqrt(std::max(0.0, p * (1 - p)) / double(n));
}

std::string fmt(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

//---------------------------------------------------------------------------//
std::size_t HistogramGrid::bin(double y, double z) const
{
    return locate(e1, y) * n2() + locate(e2, z);
}

HistogramGrid make_grid(EmpiricalDistribution const& P,
                        EmpiricalDistribution const& Q,
                        int n1,
                        int n2)
{
    require_nonempty(P, "P");
    require_nonempty(Q, "Q");
    if (n1 < 1 || n2 < 1)
        throw DomainError("bin counts must be >= 1");
    auto [y0, y1] = pooled_quantiles(P.Y, Q.Y);
    auto [z0, z1] = pooled_quantiles(P.Z, Q.Z);
    return {uniform_edges(y0, y1, n1), uniform_edges(z0, z1, n2)};
}

std::vector<double>
histogram(EmpiricalDistribution const& P, HistogramGrid const& grid)
{
    std::vector<double> h(grid.n1() * grid.n2(), 0.0);
    for (std::size_t i = 0; i < P.size(); ++i)
        h[grid.bin(P.Y[i], P.Z[i])] += P.w[i];
    return h;
}

TvEstimate tv_hat(EmpiricalDistribution const& P,
                  EmpiricalDistribution const& Q,
                  HistogramGrid const& grid)
{
    require_nonempty(P, "P");
    require_nonempty(Q, "Q");
    auto hp = histogram(P, grid);
    auto hq = histogram(Q, grid);
    double s = 0;
    for (std::size_t i = 0; i < hp.size(); ++i)
        s += std::abs(hp[i] - hq[i]);
    return {std::min(1.0, 0.5 * s)};
}

TvEstimate tv_hat(EmpiricalDistribution const& P,
                  EmpiricalDistribution const& Q,
                  int n1,
                  int n2)
{
    return tv_hat(P, Q, make_grid(P, Q, n1, n2));
}

double tv_bootstrap_se(EmpiricalDistribution const& P,
                       EmpiricalDistribution const& Q,
                       HistogramGrid const& grid,
                       int replicates,
                       std::uint64_t seed)
{
    require_nonempty(P, "P");
    require_nonempty(Q, "Q");
    if (replicates < 2)
        return 0;
    auto ip = bin_indices(P, grid);
    auto iq = bin_indices(Q, grid);
    std::size_t bins = grid.n1() * grid.n2();
    std::vector<double> values;
    std::vector<double> hp(bins), hq(bins);
    for (int b = 0; b < replicates; ++b)
    {
        std::fill(hp.begin(), hp.end(), 0.0);
        std::fill(hq.begin(), hq.end(), 0.0);
        auto fill = [&](std::vector<std::size_t> const& idx,
                        std::vector<double>& h, std::uint32_t side) {
            CounterRng rng(seed, Stream::bootstrap, static_cast<std::uint32_t>(b), side);
            double w = 1.0 / double(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i)
            {
                auto k = static_cast<std::size_t>(rng.uniform() * double(idx.size()));
                h[idx[std::min(k, idx.size() - 1)]] += w;
            }
        };
        fill(ip, hp, 0);
        fill(iq, hq, 1);
        double s = 0;
        for (std::size_t i = 0; i < bins; ++i)
            s += std::abs(hp[i] - hq[i]);
        values.push_back(0.5 * s);
    }
    return mean_se(values.size(), [&](std::size_t i) { return values[i]; }).se
           * std::sqrt(double(values.size()));
}

double predicted_floor(std::vector<double> const& masses,
                       std::size_t n_p,
                       std::size_t n_q)
{
    double k = 1.0 / double(n_p) + 1.0 / double(n_q);
    double s = 0;
    for (double p : masses)
        s += std::sqrt(std::max(0.0, p * (1 - p)) * k);
    return 0.5 * std::sqrt(2 / std::numbers::pi) * s;
}

//---------------------------------------------------------------------------//
Lemma31Constants lemma31_constants(double a1,
                                   double b1,
                                   double b2,
                                   double alpha21,
                                   double alpha22,
                                   double m_z2)
{
    if (!(0 < 2 * b2 && 2 * b2 < a1))
        throw SubcriticalityViolated("requires 0 < 2 b2 < a1");
    Lemma31Constants c;
    c.C11 = m_z2 / (a1 - 2 * b2);
    c.C12 = 8 * std::max(alpha21 / (a1 - 2 * b2), alpha22 / (a1 - 2 * b2));
    c.C1 = 4 * std::max(c.C11, c.C12);
    c.C2 = std::abs(b1) / (a1 - b2);
    return c;
}

double m_z2_second_moment(ModelParams const& p)
{
    if (p.m.is_zero())
        return 0;
    return levy_integral(p.m, [](double, double z2) { return z2 * z2; });
}

Lemma31Constants lemma31_constants(ModelParams const& p)
{
    return lemma31_constants(p.a1, p.b1, p.b2, p.a21(), p.a22(),
                             m_z2_second_moment(p));
}

double kappa(double b2)
{
    if (!(b2 > 0))
        throw DomainError("kappa needs b2 > 0");
    return std::max(1.0, 1.0 / (std::numbers::e * b2));
}

Prop42Constants prop42_constants(Lemma31Constants const& c,
                                 double b2,
                                 double Lambda,
                                 double C_eps)
{
    if (!std::isfinite(Lambda) || !(Lambda >= 0))
        throw ConditionCViolated("Lambda is not finite");
    if (!(C_eps > 0))
        throw ConditionCViolated("n_eps has no mass");
    if (!(b2 > 0))
        throw DomainError("prop42 constants need b2 > 0");
    Prop42Constants k;
    k.Lambda = Lambda;
    k.C_eps = C_eps;
    k.kappa_tilde = b2 * C_eps / (C_eps + b2);
    double r = Lambda / C_eps;
    k.C_tilde = std::max({2.0, r, c.C2 * r, std::sqrt(c.C1) * r});
    return k;
}

Prop42Constants prop42_constants(ModelParams const& p,
                                 double eps,
                                 std::vector<double> const& rho_grid)
{
    auto rep = check_C(p, eps, rho_grid);
    if (rep.verdict == Verdict::fails || !rep.Lambda)
        throw ConditionCViolated("condition C does not hold for eps = "
                                 + std::to_string(eps));
    auto k = prop42_constants(lemma31_constants(p), p.b2, *rep.Lambda,
                              rep.values.at("C_eps"));
    return k;
}

double lemma51_c_bar(double alpha21, double alpha22, double m_z2)
{
    return 4 * std::max(8 * std::max(alpha21, alpha22), m_z2);
}

double lemma51_C1(double a1, double b2, double c_bar, double t)
{
    double r = 2 * b2 - a1;
    if (r == 0)
        return c_bar * t;
    return c_bar * std::expm1(r * t) / r;
}

double lemma51_C2(double a1, double b1, double b2, double t)
{
    double r = b2 - a1;
    if (r == 0)
        return std::abs(b1) * t;
    return std::abs(b1) * std::expm1(r * t) / r;
}

Lemma51Constants lemma51_constants(ModelParams const& p,
                                   double t,
                                   double Lambda_k,
                                   double sigma_k_mass)
{
    if (!(sigma_k_mass > 0))
        throw DomainError("sigma_k has no mass");
    Lemma51Constants c;
    c.c_bar = lemma51_c_bar(p.a21(), p.a22(), m_z2_second_moment(p));
    c.C1_t = lemma51_C1(p.a1, p.b2, c.c_bar, t);
    c.C2_t = lemma51_C2(p.a1, p.b1, p.b2, t);
    c.Lambda_k = Lambda_k;
    c.sigma_k_mass = sigma_k_mass;
    c.C_k8 = Lambda_k / sigma_k_mass;
    return c;
}

//---------------------------------------------------------------------------//
double lemma31_bound(Lemma31Constants const& c,
                     double b2,
                     XPoint x,
                     XPoint y,
                     double t)
{
    double d1 = x.x1 - y.x1;
    return std::exp(-b2 * t)
           * (std::abs(x.x2 - y.x2) + c.C2 * d1 + std::sqrt(c.C1 * d1));
}

double lemma31_tail_bound(Lemma31Constants const& c,
                          XPoint x,
                          XPoint y,
                          double eta)
{
    if (!(eta > 0))
        throw DomainError("eta must be > 0");
    double d1 = x.x1 - y.x1;
    return (std::abs(x.x2 - y.x2) + c.C2 * d1 + std::sqrt(c.C1 * d1)) / eta;
}

double difference_bracket(double v, XPoint x, XPoint y)
{
    double d1 = std::abs(x.x1 - y.x1);
    double d2 = std::abs(x.x2 - y.x2);
    if (d1 == 0)
        return 1 + d2;
    return 1 + (v + 1) * d1 + std::sqrt(d1) + d2;
}

double prop33_bound(RiccatiSolver const& s,
                    XPoint x,
                    XPoint y,
                    double t,
                    double C_hat)
{
    if (!(t > 0))
        throw DomainError("prop33 bound needs t > 0");
    double k = kappa(s.params().b2);
    double v = x.x1 == y.x1 ? 0 : s.vbar(t / (k * k + 1));
    return C_hat * difference_bracket(v, x, y) / std::sqrt(t);
}

double fit_C_hat(RiccatiSolver const& s,
                 XPoint x,
                 XPoint y,
                 std::vector<double> const& t_grid,
                 std::vector<double> const& var_values)
{
    if (t_grid.size() != var_values.size() || t_grid.empty())
        throw DomainError("t grid and values differ in length");
    double best = 0;
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        best = std::max(best, var_values[i] / prop33_bound(s, x, y, t_grid[i], 1.0));
    return best;
}

double prop42_bound(Prop42Constants const& c,
                    RiccatiSolver const& s,
                    XPoint x,
                    XPoint y,
                    double t)
{
    if (!(t > 0))
        throw DomainError("prop42 bound needs t > 0");
    double v = x.x1 == y.x1 ? 0 : s.vbar(c.kappa_tilde * t / c.C_eps);
    return c.C_tilde * difference_bracket(v, x, y) * std::exp(-c.kappa_tilde * t);
}

double exp_ergodic_bound(Prop42Constants const& c,
                         RiccatiSolver const& s,
                         XPoint x,
                         double t,
                         double delta1,
                         double delta2)
{
    if (!(t > 0))
        throw DomainError("bound needs t > 0");
    double v = s.vbar(c.kappa_tilde * t / c.C_eps);
    double m = x.x1 + delta1;
    return c.C_tilde * std::exp(-c.kappa_tilde * t)
           * (1 + (v + 1) * m + std::sqrt(m) + std::abs(x.x2) + delta2);
}

double lemma51_bound(Lemma51Constants const& c, XPoint x, XPoint y, double t)
{
    double d1 = std::abs(x.x1 - y.x1);
    return 2 * std::exp(-c.sigma_k_mass * t)
           + c.C_k8
                 * (std::abs(x.x2 - y.x2) + std::sqrt(c.C1_t * d1) + c.C2_t * d1);
}

//---------------------------------------------------------------------------//
bool BoundReport::any_violation() const
{
    return std::any_of(rows.begin(), rows.end(),
                       [](BoundRow const& r) { return r.violation; });
}

void BoundReport::add(double t, double empirical, double se, double bound, double allowance)
{
    BoundRow r;
    r.t = t;
    r.empirical = empirical;
    r.se = se;
    r.bound = bound;
    r.violation = std::isfinite(bound) && empirical - bound > 3 * se + allowance;
    rows.push_back(std::move(r));
}

nlohmann::json BoundReport::to_json() const
{
    nlohmann::json j;
    j["name"] = name;
    j["scale"] = scale;
    nlohmann::json consts = nlohmann::json::object();
    for (auto const& [k, v] : constants)
        consts[k] = json_number(v);
    j["constants"] = consts;
    nlohmann::json rs = nlohmann::json::array();
    for (auto const& r : rows)
    {
        nlohmann::json row = {{"t", json_number(r.t)},
                              {"empirical", json_number(r.empirical)},
                              {"se", json_number(r.se)},
                              {"bound", json_number(r.bound)},
                              {"violation", r.violation}};
        for (auto const& [k, v] : r.extra)
            row[k] = json_number(v);
        rs.push_back(row);
    }
    j["rows"] = rs;
    j["notes"] = notes;
    j["any_violation"] = any_violation();
    return j;
}

std::string BoundReport::to_csv() const
{
    std::ostringstream os;
    os << "t,empirical,se,bound,violation";
    if (!rows.empty())
    {
        for (auto const& [k, v] : rows.front().extra)
            os << ',' << k;
    }
    os << '\n';
    for (auto const& r : rows)
    {
        os << fmt(r.t) << ',' << fmt(r.empirical) << ',' << fmt(r.se) << ','
           << fmt(r.bound) << ',' << (r.violation ? 1 : 0);
        for (auto const& [k, v] : r.extra)
            os << ',' << fmt(v);
        os << '\n';
    }
    return os.str();
}

//---------------------------------------------------------------------------//
std::uint64_t derive_seed(std::uint64_t seed, std::string const& label)
{
    return seed ^ fnv1a(label);
}

namespace
{
SimConfig with_grid(SimConfig cfg, std::vector<double> const& t_grid)
{
    if (t_grid.empty())
        throw DomainError("time grid is empty");
    cfg.record_times = t_grid;
    cfg.T = *std::max_element(t_grid.begin(), t_grid.end());
    return cfg;
}
}  // namespace

Lemma31Result lemma31_check(ModelParams const& p,
                            XPoint x,
                            XPoint y,
                            std::vector<double> const& t_grid,
                            SimConfig cfg,
                            std::vector<double> const& eta_grid)
{
    if (x.x1 < y.x1)
        throw DomainError("lemma31 check needs x1 >= y1");
    lemma31_constants(p);
    std::vector<double> grid;
    for (double t : t_grid)
    {
        if (t > 0)
            grid.push_back(t);
    }
    if (grid.empty())
        grid.push_back(cfg.dt);
    auto e = simulate_coupled(p, x.x1, x.x2, y.x1, y.x2, with_grid(cfg, grid));
    return lemma31_check(p, e, x, y, t_grid, eta_grid);
}

Lemma31Result lemma31_check(ModelParams const& p,
                            CoupledEnsemble const& e,
                            XPoint x,
                            XPoint y,
                            std::vector<double> const& t_grid,
                            std::vector<double> const& eta_grid)
{
    if (x.x1 < y.x1)
        throw DomainError("lemma31 check needs x1 >= y1");
    auto c = lemma31_constants(p);
    Lemma31Result out;
    out.mean.name = "lemma31_mean";
    out.mean.scale = "abs";
    out.tail.name = "lemma31_tail";
    out.tail.scale = "probability";
    for (auto* r : {&out.mean, &out.tail})
    {
        r->constants = {{"C11", c.C11}, {"C12", c.C12}, {"C1", c.C1}, {"C2", c.C2}};
    }
    for (double t : t_grid)
    {
        if (t == 0)
        {
            out.mean.add(0, std::abs(x.x2 - y.x2), 0, lemma31_bound(c, p.b2, x, y, 0));
            continue;
        }
        std::size_t r = e.time_index(t);
        auto dz = [&](std::size_t i) {
            return std::abs(e.Zx[e.at(r, i)] - e.Zy[e.at(r, i)]);
        };
        auto ms = mean_se(e.n_paths, dz);
        out.mean.add(t, ms.mean, ms.se, lemma31_bound(c, p.b2, x, y, t));
        double Tt = std::exp(-p.b2 * t);
        for (double eta : eta_grid)
        {
            std::size_t count = 0;
            for (std::size_t i = 0; i < e.n_paths; ++i)
                count += dz(i) > Tt * eta;
            double pr = double(count) / double(e.n_paths);
            out.tail.add(t, pr, bernoulli_se(pr, e.n_paths),
                         lemma31_tail_bound(c, x, y, eta));
            out.tail.rows.back().extra = {{"eta", eta}};
        }
    }
    return out;
}

BoundReport coalescence_curve(ModelParams const& p,
                              double x1,
                              double y1,
                              std::vector<double> const& t_grid,
                              SimConfig cfg)
{
    if (x1 < y1)
        throw DomainError("coalescence curve needs x1 >= y1");
    RiccatiSolver s(p);
    auto e = simulate_coupled(p, x1, 0, y1, 0, with_grid(cfg, t_grid));
    BoundReport rep;
    rep.name = "coalescence";
    rep.scale = "probability";
    rep.constants = {{"coal_tol", e.coal_tol}, {"coal_bias", e.coal_bias()}};
    if (!e.small_jump_note.empty())
        rep.notes.push_back(e.small_jump_note);
    for (double t : t_grid)
    {
        std::size_t count = 0;
        for (std::size_t i = 0; i < e.n_paths; ++i)
            count += e.varsigma[i] > t;
        double pr = double(count) / double(e.n_paths);
        double v = (x1 == y1 || t == 0) ? (x1 == y1 ? 0 : inf) : s.vbar(t);
        double bound = x1 == y1 ? 0.0 : std::min(1.0, v * (x1 - y1));
        rep.add(t, pr, bernoulli_se(pr, e.n_paths), bound, e.coal_bias());
        rep.rows.back().extra = {{"vbar", v}};
    }
    return rep;
}

CouplingChain coupling_chain(CoupledEnsemble const& e, double t, int n1, int n2)
{
    auto px = empirical_at(e, t, true);
    auto py = empirical_at(e, t, false);
    auto grid = make_grid(px, py, n1, n2);
    CouplingChain c;
    c.lhs = tv_hat(px, py, grid).var_scale();
    std::vector<double> hx(grid.n1() * grid.n2()), hy(hx.size());
    std::size_t open = 0;
    double w = 1.0 / double(e.n_paths);
    for (std::size_t i = 0; i < e.n_paths; ++i)
    {
        if (e.varsigma[i] > t)
        {
            ++open;
            continue;
        }
        hx[grid.bin(px.Y[i], px.Z[i])] += w;
        hy[grid.bin(py.Y[i], py.Z[i])] += w;
    }
    c.non_coalesced = double(open) / double(e.n_paths);
    for (std::size_t i = 0; i < hx.size(); ++i)
        c.coalesced_term += std::abs(hx[i] - hy[i]);
    return c;
}

ErgodicityResult ergodicity_curve(ModelParams const& p,
                                  XPoint x,
                                  std::vector<double> const& t_grid,
                                  SimConfig cfg,
                                  std::optional<Prop42Constants> const& c42,
                                  int bootstrap,
                                  int tail_points)
{
    SimConfig cx = with_grid(cfg, t_grid);
    cx.seed = derive_seed(cfg.seed, "ergodicity:x");
    auto ex = simulate_paths(p, x.x1, x.x2, cx);

    SimConfig cpi = cfg;
    cpi.record_times = {};
    cpi.T = 4 * cx.T;
    cpi.seed = derive_seed(cfg.seed, "ergodicity:pi1");
    auto pi1 = empirical_at(simulate_paths(p, x.x1, x.x2, cpi), cpi.T);
    cpi.seed = derive_seed(cfg.seed, "ergodicity:pi2");
    auto pi2 = empirical_at(simulate_paths(p, x.x1, x.x2, cpi), cpi.T);

    ErgodicityResult out;
    auto fgrid = make_grid(pi1, pi2);
    out.floor = tv_hat(pi1, pi2, fgrid).var_scale();
    out.floor_se = 2
                   * tv_bootstrap_se(pi1, pi2, fgrid, bootstrap,
                                     derive_seed(cfg.seed, "ergodicity:floor"));

    RiccatiSolver s(p);
    double delta2 = 0;
    for (double z : pi1.Z)
        delta2 += std::abs(z);
    delta2 /= double(pi1.size());

    out.curve.name = "ergodicity";
    out.curve.scale = "var";
    out.curve.constants = {{"t_pi", cpi.T}, {"noise_floor", out.floor},
                           {"noise_floor_se", out.floor_se},
                           {"delta2_hat", delta2}};
    if (c42)
    {
        out.kappa_tilde = c42->kappa_tilde;
        out.curve.constants.push_back({"kappa_tilde", c42->kappa_tilde});
        out.curve.constants.push_back({"C_tilde", c42->C_tilde});
        out.curve.constants.push_back({"Lambda", c42->Lambda});
        out.curve.constants.push_back({"C_eps", c42->C_eps});
        out.curve.notes.push_back("Lambda is probe-based");
    }
    out.curve.notes.push_back("pi_hat is a long-horizon ensemble");
    for (double t : t_grid)
    {
        auto P = empirical_at(ex, t);
        auto grid = make_grid(P, pi1);
        double v = tv_hat(P, pi1, grid).var_scale();
        double se = 2
                    * tv_bootstrap_se(P, pi1, grid, bootstrap,
                                      derive_seed(cfg.seed, "ergodicity:t" + fmt(t)));
        double bound = std::numeric_limits<double>::quiet_NaN();
        if (c42 && t > 0)
            bound = exp_ergodic_bound(*c42, s, x, t, s.delta1(), delta2);
        out.curve.add(t, v, se, bound);
    }

    auto const& rows = out.curve.rows;
    for (std::size_t i = 1; i < rows.size(); ++i)
    {
        double allow = 3 * std::hypot(rows[i].se, rows[i - 1].se);
        if (rows[i].empirical > rows[i - 1].empirical + allow)
            out.monotone = false;
    }
    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(std::max(2, tail_points)),
                                          rows.size());
    if (k >= 2)
    {
        double st = 0, sl = 0, stt = 0, stl = 0;
        for (std::size_t i = rows.size() - k; i < rows.size(); ++i)
        {
            double l = std::log(std::max(rows[i].empirical, 1e-300));
            st += rows[i].t;
            sl += l;
            stt += rows[i].t * rows[i].t;
            stl += rows[i].t * l;
        }
        double n = double(k);
        double slope = (n * stl - st * sl) / (n * stt - st * st);
        out.fitted_rate = -slope;
    }
    out.curve.constants.push_back({"fitted_rate", out.fitted_rate});
    return out;
}

StationaryMoments stationary_moments(ModelParams const& p, XPoint x, SimConfig cfg)
{
    if (!(p.a1 > 0) || !(p.b2 > 0))
        throw DomainError("stationary moments need a1 > 0 and b2 > 0");
    cfg.record_times = {cfg.T / 4, cfg.T / 2};
    auto e = simulate_paths(p, x.x1, x.x2, cfg);
    StationaryMoments out;
    out.delta1_exact = RiccatiSolver(p).delta1();
    for (double h : {cfg.T / 4, cfg.T / 2, cfg.T})
    {
        std::size_t r = e.time_index(h);
        auto m1 = mean_se(e.n_paths, [&](std::size_t i) { return e.y(r, i); });
        auto m2 = mean_se(e.n_paths, [&](std::size_t i) { return std::abs(e.z(r, i)); });
        out.by_horizon.push_back({h, m1.mean, m1.se, m2.mean, m2.se});
    }
    auto const& last = out.by_horizon.back();
    out.delta1_within_3se
        = std::abs(last.delta1 - out.delta1_exact) <= 3 * last.delta1_se;
    return out;
}

BoundReport strong_feller_probe(ModelParams const& p,
                                XPoint x,
                                double t,
                                std::vector<double> const& radii,
                                SimConfig cfg,
                                Lemma51Constants const& c51,
                                int bootstrap)
{
    if (!(t > 0))
        throw DomainError("strong Feller probe needs t > 0");
    RiccatiSolver s(p);
    cfg.T = t;
    cfg.record_times = {};
    SimConfig cx = cfg;
    cx.seed = derive_seed(cfg.seed, "feller:x");
    auto px = empirical_at(simulate_paths(p, x.x1, x.x2, cx), t);

    BoundReport rep;
    rep.name = "strong_feller";
    rep.scale = "var";
    rep.constants = {{"c_bar", c51.c_bar},       {"C1_t", c51.C1_t},
                     {"C2_t", c51.C2_t},         {"Lambda_k", c51.Lambda_k},
                     {"sigma_k_mass", c51.sigma_k_mass}, {"C_k8", c51.C_k8}};
    double vb = s.vbar(t);
    for (std::size_t i = 0; i < radii.size(); ++i)
    {
        double r = radii[i];
        XPoint y{x.x1 + r / std::numbers::sqrt2, x.x2 + r / std::numbers::sqrt2};
        SimConfig cy = cfg;
        cy.seed = derive_seed(cfg.seed, "feller:y" + std::to_string(i));
        auto py = empirical_at(simulate_paths(p, y.x1, y.x2, cy), t);
        auto grid = make_grid(px, py);
        double v = tv_hat(px, py, grid).var_scale();
        double se = 2 * tv_bootstrap_se(px, py, grid, bootstrap,
                                         derive_seed(cy.seed, "bootstrap"));
        double bound = 2 * vb * std::abs(x.x1 - y.x1) + lemma51_bound(c51, x, y, t);
        rep.add(t, v, se, bound);
        rep.rows.back().extra = {{"radius", r}};
    }
    return rep;
}

}  // namespace affine

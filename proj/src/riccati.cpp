#include "affine/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace affine
{
namespace
{
// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double clamp_level = 1e-9;

double gk(std::function<double(double)> const& f, double a, double b)
{
    if (!(b > a))
        return 0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, a, b, 12, 1e-13);
}

}  // namespace

std::size_t RiccatiSolution::index_of(double tt) const
{
    double tol = 1e-12 * std::max(1.0, std::abs(tt));
    auto it = std::lower_bound(t.begin(), t.end(), tt - tol);
    if (it == t.end() || std::abs(*it - tt) > tol)
        throw TimeNotRecorded("time " + std::to_string(tt)
                              + " is not on the solution grid");
    return static_cast<std::size_t>(it - t.begin());
}

RiccatiSolver::RiccatiSolver(ModelParams const& p) : mech_(p)
{
    gamma_ = p.a2;
    if (!p.n.is_zero())
        gamma_ += levy_integral(p.n, [](double z1, double) { return z1; });
}

void RiccatiSolver::integrate(double& t,
                              State& y,
                              double t_end,
                              double& h,
                              double T_scale,
                              RiccatiOptions const& opts,
                              RiccatiSolution& sol,
                              bool record) const
{
    double const b2 = params().b2;
    cplx const u2 = sol.u2;
    auto rhs = [&](double s, State const& st) {
        cplx v2 = std::exp(-b2 * s) * u2;
        return State{mech_.phi(st.V1, v2), mech_.psi(st.V1, v2)};
    };
    auto axpy = [](State const& a, double c, State const& k) {
        return State{a.V1 + c * k.V1, a.Psi + c * k.Psi};
    };

    double const rtol = opts.tol;
    double const atol = opts.atol_ratio * opts.tol;
    double const h_min = 1e-14 * T_scale;
    double err_prev = 1e-4;
    State k1 = rhs(t, y);

    if (!(h > 0))
    {
        double f0 = std::max(std::abs(k1.V1), std::abs(k1.Psi));
        double d0 = std::max(std::abs(y.V1), std::abs(y.Psi)) + atol;
        h = f0 > 0 ? 0.01 * d0 / f0 : t_end - t;
        h = std::max(h, 1e3 * h_min);
    }

    bool last_rejected = false;
    while (t < t_end)
    {
        if (sol.stats.accepted + sol.stats.rejected >= opts.max_steps)
            throw StiffnessFailure("step budget exhausted");
        bool final_step = false;
        double step = h;
        if (t + step >= t_end)
        {
            step = t_end - t;
            final_step = true;
        }
        if (step < h_min && !final_step)
        {
            throw StiffnessFailure("step " + std::to_string(step)
                                   + " below 1e-14 T at t="
                                   + std::to_string(t));
        }

        State k2 = rhs(t + c2 * step, axpy(y, step * a21, k1));
        State y3{y.V1 + step * (a31 * k1.V1 + a32 * k2.V1),
                 y.Psi + step * (a31 * k1.Psi + a32 * k2.Psi)};
        State k3 = rhs(t + c3 * step, y3);
        State y4{y.V1 + step * (a41 * k1.V1 + a42 * k2.V1 + a43 * k3.V1),
                 y.Psi + step * (a41 * k1.Psi + a42 * k2.Psi + a43 * k3.Psi)};
        State k4 = rhs(t + c4 * step, y4);
        State y5{y.V1
                     + step
                           * (a51 * k1.V1 + a52 * k2.V1 + a53 * k3.V1
                              + a54 * k4.V1),
                 y.Psi
                     + step
                           * (a51 * k1.Psi + a52 * k2.Psi + a53 * k3.Psi
                              + a54 * k4.Psi)};
        State k5 = rhs(t + c5 * step, y5);
        State y6{y.V1
                     + step
                           * (a61 * k1.V1 + a62 * k2.V1 + a63 * k3.V1
                              + a64 * k4.V1 + a65 * k5.V1),
                 y.Psi
                     + step
                           * (a61 * k1.Psi + a62 * k2.Psi + a63 * k3.Psi
                              + a64 * k4.Psi + a65 * k5.Psi)};
        State k6 = rhs(t + step, y6);
        State yn{y.V1
                     + step
                           * (b1 * k1.V1 + b3 * k3.V1 + b4 * k4.V1
                              + b5 * k5.V1 + b6 * k6.V1),
                 y.Psi
                     + step
                           * (b1 * k1.Psi + b3 * k3.Psi + b4 * k4.Psi
                              + b5 * k5.Psi + b6 * k6.Psi)};
        State k7 = rhs(t + step, yn);

        cplx ev = step
                  * (e1 * k1.V1 + e3 * k3.V1 + e4 * k4.V1 + e5 * k5.V1
                     + e6 * k6.V1 + e7 * k7.V1);
        cplx ep = step
                  * (e1 * k1.Psi + e3 * k3.Psi + e4 * k4.Psi + e5 * k5.Psi
                     + e6 * k6.Psi + e7 * k7.Psi);
        double sv = atol + rtol * std::max(std::abs(y.V1), std::abs(yn.V1));
        double sp = atol + rtol * std::max(std::abs(y.Psi), std::abs(yn.Psi));
        double err = std::sqrt(0.5
                               * (std::norm(ev) / (sv * sv)
                                  + std::norm(ep) / (sp * sp)));
        if (!std::isfinite(err))
            err = 1e10;

        if (err <= 1)
        {
            t = final_step ? t_end : t + step;
            y = yn;
            if (y.V1.real() > clamp_level)
            {
                y.V1.real(0);
                sol.clamped = true;
                k7 = rhs(t, y);
            }
            k1 = k7;
            ++sol.stats.accepted;
            if (sol.stats.min_step == 0 || step < sol.stats.min_step)
                sol.stats.min_step = step;
            sol.stats.max_step = std::max(sol.stats.max_step, step);
            if (record)
            {
                sol.t.push_back(t);
                sol.V1.push_back(y.V1);
                sol.V2.push_back(std::exp(-b2 * t) * u2);
                sol.psi_accum.push_back(y.Psi);
            }
            double e = std::max(err, 1e-10);
            double fac = 0.9 * std::pow(e, -0.17) * std::pow(err_prev, 0.04);
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
            err_prev = e;
            last_rejected = false;
            if (!final_step)
                h = step * fac;
        }
        else
        {
            ++sol.stats.rejected;
            double fac = std::max(0.2, 0.9 * std::pow(err, -0.17));
            h = step * fac;
            last_rejected = true;
            if (h < h_min)
            {
                throw StiffnessFailure("step " + std::to_string(h)
                                       + " below 1e-14 T at t="
                                       + std::to_string(t));
            }
        }
    }
}

RiccatiSolution RiccatiSolver::solve_V(UPoint const& u,
                                       double T,
                                       RiccatiOptions const& opts) const
{
    if (!(T > 0) || !std::isfinite(T))
        throw DomainError("horizon T must be positive and finite");
    RiccatiSolution sol;
    sol.u1 = u.u1();
    sol.u2 = u.u2();
    sol.t.push_back(0);
    sol.V1.push_back(u.u1());
    sol.V2.push_back(u.u2());
    sol.psi_accum.push_back(0);

    std::vector<double> stops;
    for (double s : opts.output_times)
    {
        if (s > 0 && s < T)
            stops.push_back(s);
    }
    std::sort(stops.begin(), stops.end());
    stops.push_back(T);

    double t = 0, h = 0;
    State y{u.u1(), 0};
    for (double s : stops)
    {
        if (s > t)
            integrate(t, y, s, h, T, opts, sol, true);
    }
    return sol;
}

cplx RiccatiSolver::char_fn(double t,
                            double x1,
                            double x2,
                            UPoint const& u,
                            RiccatiOptions const& opts) const
{
    if (x1 < 0)
        throw DomainError("x1 must be >= 0");
    if (t == 0)
        return std::exp(x1 * u.u1() + x2 * u.u2());
    auto sol = solve_V(u, t, opts);
    return std::exp(x1 * sol.V1.back() + x2 * sol.V2.back()
                    + sol.psi_accum.back());
}

double RiccatiSolver::phi0_tail(double v) const
{
    if (!(v > 0))
        throw DomainError("phi0_tail needs v > 0");
    double total = 0, prev_inc = 0;
    int flat = 0;
    double a = v;
    for (int k = 0; k < 1000; ++k)
    {
        double inc = 0;
        try
        {
            inc = mech_.inverse_phi0_integral(a, 2 * a);
        }
        catch (DomainError const& e)
        {
            throw ConditionAViolated(e.what());
        }
        total += inc;
        // Below z = 1 the integral is finite; only the tail decides.
        bool tail = a >= 1;
        if (tail && inc < 1e-12 * std::max(1.0, total) && k > 0)
            return total;
        flat = (tail && k > 0 && inc >= (1 - 1e-9) * prev_inc) ? flat + 1 : 0;
        if (flat >= 8)
        {
            throw ConditionAViolated(
                "int dz/phi0 does not converge: increments stop decaying");
        }
        prev_inc = inc;
        a *= 2;
        if (!std::isfinite(a))
            break;
    }
    throw ConditionAViolated("int dz/phi0 did not converge within range");
}

double RiccatiSolver::vbar(double t) const
{
    if (!(t > 0))
        throw DomainError("vbar needs t > 0");
    // Solve F(e^s) = t; F decreasing, dF/ds = -e^s / phi0(e^s).
    auto G = [&](double s) { return phi0_tail(std::exp(s)) - t; };
    double lo = 0, hi = 0;
    double g0 = G(0);
    if (g0 > 0)
    {
        lo = 0;
        hi = 1;
        while (G(hi) > 0)
        {
            lo = hi;
            hi *= 2;
            if (hi > 700)
                throw ConditionAViolated("vbar root not bracketed");
        }
    }
    else
    {
        hi = 0;
        lo = -1;
        while (G(lo) < 0)
        {
            hi = lo;
            lo *= 2;
            if (lo < -700)
                throw ConditionAViolated("vbar root not bracketed");
        }
    }

    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it)
    {
        double g = G(s);
        if (g > 0)
            lo = s;
        else
            hi = s;
        double v = std::exp(s);
        double dg = -v / mech_.phi0(v);
        double next = s - g / dg;
        if (!(next > lo && next < hi) || !std::isfinite(next))
            next = 0.5 * (lo + hi);
        if (std::abs(next - s) < 1e-12 || hi - lo < 1e-12)
            return std::exp(next);
        s = next;
    }
    throw NoConvergence("vbar root finding did not converge");
}

VBarTable RiccatiSolver::vbar_table(double t_min, double t_max, int points) const
{
    if (!(t_min > 0) || !(t_max > t_min) || points < 2)
        throw DomainError("vbar table needs 0 < t_min < t_max and >= 2 points");
    VBarTable tab;
    double r = std::log(t_max / t_min) / (points - 1);
    for (int i = 0; i < points; ++i)
    {
        double t = t_min * std::exp(r * i);
        tab.t.push_back(t);
        tab.v.push_back(vbar(t));
        if (i > 0 && !(tab.v[i] < tab.v[i - 1]))
            throw NoConvergence("vbar table is not strictly decreasing");
    }
    return tab;
}

StationaryResult RiccatiSolver::stationary_transform(UPoint const& u,
                                                     double tail_tol,
                                                     RiccatiOptions const& opts) const
{
    ModelParams const& p = params();
    if (!(p.a1 > 0) || !(p.b2 > 0))
        throw DomainError("stationary transform needs a1 > 0 and b2 > 0");
    double T = 1 / std::min(p.a1, p.b2);

    RiccatiSolution sol;
    sol.u1 = u.u1();
    sol.u2 = u.u2();
    double t = 0, h = 0;
    State y{u.u1(), 0};
    integrate(t, y, T, h, T, opts, sol, false);
    for (int k = 0; k < 40; ++k)
    {
        cplx before = y.Psi;
        integrate(t, y, 2 * T, h, 2 * T, opts, sol, false);
        T *= 2;
        if (std::abs(y.Psi - before) < tail_tol)
            return {std::exp(y.Psi), T, y.Psi};
    }
    throw NoConvergence("psi tail did not decay within 40 doublings");
}

double RiccatiSolver::stationary_transform_closed(double u1) const
{
    ModelParams const& p = params();
    if (!(p.a1 > 0))
        throw DomainError("closed stationary transform needs a1 > 0");
    if (u1 > 0)
        throw DomainError("u1 must be <= 0");
    if (u1 == 0)
        return 1;
    double limit = gamma_ / (-p.a1);
    for (int i = 1; i <= 256; ++i)
    {
        double z = u1 * i / 257.0;
        if (!(mech_.phi0(-z) > 0))
            throw SingularIntegrand("phi0_tilde vanishes inside (u1, 0)");
    }
    auto f = [&](double z) {
        if (std::abs(z) < 1e-6)
            return limit;
        double den = mech_.phi0(-z);
        if (!(den > 0))
            throw SingularIntegrand("phi0_tilde vanishes inside (u1, 0)");
        return mech_.P(z) / den;
    };
    // exp{-\int_0^{u1} P / phi0_tilde} = exp{\int_{u1}^0 P / phi0_tilde}
    return std::exp(gk(f, u1, 0));
}

double RiccatiSolver::delta1() const
{
    if (!(params().a1 > 0))
        throw DomainError("delta1 needs a1 > 0");
    return gamma_ / params().a1;
}

double RiccatiSolver::cbi_mean(double t, double y0) const
{
    double a1 = params().a1;
    if (a1 == 0)
        throw DomainError("cbi_mean needs a1 != 0");
    double e = std::exp(-a1 * t);
    return y0 * e + gamma_ / a1 * (1 - e);
}

}  // namespace affine

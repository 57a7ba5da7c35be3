#include "affine/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "affine/parallel.hpp"
#include "affine/rng.hpp"

namespace affine
{
std::string to_string(SmallJumpMode m)
{
    return m == SmallJumpMode::drop_compensate ? "drop_compensate"
                                               : "gaussian_approx";
}

SmallJumpMode small_jump_mode_from_string(std::string const& s)
{
    if (s == "drop_compensate")
        return SmallJumpMode::drop_compensate;
    if (s == "gaussian_approx")
        return SmallJumpMode::gaussian_approx;
    throw ConfigError("unknown small jump mode '" + s + "'");
}

namespace
{
//! Finite (possibly truncated) jump part with moments of the small jumps.
struct JumpPart
{
    bool active = false;
    std::optional<LevySampler> sampler;
    double mass = 0;
    double mean1 = 0;  //!< \int z1 over the simulated jumps
    double mean2 = 0;  //!< \int z2 over the simulated jumps
    bool truncated = false;
    double small_mean1 = 0;
    double small_mean2 = 0;
    // Cholesky factor of the second-moment matrix of the small jumps
    double l11 = 0, l21 = 0, l22 = 0;
};

JumpPart make_part(LevyMeasure const& mu, double eps, char const* label)
{
    JumpPart part;
    if (mu.is_zero())
        return part;
    part.active = true;
    LevyMeasure sim = mu;
    double mass = levy_mass(mu);
    if (!std::isfinite(mass))
    {
        if (!(eps > 0))
        {
            throw ConfigError(std::string(label)
                              + " has infinite activity; eps_trunc must be > 0");
        }
        sim = mu.excluding(Exclusion{eps, 0});
        mass = levy_mass(sim);
        if (!std::isfinite(mass))
        {
            throw ConfigError(std::string(label)
                              + " truncated at eps_trunc still has infinite mass");
        }
        part.truncated = true;

        IntegralOptions small;
        small.rel_tol = 1e-6;
        small.region = Box{0, eps, -eps, eps};
        auto inside = [eps](double z1, double z2) {
            return std::hypot(z1, z2) < eps ? 1.0 : 0.0;
        };
        auto moment = [&](auto g) {
            return levy_integral(
                mu, [&](double a, double b) { return inside(a, b) * g(a, b); },
                small);
        };
        part.small_mean1 = moment([](double a, double) { return a; });
        part.small_mean2 = moment([](double, double b) { return b; });
        double s11 = moment([](double a, double) { return a * a; });
        double s12 = moment([](double a, double b) { return a * b; });
        double s22 = moment([](double, double b) { return b * b; });
        part.l11 = std::sqrt(std::max(0.0, s11));
        part.l21 = part.l11 > 0 ? s12 / part.l11 : 0;
        part.l22 = std::sqrt(std::max(0.0, s22 - part.l21 * part.l21));
    }
    part.mass = mass;
    if (mass > 0)
    {
        part.sampler.emplace(sim);
        part.mean1 = levy_integral(sim, [](double a, double) { return a; });
        part.mean2 = levy_integral(sim, [](double, double b) { return b; });
    }
    else
    {
        part.active = part.truncated;
    }
    return part;
}

struct Plan
{
    double h = 0;
    std::uint32_t n_steps = 0;
    std::vector<double> times;
    std::vector<std::uint32_t> steps;
};

Plan make_plan(SimConfig const& cfg)
{
    if (!(cfg.dt > 0) || !std::isfinite(cfg.dt))
        throw ConfigError("dt must be > 0");
    if (!(cfg.T >= cfg.dt))
        throw ConfigError("T must be >= dt");
    if (!(cfg.eps_trunc >= 0))
        throw ConfigError("eps_trunc must be >= 0");
    if (cfg.coal_tol && !(*cfg.coal_tol > 0))
        throw ConfigError("coal_tol must be > 0");
    if (cfg.n_paths == 0 || cfg.n_paths > 0xffffffffull)
        throw ConfigError("n_paths must be in [1, 2^32)");

    auto to_step = [&](double t) {
        double k = std::round(t / cfg.dt);
        if (std::abs(k * cfg.dt - t) > 1e-9 * std::max(1.0, t))
            throw ConfigError("time " + std::to_string(t)
                              + " is not a multiple of dt");
        if (k > 4e9)
            throw ConfigError("too many steps");
        return static_cast<std::uint32_t>(k);
    };

    Plan plan;
    plan.h = cfg.dt;
    plan.n_steps = to_step(cfg.T);
    std::vector<double> times = cfg.record_times;
    times.push_back(cfg.T);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    for (double t : times)
    {
        if (!(t >= 0) || t > cfg.T * (1 + 1e-12))
            throw ConfigError("record time outside [0, T]");
        std::uint32_t k = to_step(t);
        if (!plan.steps.empty() && plan.steps.back() == k)
            continue;
        plan.times.push_back(t);
        plan.steps.push_back(k);
    }
    return plan;
}

void require_valid(ModelParams const& p)
{
    auto report = validate(p);
    for (auto const& c : report.checks)
    {
        bool needed = c.name != "subcritical_strict" && c.name != "n_log_moment";
        if (needed && !c.pass)
            throw ConfigError("model fails validation check " + c.name);
    }
}

//! Everything that is fixed during a run.
struct Stepper
{
    ModelParams const& p;
    SimConfig const& cfg;
    JumpPart n;
    JumpPart m;
    double h;
    bool gaussian;

    Stepper(ModelParams const& params, SimConfig const& c, double step)
        : p(params),
          cfg(c),
          n(make_part(params.n, c.eps_trunc, "n")),
          m(make_part(params.m, c.eps_trunc, "m")),
          h(step),
          gaussian(c.small_jump_mode == SmallJumpMode::gaussian_approx)
    {
    }

    void jumps(JumpPart const& J,
               double intensity,
               Stream s,
               std::uint32_t path,
               std::uint32_t k,
               double& j1,
               double& j2) const
    {
        if (!J.sampler || !(intensity > 0))
            return;
        CounterRng rng(cfg.seed, s, path, k);
        std::uint64_t count = rng.poisson(h * intensity * J.mass);
        for (std::uint64_t i = 0; i < count; ++i)
        {
            Point z = J.sampler->draw(rng);
            j1 += z.z1;
            j2 += z.z2;
        }
    }

    //! Gaussian stand-in for the small jumps with variance scale * h * S.
    void small(JumpPart const& J,
               double scale,
               Stream s,
               std::uint32_t path,
               std::uint32_t k,
               double& j1,
               double& j2) const
    {
        if (!gaussian || !J.truncated || !(scale > 0))
            return;
        CounterRng rng(cfg.seed, s, path, k);
        double g1 = rng.normal(), g2 = rng.normal();
        double r = std::sqrt(scale * h);
        j1 += r * J.l11 * g1;
        j2 += r * (J.l21 * g1 + J.l22 * g2);
    }

    std::string note() const
    {
        if (!n.truncated && !m.truncated)
            return "";
        return "small jumps below eps_trunc=" + std::to_string(cfg.eps_trunc)
               + " handled by " + to_string(cfg.small_jump_mode);
    }

    //! Shared-noise draws of one step.
    struct Common
    {
        double xi0, xi1, xi2;
        double nj1 = 0, nj2 = 0;
    };

    Common common(std::uint32_t path, std::uint32_t k) const
    {
        Common c;
        c.xi0 = CounterRng(cfg.seed, Stream::W0, path, k).normal();
        c.xi1 = CounterRng(cfg.seed, Stream::W1, path, k).normal();
        c.xi2 = CounterRng(cfg.seed, Stream::W2, path, k).normal();
        jumps(n, 1.0, Stream::N, path, k, c.nj1, c.nj2);
        small(n, 1.0, Stream::Nsmall, path, k, c.nj1, c.nj2);
        // N is not compensated in Y; its small part enters as a drift.
        if (n.truncated)
            c.nj1 += h * n.small_mean1;
        c.nj2 -= h * n.mean2;
        return c;
    }

    //! Branching increments (dY, dZ) of mass Yc driven by (xi1, xi2) and
    //! the M-type stream s.
    void branching(double Yc,
                   double xi1,
                   double xi2,
                   Stream ms,
                   Stream small_s,
                   std::uint32_t path,
                   std::uint32_t k,
                   double& dY,
                   double& dZ) const
    {
        if (!(Yc > 0))
            return;
        double sh = std::sqrt(2 * Yc * h);
        dY += -p.a1 * Yc * h + sh * (std::sqrt(p.a11()) * xi1 + std::sqrt(p.a12()) * xi2);
        dZ += -p.b1 * Yc * h + sh * (std::sqrt(p.a21()) * xi1 + std::sqrt(p.a22()) * xi2);
        double j1 = 0, j2 = 0;
        jumps(m, Yc, ms, path, k, j1, j2);
        small(m, Yc, small_s, path, k, j1, j2);
        dY += j1 - h * Yc * m.mean1;
        dZ += j2 - h * Yc * m.mean2;
    }

    //! One Euler step of the copy with branching mass Y from the common
    //! draws; returns the new (Y, Z) before clamping.
    void step(double& Y,
              double& Z,
              Common const& c,
              std::uint32_t path,
              std::uint32_t k) const
    {
        double Yc = std::max(Y, 0.0);
        double dY = p.a2 * h + c.nj1;
        double dZ = -(p.b0 + p.b2 * Z) * h + p.sigma * std::sqrt(h) * c.xi0 + c.nj2;
        branching(Yc, c.xi1, c.xi2, Stream::M, Stream::Msmall, path, k, dY, dZ);
        Y = std::max(Y + dY, 0.0);
        Z += dZ;
    }
};

}  // namespace

//---------------------------------------------------------------------------//
std::size_t Ensemble::time_index(double t) const
{
    for (std::size_t i = 0; i < times.size(); ++i)
    {
        if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t)))
            return i;
    }
    throw TimeNotRecorded("time " + std::to_string(t) + " was not recorded");
}

std::vector<PathPoint> Ensemble::path(std::size_t p) const
{
    std::vector<PathPoint> out;
    for (std::size_t r = 0; r < times.size(); ++r)
        out.push_back({times[r], y(r, p), z(r, p)});
    return out;
}

std::size_t CoupledEnsemble::time_index(double t) const
{
    for (std::size_t i = 0; i < times.size(); ++i)
    {
        if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t)))
            return i;
    }
    throw TimeNotRecorded("time " + std::to_string(t) + " was not recorded");
}

Ensemble
simulate_paths(ModelParams const& p, double x1, double x2, SimConfig const& cfg)
{
    if (!(x1 >= 0) || !std::isfinite(x1) || !std::isfinite(x2))
        throw ConfigError("start point must satisfy x1 >= 0");
    require_valid(p);
    Plan plan = make_plan(cfg);
    Stepper st(p, cfg, plan.h);

    Ensemble e;
    e.times = plan.times;
    e.n_paths = cfg.n_paths;
    e.Y.resize(plan.times.size() * cfg.n_paths);
    e.Z.resize(e.Y.size());
    e.small_jump_note = st.note();

    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t ip) {
        auto path = static_cast<std::uint32_t>(ip);
        double Y = x1, Z = x2;
        std::size_t r = 0;
        for (std::uint32_t k = 0;; ++k)
        {
            while (r < plan.steps.size() && plan.steps[r] == k)
            {
                e.Y[r * e.n_paths + ip] = Y;
                e.Z[r * e.n_paths + ip] = Z;
                ++r;
            }
            if (k == plan.n_steps)
                break;
            st.step(Y, Z, st.common(path, k), path, k);
        }
    });
    return e;
}

CoupledEnsemble simulate_coupled(ModelParams const& p,
                                 double x1,
                                 double x2,
                                 double y1,
                                 double y2,
                                 SimConfig const& cfg)
{
    for (double v : {x1, x2, y1, y2})
    {
        if (!std::isfinite(v))
            throw ConfigError("start points must be finite");
    }
    if (!(x1 >= 0) || !(y1 >= 0))
        throw ConfigError("start points must have nonnegative first coordinate");
    require_valid(p);
    Plan plan = make_plan(cfg);
    Stepper st(p, cfg, plan.h);

    CoupledEnsemble e;
    e.swapped = x1 < y1;
    if (e.swapped)
    {
        std::swap(x1, y1);
        std::swap(x2, y2);
    }
    e.times = plan.times;
    e.n_paths = cfg.n_paths;
    e.coal_tol = cfg.coal_tol.value_or(1e-12 * std::max(1.0, x1));
    std::size_t cells = plan.times.size() * cfg.n_paths;
    e.Yx.resize(cells);
    e.Zx.resize(cells);
    e.Yy.resize(cells);
    e.Zy.resize(cells);
    e.varsigma.assign(cfg.n_paths, std::numeric_limits<double>::infinity());
    e.small_jump_note = st.note();
    std::vector<char> by_threshold(cfg.n_paths, 0);

    double h = plan.h;
    parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t ip) {
        auto path = static_cast<std::uint32_t>(ip);
        double Yy = y1, Zy = y2, D = x1 - y1, Zx = x2;
        bool merged = false;
        double dz = 0, sigma_hat = 0;
        auto merge = [&](double t) {
            if (D > 0)
                by_threshold[ip] = 1;
            D = 0;
            merged = true;
            sigma_hat = t;
            dz = Zx - Zy;
            e.varsigma[ip] = t;
        };
        if (D <= e.coal_tol)
            merge(0);

        std::size_t r = 0;
        for (std::uint32_t k = 0;; ++k)
        {
            double t = k * h;
            while (r < plan.steps.size() && plan.steps[r] == k)
            {
                std::size_t i = r * e.n_paths + ip;
                e.Yy[i] = Yy;
                e.Zy[i] = Zy;
                e.Yx[i] = Yy + D;
                e.Zx[i] = merged ? Zy + dz * std::exp(-p.b2 * (t - sigma_hat))
                                 : Zx;
                ++r;
            }
            if (k == plan.n_steps)
                break;

            auto c = st.common(path, k);
            if (!merged)
            {
                // Copy x = copy y plus an independent branching mass D.
                double Yc = std::max(Yy, 0.0);
                double Dc = std::max(D, 0.0);
                double dZ = -(p.b0 + p.b2 * Zx) * h
                            + p.sigma * std::sqrt(h) * c.xi0 + c.nj2;
                double dY_common = 0;
                st.branching(Yc, c.xi1, c.xi2, Stream::M, Stream::Msmall, path,
                             k, dY_common, dZ);
                double dD = 0;
                if (Dc > 0)
                {
                    double xi1d = CounterRng(cfg.seed, Stream::W1diff, path, k).normal();
                    double xi2d = CounterRng(cfg.seed, Stream::W2diff, path, k).normal();
                    st.branching(Dc, xi1d, xi2d, Stream::Mdiff,
                                 Stream::Mdiffsmall, path, k, dD, dZ);
                }
                Zx += dZ;
                D = std::max(D + dD, 0.0);
            }
            st.step(Yy, Zy, c, path, k);
            if (!merged && D <= e.coal_tol)
                merge((k + 1) * h);
        }
    });
    e.threshold_coalescences
        = static_cast<std::size_t>(std::count(by_threshold.begin(), by_threshold.end(), 1));

    if (e.swapped)
    {
        std::swap(e.Yx, e.Yy);
        std::swap(e.Zx, e.Zy);
    }
    return e;
}

EmpiricalDistribution empirical_at(Ensemble const& e, double t)
{
    std::size_t r = e.time_index(t);
    EmpiricalDistribution d;
    auto b = e.Y.begin() + static_cast<std::ptrdiff_t>(r * e.n_paths);
    auto bz = e.Z.begin() + static_cast<std::ptrdiff_t>(r * e.n_paths);
    auto n = static_cast<std::ptrdiff_t>(e.n_paths);
    d.Y.assign(b, b + n);
    d.Z.assign(bz, bz + n);
    d.w.assign(e.n_paths, 1.0 / double(e.n_paths));
    return d;
}

EmpiricalDistribution
empirical_at(CoupledEnsemble const& e, double t, bool first)
{
    std::size_t r = e.time_index(t);
    auto const& Y = first ? e.Yx : e.Yy;
    auto const& Z = first ? e.Zx : e.Zy;
    EmpiricalDistribution d;
    auto off = static_cast<std::ptrdiff_t>(r * e.n_paths);
    auto n = static_cast<std::ptrdiff_t>(e.n_paths);
    d.Y.assign(Y.begin() + off, Y.begin() + off + n);
    d.Z.assign(Z.begin() + off, Z.begin() + off + n);
    d.w.assign(e.n_paths, 1.0 / double(e.n_paths));
    return d;
}

}  // namespace affine

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "affine/errors.hpp"
#include "affine/expression.hpp"

namespace affine
{
//! A point z = (z1, z2) of G = R+ x R.
struct Point
{
    double z1 = 0;
    double z2 = 0;
};

struct Atom
{
    double z1 = 0;
    double z2 = 0;
    double w = 0;
};

//! Closed axis-aligned box. An axis with lo == hi is degenerate: the measure
//! lives on that coordinate line and the density is taken w.r.t. the other
//! axis only.
struct Box
{
    double lo1 = 0, hi1 = 0;
    double lo2 = 0, hi2 = 0;

    bool degenerate1() const { return lo1 == hi1; }
    bool degenerate2() const { return lo2 == hi2; }
};

struct DensityPiece
{
    Box box;
    int n1 = 1;  //!< base midpoint cells along z1 (1 if degenerate)
    int n2 = 1;
};

//! Quadrature node or atom. Widths h1, h2 are the midpoint cell sizes
//! (zero for atoms and degenerate axes).
struct QuadNode
{
    double z1 = 0;
    double z2 = 0;
    double w = 0;
    double h1 = 0;
    double h2 = 0;
};

//! Removal of a neighbourhood of the small jumps.
struct Exclusion
{
    double euclid = 0;  //!< drop |z| < euclid
    double abs_z2 = 0;  //!< drop |z2| < abs_z2

    bool active() const { return euclid > 0 || abs_z2 > 0; }
    bool excludes(double z1, double z2) const
    {
        return std::hypot(z1, z2) < euclid || std::abs(z2) < abs_z2;
    }
};

using DensityFn = std::function<double(double, double)>;

//---------------------------------------------------------------------------//
/*!
 * Levy measure on G \ {0}: a finite list of atoms, a density on a union of
 * boxes, or the product of a z1-factor and a z2-factor.
 *
 * Density measures are only defined on their boxes; tails outside are
 * ignored. Values are immutable; copies share the node cache.
 */
class LevyMeasure
{
  public:
    enum class Kind
    {
        atomic,
        density,
        product
    };

    //! Zero measure.
    LevyMeasure();

    static LevyMeasure atomic(std::vector<Atom> atoms);
    static LevyMeasure density(Expression expr, Box domain, int n1, int n2);
    static LevyMeasure density(DensityFn rho,
                               std::vector<DensityPiece> pieces,
                               std::string label = {});
    //! Product of a measure read on its z1 coordinate and a measure read on
    //! its z2 coordinate.
    static LevyMeasure product(LevyMeasure z1_factor, LevyMeasure z2_factor);

    Kind kind() const;
    bool is_zero() const;
    //! True when nodes do not depend on the refinement level.
    bool is_exact() const;

    std::span<Atom const> atoms() const;
    std::span<DensityPiece const> pieces() const;
    std::optional<Expression> const& expression() const;
    double density_at(double z1, double z2) const;
    LevyMeasure z1_factor() const;
    LevyMeasure z2_factor() const;
    double scale() const;
    Exclusion const& exclusion() const;

    //! Nodes at refinement level (base cell counts times 2^level per axis).
    std::shared_ptr<std::vector<QuadNode> const> nodes(int level) const;
    std::size_t node_count(int level) const;

    LevyMeasure excluding(Exclusion ex) const;
    //! Restriction to [lo1, hi1) x [lo2, hi2) (an axis with lo == hi keeps
    //! just that line); throws DomainError if the box leaves G.
    LevyMeasure clipped(Box const& region) const;
    LevyMeasure scaled(double factor) const;

    std::string describe() const;

    struct Impl;

  private:
    explicit LevyMeasure(std::shared_ptr<Impl const> impl);
    std::shared_ptr<Impl const> impl_;
};

//---------------------------------------------------------------------------//
// QUADRATURE
//---------------------------------------------------------------------------//
struct IntegralOptions
{
    double rel_tol = 1e-8;
    std::size_t max_nodes = std::size_t(1) << 20;
    std::optional<Box> region;
};

template<class T>
struct IntegralResult
{
    T value{};
    int level = 0;           //!< refinement level at convergence
    std::size_t nodes = 0;  //!< node count at that level
};

namespace detail
{
template<class T>
double magnitude(T const& v)
{
    return std::abs(v);
}

template<class T>
bool all_finite(T const& v)
{
    if constexpr (std::is_floating_point_v<T>)
        return std::isfinite(v);
    else
        return std::isfinite(v.real()) && std::isfinite(v.imag());
}
}  // namespace detail

//! Integral of f against mu. Densities use the midpoint tensor rule with
//! node doubling; the Romberg-extrapolated value is returned once it
//! changes by less than rel_tol between levels.
template<class F>
auto levy_integral_detail(LevyMeasure const& mu_in,
                          F&& f,
                          IntegralOptions const& opts = {})
    -> IntegralResult<std::decay_t<decltype(f(0.0, 0.0))>>
{
    using T = std::decay_t<decltype(f(0.0, 0.0))>;
    LevyMeasure const mu = opts.region ? mu_in.clipped(*opts.region) : mu_in;

    auto sum_level = [&](int level, double& abs_sum) {
        auto nodes = mu.nodes(level);
        T total{};
        abs_sum = 0;
        for (auto const& n : *nodes)
        {
            T v = f(n.z1, n.z2);
            if (!detail::all_finite(v))
            {
                throw NonFiniteIntegrand(
                    "integrand is not finite at z=(" + std::to_string(n.z1)
                    + "," + std::to_string(n.z2) + ")");
            }
            T wv = v * n.w;
            total += wv;
            abs_sum += detail::magnitude(wv);
        }
        return total;
    };

    IntegralResult<T> result;
    double abs_sum = 0;
    if (mu.is_exact())
    {
        result.value = sum_level(0, abs_sum);
        result.nodes = mu.node_count(0);
        return result;
    }

    // Romberg table on the midpoint sums (error expansion in h^2).
    constexpr int depth = 3;
    std::vector<T> row{sum_level(0, abs_sum)};
    T prev_est = row.back();
    for (int level = 1;; ++level)
    {
        std::size_t count = mu.node_count(level);
        if (count > opts.max_nodes)
        {
            throw QuadratureError("no convergence within "
                                  + std::to_string(opts.max_nodes)
                                  + " nodes on " + mu.describe());
        }
        std::vector<T> next{sum_level(level, abs_sum)};
        double factor = 1;
        for (int k = 1; k <= std::min(level, depth); ++k)
        {
            factor *= 4;
            next.push_back((factor * next[k - 1] - row[k - 1])
                           / (factor - 1));
        }
        T est = next.back();
        if (level >= 2)
        {
            double change = detail::magnitude(est - prev_est);
            if (change <= opts.rel_tol * detail::magnitude(est)
                              + 1e-13 * abs_sum)
            {
                result.value = est;
                result.level = level;
                result.nodes = count;
                return result;
            }
        }
        prev_est = est;
        row = std::move(next);
    }
}

template<class F>
auto levy_integral(LevyMeasure const& mu,
                   F&& f,
                   IntegralOptions const& opts = {})
{
    return levy_integral_detail(mu, std::forward<F>(f), opts).value;
}

//! Total mass; +infinity when the mass quadrature does not converge.
double levy_mass(LevyMeasure const& mu, IntegralOptions const& opts = {});

//---------------------------------------------------------------------------//
/*!
 * Draws i.i.d. points with law mu / mu(G).
 *
 * Atoms are selected by inverse CDF; density cells come from a converged
 * quadrature grid (two levels finer) and the point is jittered uniformly
 * inside the chosen cell. Excluded regions are handled by rejection.
 */
class LevySampler
{
  public:
    //! Throws ZeroMass if mu has no mass, InfiniteMass if it is not finite.
    explicit LevySampler(LevyMeasure const& mu);

    double mass() const { return mass_; }

    template<class Rng>
    Point draw(Rng& rng) const
    {
        for (int attempt = 0; attempt < 10000; ++attempt)
        {
            Point p;
            if (factor1_)
            {
                p.z1 = factor1_->draw_raw(rng).z1;
                p.z2 = factor2_->draw_raw(rng).z2;
            }
            else
            {
                p = draw_raw(rng);
            }
            if (!exclusion_.active() || !exclusion_.excludes(p.z1, p.z2))
                return p;
        }
        throw ZeroMass("rejection sampling failed: exclusion covers mass");
    }

  private:
    template<class Rng>
    Point draw_raw(Rng& rng) const
    {
        double u = rng.uniform() * cdf_.back();
        std::size_t i = locate(u);
        QuadNode const& c = cells_[i];
        Point p{c.z1, c.z2};
        if (c.h1 > 0)
            p.z1 += (rng.uniform() - 0.5) * c.h1;
        if (c.h2 > 0)
            p.z2 += (rng.uniform() - 0.5) * c.h2;
        return p;
    }

    std::size_t locate(double u) const;

    double mass_ = 0;
    std::vector<QuadNode> cells_;
    std::vector<double> cdf_;
    Exclusion exclusion_;
    std::shared_ptr<LevySampler const> factor1_;
    std::shared_ptr<LevySampler const> factor2_;
};

}  // namespace affine

#include "affine/levy_measure.hpp"

#include <algorithm>
#include <limits>
#include <mutex>
#include <sstream>

namespace affine
{
namespace
{
constexpr std::size_t max_cached_nodes = std::size_t(1) << 18;

int refine(int base, int level, bool degenerate)
{
    if (degenerate)
        return 1;
    return base << level;
}

Exclusion merge(Exclusion a, Exclusion const& b)
{
    a.euclid = std::max(a.euclid, b.euclid);
    a.abs_z2 = std::max(a.abs_z2, b.abs_z2);
    return a;
}

// Point membership in a region axis [lo_r, hi_r) (closed when the axis
// itself is a point), so that adjacent regions partition the line.
bool in_half_open(double x, double lo_r, double hi_r)
{
    if (lo_r == hi_r)
        return x == lo_r;
    return x >= lo_r && x < hi_r;
}

// Clip [lo, hi] to the region axis; false if nothing is left.
bool clip_interval(double& lo, double& hi, double lo_r, double hi_r)
{
    if (lo == hi)
        return in_half_open(lo, lo_r, hi_r);
    double nlo = std::max(lo, lo_r);
    double nhi = std::min(hi, hi_r);
    if (!(nhi > nlo))
        return false;
    lo = nlo;
    hi = nhi;
    return true;
}

int scaled_count(int n, double new_width, double old_width)
{
    if (old_width <= 0)
        return 1;
    double c = std::ceil(n * new_width / old_width - 1e-9);
    return std::max(1, static_cast<int>(c));
}

}  // namespace

struct LevyMeasure::Impl
{
    Kind kind = Kind::atomic;
    std::vector<Atom> atoms;
    DensityFn rho;
    std::optional<Expression> expr;
    std::string label;
    std::vector<DensityPiece> pieces;
    std::shared_ptr<Impl const> f1;
    std::shared_ptr<Impl const> f2;
    double scale = 1;
    Exclusion exclusion;

    mutable std::mutex mutex;
    mutable std::vector<std::shared_ptr<std::vector<QuadNode> const>> cache;

    std::shared_ptr<Impl> clone() const
    {
        auto out = std::make_shared<Impl>();
        out->kind = kind;
        out->atoms = atoms;
        out->rho = rho;
        out->expr = expr;
        out->label = label;
        out->pieces = pieces;
        out->f1 = f1;
        out->f2 = f2;
        out->scale = scale;
        out->exclusion = exclusion;
        return out;
    }

    bool exact() const
    {
        switch (kind)
        {
            case Kind::atomic:
                return true;
            case Kind::density:
                return false;
            case Kind::product:
                return f1->exact() && f2->exact();
        }
        return false;
    }

    std::size_t count(int level) const
    {
        switch (kind)
        {
            case Kind::atomic:
                return atoms.size();
            case Kind::density:
            {
                std::size_t total = 0;
                for (auto const& p : pieces)
                {
                    total += std::size_t(refine(p.n1, level, p.box.degenerate1()))
                             * std::size_t(
                                 refine(p.n2, level, p.box.degenerate2()));
                }
                return total;
            }
            case Kind::product:
                return f1->count(level) * f2->count(level);
        }
        return 0;
    }

    std::vector<QuadNode> build(int level) const
    {
        std::vector<QuadNode> out;
        switch (kind)
        {
            case Kind::atomic:
                out.reserve(atoms.size());
                for (auto const& a : atoms)
                    out.push_back({a.z1, a.z2, a.w * scale, 0, 0});
                break;
            case Kind::density:
                out.reserve(count(level));
                for (auto const& p : pieces)
                {
                    Box const& b = p.box;
                    int n1 = refine(p.n1, level, b.degenerate1());
                    int n2 = refine(p.n2, level, b.degenerate2());
                    double h1 = b.degenerate1() ? 0 : (b.hi1 - b.lo1) / n1;
                    double h2 = b.degenerate2() ? 0 : (b.hi2 - b.lo2) / n2;
                    double cell = (h1 > 0 ? h1 : 1.0) * (h2 > 0 ? h2 : 1.0);
                    for (int i = 0; i < n1; ++i)
                    {
                        double z1 = b.degenerate1() ? b.lo1
                                                    : b.lo1 + (i + 0.5) * h1;
                        for (int j = 0; j < n2; ++j)
                        {
                            double z2 = b.degenerate2()
                                            ? b.lo2
                                            : b.lo2 + (j + 0.5) * h2;
                            if (exclusion.active()
                                && exclusion.excludes(z1, z2))
                                continue;
                            double r = rho(z1, z2);
                            if (!std::isfinite(r))
                            {
                                throw NonFiniteIntegrand(
                                    "density is not finite at ("
                                    + std::to_string(z1) + ","
                                    + std::to_string(z2) + ")");
                            }
                            if (r < 0)
                            {
                                throw DomainError(
                                    "density is negative at ("
                                    + std::to_string(z1) + ","
                                    + std::to_string(z2) + ")");
                            }
                            out.push_back({z1, z2, r * cell * scale, h1, h2});
                        }
                    }
                }
                break;
            case Kind::product:
            {
                auto a = f1->build(level);
                auto b = f2->build(level);
                out.reserve(a.size() * b.size());
                for (auto const& x : a)
                {
                    for (auto const& y : b)
                    {
                        if (exclusion.active() && exclusion.excludes(x.z1, y.z2))
                            continue;
                        out.push_back(
                            {x.z1, y.z2, x.w * y.w * scale, x.h1, y.h2});
                    }
                }
                break;
            }
        }
        return out;
    }
};

LevyMeasure::LevyMeasure() : impl_(std::make_shared<Impl>()) {}

LevyMeasure::LevyMeasure(std::shared_ptr<Impl const> impl)
    : impl_(std::move(impl))
{
}

LevyMeasure LevyMeasure::atomic(std::vector<Atom> atoms)
{
    for (auto const& a : atoms)
    {
        if (!(std::isfinite(a.z1) && std::isfinite(a.z2) && std::isfinite(a.w)))
            throw DomainError("atom with non-finite entries");
        if (a.z1 < 0)
            throw DomainError("atom outside G: z1 < 0");
        if (a.w < 0)
            throw DomainError("negative atom weight");
    }
    std::erase_if(atoms, [](Atom const& a) { return a.w == 0; });
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::atomic;
    impl->atoms = std::move(atoms);
    return LevyMeasure(std::move(impl));
}

LevyMeasure LevyMeasure::density(Expression expr, Box domain, int n1, int n2)
{
    DensityFn fn = [expr](double z1, double z2) { return expr(z1, z2); };
    auto m = density(std::move(fn), {{domain, n1, n2}}, expr.text());
    auto impl = m.impl_->clone();
    impl->expr = std::move(expr);
    return LevyMeasure(std::move(impl));
}

LevyMeasure LevyMeasure::density(DensityFn rho,
                                 std::vector<DensityPiece> pieces,
                                 std::string label)
{
    for (auto& p : pieces)
    {
        Box const& b = p.box;
        if (!(std::isfinite(b.lo1) && std::isfinite(b.hi1)
              && std::isfinite(b.lo2) && std::isfinite(b.hi2)))
            throw DomainError("density domain must be finite");
        if (b.hi1 < b.lo1 || b.hi2 < b.lo2)
            throw DomainError("density domain has lo > hi");
        if (b.lo1 < 0)
            throw DomainError("density domain leaves G: z1 < 0");
        if (b.degenerate1() && b.degenerate2())
            throw DomainError("density domain is a single point");
        if ((!b.degenerate1() && p.n1 < 1) || (!b.degenerate2() && p.n2 < 1))
            throw DomainError("density node counts must be positive");
        if (b.degenerate1())
            p.n1 = 1;
        if (b.degenerate2())
            p.n2 = 1;
    }
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::density;
    impl->rho = std::move(rho);
    impl->pieces = std::move(pieces);
    impl->label = std::move(label);
    return LevyMeasure(std::move(impl));
}

LevyMeasure LevyMeasure::product(LevyMeasure z1_factor, LevyMeasure z2_factor)
{
    auto impl = std::make_shared<Impl>();
    impl->kind = Kind::product;
    impl->f1 = z1_factor.impl_;
    impl->f2 = z2_factor.impl_;
    return LevyMeasure(std::move(impl));
}

LevyMeasure::Kind LevyMeasure::kind() const
{
    return impl_->kind;
}

bool LevyMeasure::is_zero() const
{
    if (impl_->scale == 0)
        return true;
    switch (impl_->kind)
    {
        case Kind::atomic:
            return impl_->atoms.empty();
        case Kind::density:
            return impl_->pieces.empty();
        case Kind::product:
            return z1_factor().is_zero() || z2_factor().is_zero();
    }
    return true;
}

bool LevyMeasure::is_exact() const
{
    return impl_->exact();
}

std::span<Atom const> LevyMeasure::atoms() const
{
    return impl_->atoms;
}

std::span<DensityPiece const> LevyMeasure::pieces() const
{
    return impl_->pieces;
}

std::optional<Expression> const& LevyMeasure::expression() const
{
    return impl_->expr;
}

double LevyMeasure::density_at(double z1, double z2) const
{
    if (impl_->kind != Kind::density)
        return 0;
    for (auto const& p : impl_->pieces)
    {
        Box const& b = p.box;
        bool in1 = b.degenerate1() ? z1 == b.lo1 : (z1 > b.lo1 && z1 <= b.hi1);
        bool in2 = b.degenerate2() ? z2 == b.lo2 : (z2 > b.lo2 && z2 <= b.hi2);
        if (in1 && in2)
        {
            if (impl_->exclusion.active() && impl_->exclusion.excludes(z1, z2))
                return 0;
            return impl_->scale * impl_->rho(z1, z2);
        }
    }
    return 0;
}

LevyMeasure LevyMeasure::z1_factor() const
{
    return impl_->f1 ? LevyMeasure(impl_->f1) : LevyMeasure();
}

LevyMeasure LevyMeasure::z2_factor() const
{
    return impl_->f2 ? LevyMeasure(impl_->f2) : LevyMeasure();
}

double LevyMeasure::scale() const
{
    return impl_->scale;
}

Exclusion const& LevyMeasure::exclusion() const
{
    return impl_->exclusion;
}

std::shared_ptr<std::vector<QuadNode> const> LevyMeasure::nodes(int level) const
{
    Impl const& im = *impl_;
    if (im.count(level) > max_cached_nodes)
        return std::make_shared<std::vector<QuadNode> const>(im.build(level));

    std::lock_guard<std::mutex> lock(im.mutex);
    auto idx = static_cast<std::size_t>(level);
    if (im.cache.size() <= idx)
        im.cache.resize(idx + 1);
    if (!im.cache[idx])
        im.cache[idx] = std::make_shared<std::vector<QuadNode> const>(im.build(level));
    return im.cache[idx];
}

std::size_t LevyMeasure::node_count(int level) const
{
    return impl_->count(level);
}

LevyMeasure LevyMeasure::excluding(Exclusion ex) const
{
    auto impl = impl_->clone();
    impl->exclusion = merge(impl->exclusion, ex);
    switch (impl->kind)
    {
        case Kind::atomic:
            std::erase_if(impl->atoms, [&](Atom const& a) {
                return ex.excludes(a.z1, a.z2);
            });
            break;
        case Kind::density:
        {
            // Cut the excluded band out of pieces exactly where the geometry
            // allows it; 2-D pieces keep a node mask.
            std::vector<DensityPiece> out;
            for (auto p : impl->pieces)
            {
                Box b = p.box;
                if (b.degenerate2())
                {
                    if (std::abs(b.lo2) < ex.abs_z2)
                        continue;
                    double c = b.lo2;
                    if (std::abs(c) < ex.euclid)
                    {
                        double r = std::sqrt(ex.euclid * ex.euclid - c * c);
                        double old = b.hi1 - b.lo1;
                        if (!clip_interval(b.lo1, b.hi1, r, b.hi1))
                            continue;
                        p.n1 = scaled_count(p.n1, b.hi1 - b.lo1, old);
                    }
                    p.box = b;
                    out.push_back(p);
                    continue;
                }
                double r2 = ex.abs_z2;
                if (b.degenerate1() && b.lo1 < ex.euclid)
                {
                    double c = b.lo1;
                    r2 = std::max(r2, std::sqrt(ex.euclid * ex.euclid - c * c));
                }
                if (r2 > 0)
                {
                    double old = b.hi2 - b.lo2;
                    Box neg = b, pos = b;
                    if (clip_interval(neg.lo2, neg.hi2, b.lo2, -r2))
                    {
                        DensityPiece q = p;
                        q.box = neg;
                        q.n2 = scaled_count(p.n2, neg.hi2 - neg.lo2, old);
                        out.push_back(q);
                    }
                    if (clip_interval(pos.lo2, pos.hi2, r2, b.hi2))
                    {
                        DensityPiece q = p;
                        q.box = pos;
                        q.n2 = scaled_count(p.n2, pos.hi2 - pos.lo2, old);
                        out.push_back(q);
                    }
                    continue;
                }
                out.push_back(p);
            }
            impl->pieces = std::move(out);
            break;
        }
        case Kind::product:
            break;
    }
    return LevyMeasure(std::move(impl));
}

LevyMeasure LevyMeasure::clipped(Box const& region) const
{
    if (region.lo1 < 0)
        throw DomainError("region leaves G: z1 < 0");
    if (region.hi1 < region.lo1 || region.hi2 < region.lo2)
        throw DomainError("region has lo > hi");

    auto impl = impl_->clone();
    switch (impl->kind)
    {
        case Kind::atomic:
            std::erase_if(impl->atoms, [&](Atom const& a) {
                return !in_half_open(a.z1, region.lo1, region.hi1)
                       || !in_half_open(a.z2, region.lo2, region.hi2);
            });
            break;
        case Kind::density:
        {
            std::vector<DensityPiece> out;
            for (auto p : impl->pieces)
            {
                Box b = p.box;
                double w1 = b.hi1 - b.lo1, w2 = b.hi2 - b.lo2;
                if (!clip_interval(b.lo1, b.hi1, region.lo1, region.hi1))
                    continue;
                if (!clip_interval(b.lo2, b.hi2, region.lo2, region.hi2))
                    continue;
                if (b.degenerate1() && b.degenerate2())
                    continue;
                p.n1 = scaled_count(p.n1, b.hi1 - b.lo1, w1);
                p.n2 = scaled_count(p.n2, b.hi2 - b.lo2, w2);
                p.box = b;
                out.push_back(p);
            }
            impl->pieces = std::move(out);
            break;
        }
        case Kind::product:
        {
            double inf = std::numeric_limits<double>::infinity();
            impl->f1 = LevyMeasure(impl->f1)
                           .clipped({region.lo1, region.hi1, -inf, inf})
                           .impl_;
            impl->f2 = LevyMeasure(impl->f2)
                           .clipped({0, inf, region.lo2, region.hi2})
                           .impl_;
            break;
        }
    }
    return LevyMeasure(std::move(impl));
}

LevyMeasure LevyMeasure::scaled(double factor) const
{
    if (!(factor >= 0) || !std::isfinite(factor))
        throw DomainError("scale factor must be finite and >= 0");
    auto impl = impl_->clone();
    impl->scale *= factor;
    return LevyMeasure(std::move(impl));
}

std::string LevyMeasure::describe() const
{
    std::ostringstream os;
    switch (impl_->kind)
    {
        case Kind::atomic:
            os << "atomic measure (" << impl_->atoms.size() << " atoms)";
            break;
        case Kind::density:
            os << "density '" << impl_->label << "' on "
               << impl_->pieces.size() << " piece(s)";
            break;
        case Kind::product:
            os << "product [" << LevyMeasure(impl_->f1).describe() << "] x ["
               << LevyMeasure(impl_->f2).describe() << "]";
            break;
    }
    return os.str();
}

double levy_mass(LevyMeasure const& mu, IntegralOptions const& opts)
{
    try
    {
        return levy_integral(mu, [](double, double) { return 1.0; }, opts);
    }
    catch (QuadratureError const&)
    {
        return std::numeric_limits<double>::infinity();
    }
}

//---------------------------------------------------------------------------//
LevySampler::LevySampler(LevyMeasure const& mu)
{
    mass_ = levy_mass(mu);
    if (!std::isfinite(mass_))
        throw InfiniteMass("cannot sample from " + mu.describe());
    if (!(mass_ > 0))
        throw ZeroMass("cannot sample from a zero measure");

    if (mu.kind() == LevyMeasure::Kind::product)
    {
        factor1_ = std::make_shared<LevySampler const>(mu.z1_factor());
        factor2_ = std::make_shared<LevySampler const>(mu.z2_factor());
        exclusion_ = mu.exclusion();
        return;
    }

    int level = 0;
    if (!mu.is_exact())
    {
        auto res = levy_integral_detail(mu, [](double, double) { return 1.0; });
        level = res.level + 2;
        while (level > 0 && mu.node_count(level) > (std::size_t(1) << 20))
            --level;
    }
    cells_ = *mu.nodes(level);
    exclusion_ = mu.exclusion();
    cdf_.reserve(cells_.size());
    double acc = 0;
    for (auto const& c : cells_)
    {
        acc += c.w;
        cdf_.push_back(acc);
    }
    if (cdf_.empty() || !(cdf_.back() > 0))
        throw ZeroMass("sampler grid carries no mass");
}

std::size_t LevySampler::locate(double u) const
{
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end())
        --it;
    return static_cast<std::size_t>(it - cdf_.begin());
}

}  // namespace affine

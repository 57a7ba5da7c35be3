#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "affine/levy_measure.hpp"
#include "affine/model.hpp"

namespace affine
{
enum class SmallJumpMode
{
    drop_compensate,
    gaussian_approx,
};

std::string to_string(SmallJumpMode m);
SmallJumpMode small_jump_mode_from_string(std::string const& s);

struct SimConfig
{
    double dt = 1e-3;
    double T = 1;
    double eps_trunc = 0;
    SmallJumpMode small_jump_mode = SmallJumpMode::drop_compensate;
    //! Coalescence threshold; defaults to 1e-12 * max(1, x1) when unset.
    std::optional<double> coal_tol;
    std::size_t n_paths = 1000;
    std::uint64_t seed = 1;
    //! Times to record; each must be a multiple of dt. T is always added.
    std::vector<double> record_times;
    unsigned threads = 1;
};

struct PathPoint
{
    double t = 0;
    double Y = 0;
    double Z = 0;
};

//! Weighted sample of (Y, Z) pairs.
struct EmpiricalDistribution
{
    std::vector<double> Y;
    std::vector<double> Z;
    std::vector<double> w;

    std::size_t size() const { return Y.size(); }
};

//---------------------------------------------------------------------------//
/*!
 * Paths of (Y, Z) sampled at the record times.
 *
 * Values for record index r and path p live at r * n_paths + p.
 */
struct Ensemble
{
    std::vector<double> times;
    std::size_t n_paths = 0;
    std::vector<double> Y;
    std::vector<double> Z;
    std::string small_jump_note;

    std::size_t time_index(double t) const;
    double y(std::size_t r, std::size_t p) const { return Y[r * n_paths + p]; }
    double z(std::size_t r, std::size_t p) const { return Z[r * n_paths + p]; }
    std::vector<PathPoint> path(std::size_t p) const;
};

//! Shared-noise coupling of the processes started at x and y.
struct CoupledEnsemble
{
    std::vector<double> times;
    std::size_t n_paths = 0;
    std::vector<double> Yx, Zx, Yy, Zy;
    //! Coalescence time per path, +inf if the Y-coordinates never met.
    std::vector<double> varsigma;
    //! Paths declared coalesced while D was in (0, coal_tol].
    std::size_t threshold_coalescences = 0;
    double coal_tol = 0;
    bool swapped = false;  //!< x1 < y1 on input: the roles were exchanged
    std::string small_jump_note;

    std::size_t time_index(double t) const;
    bool coalesced(std::size_t p) const
    {
        return varsigma[p] < std::numeric_limits<double>::infinity();
    }
    std::size_t at(std::size_t r, std::size_t p) const
    {
        return r * n_paths + p;
    }
    //! Fraction of paths with coalescence triggered by the threshold.
    double coal_bias() const
    {
        return n_paths ? double(threshold_coalescences) / double(n_paths) : 0;
    }
};

Ensemble simulate_paths(ModelParams const& p,
                        double x1,
                        double x2,
                        SimConfig const& cfg);

CoupledEnsemble simulate_coupled(ModelParams const& p,
                                 double x1,
                                 double x2,
                                 double y1,
                                 double y2,
                                 SimConfig const& cfg);

EmpiricalDistribution empirical_at(Ensemble const& e, double t);
//! Law of the copy started at x (first = true) or at y.
EmpiricalDistribution
empirical_at(CoupledEnsemble const& e, double t, bool first);

}  // namespace affine

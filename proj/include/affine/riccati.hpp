#pragma once

#include <vector>

#include "affine/mechanisms.hpp"

namespace affine
{
struct RiccatiOptions
{
    double tol = 1e-10;        //!< relative tolerance
    double atol_ratio = 1e-2;  //!< absolute tolerance = atol_ratio * tol
    std::size_t max_steps = 2000000;
    //! Times the integrator must land on (recorded in addition to steps).
    std::vector<double> output_times;
};

struct StepStats
{
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    double min_step = 0;
    double max_step = 0;
};

//---------------------------------------------------------------------------//
/*!
 * Solution of V1' = phi(V1, e^{-b2 t} u2), V1(0) = u1, together with
 * Psi(t) = \int_0^t psi(V(s,u)) ds, on the accepted step grid.
 */
struct RiccatiSolution
{
    cplx u1;
    cplx u2;
    std::vector<double> t;
    std::vector<cplx> V1;
    std::vector<cplx> V2;
    std::vector<cplx> psi_accum;
    StepStats stats;
    bool clamped = false;  //!< Re(V1) drifted above 1e-9 and was reset

    //! Index of the grid point at time tt; throws TimeNotRecorded.
    std::size_t index_of(double tt) const;
};

struct VBarTable
{
    std::vector<double> t;
    std::vector<double> v;
};

struct StationaryResult
{
    cplx value;
    double horizon = 0;
    cplx log_value;
};

//---------------------------------------------------------------------------//
/*!
 * Riccati flow, characteristic functions, v-bar and stationary functionals
 * of one model.
 */
class RiccatiSolver
{
  public:
    explicit RiccatiSolver(ModelParams const& p);

    RiccatiSolution solve_V(UPoint const& u,
                            double T,
                            RiccatiOptions const& opts = {}) const;

    //! E exp<X_t(x), u>
    cplx char_fn(double t,
                 double x1,
                 double x2,
                 UPoint const& u,
                 RiccatiOptions const& opts = {}) const;

    //! Solution of v' = -phi0(v) from v(0+) = inf.
    double vbar(double t) const;
    VBarTable vbar_table(double t_min, double t_max, int points) const;
    //! \int_v^inf dz / phi0(z); throws ConditionAViolated if it diverges.
    double phi0_tail(double v) const;

    StationaryResult stationary_transform(UPoint const& u,
                                          double tail_tol = 1e-10,
                                          RiccatiOptions const& opts = {}) const;
    double stationary_transform_closed(double u1) const;

    //! gamma = a2 + \int z1 n(dz)
    double gamma() const { return gamma_; }
    double delta1() const;
    double cbi_mean(double t, double y0) const;

    Mechanisms const& mechanisms() const { return mech_; }
    ModelParams const& params() const { return mech_.params(); }

  private:
    struct State
    {
        cplx V1;
        cplx Psi;
    };

    //! Advance (t, y) to t_end, appending accepted points to sol.
    void integrate(double& t,
                   State& y,
                   double t_end,
                   double& h,
                   double T_scale,
                   RiccatiOptions const& opts,
                   RiccatiSolution& sol,
                   bool record) const;

    Mechanisms mech_;
    double gamma_ = 0;
};

}  // namespace affine

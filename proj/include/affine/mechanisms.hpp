#pragma once

#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affine/model.hpp"

namespace affine
{
using cplx = std::complex<double>;

//! Point of U = C_- x iR.
class UPoint
{
  public:
    //! Throws InvalidUPoint unless Re(u1) <= 1e-12 and |Re(u2)| <= 1e-12.
    UPoint(cplx u1, cplx u2);

    cplx u1() const { return u1_; }
    cplx u2() const { return u2_; }

  private:
    cplx u1_;
    cplx u2_;
};

//! e^w - 1 - w without cancellation for small |w|.
cplx exp_m1_m_id(cplx w);
double exp_m1_m_id(double w);

cplx phi(UPoint const& u, ModelParams const& p);
cplx psi(UPoint const& u, ModelParams const& p);
//! Throws DomainError for x < 0.
double phi0(double x, ModelParams const& p);
//! Throws DomainError for x > 0.
double phi0_tilde(double x, ModelParams const& p);
//! Immigration mechanism; throws DomainError for x > 0.
double P_mech(double x, ModelParams const& p);

//---------------------------------------------------------------------------//
/*!
 * Mechanisms evaluated against node sets frozen at construction.
 *
 * The level is one beyond the one at which the quadrature of a probe
 * integrand converged, so repeated calls (Riccati stages, root finding)
 * cost one pass over the nodes. No U-membership checks.
 */
class Mechanisms
{
  public:
    explicit Mechanisms(ModelParams p);

    cplx phi(cplx u1, cplx u2) const;
    cplx psi(cplx u1, cplx u2) const;
    double phi0(double x) const;
    double P(double x) const;

    //! \int dz / phi0 over [lo, hi], split at doublings of lo.
    double inverse_phi0_integral(double lo, double hi) const;

    ModelParams const& params() const { return p_; }

  private:
    ModelParams p_;
    std::vector<QuadNode> m_nodes_;
    std::vector<QuadNode> n_nodes_;
};

//---------------------------------------------------------------------------//
/*!
 * Measure on the real line given by atoms or a density on intervals.
 *
 * Used for n_eps and sigma_k: shift overlaps (nu ^ delta_a * nu)(R) and
 * shift total variations ||nu - delta_a * nu||.
 */
class LineMeasure
{
  public:
    using Fn = std::function<double(double)>;

    static LineMeasure from_atoms(std::vector<std::pair<double, double>> atoms);
    static LineMeasure from_density(Fn g,
                                    std::vector<std::pair<double, double>> support);
    //! From a measure on the z2 line (z1 = 0); see z2_marginal.
    static LineMeasure from_levy(LevyMeasure const& mu);

    bool is_atomic() const { return !g_; }
    double density(double z) const;
    double mass() const;
    double integral(Fn const& f) const;
    double overlap(double a) const;
    double tv_shift(double a) const;

    //! Number of shifted atoms that matched an atom (atomic case).
    int matched_atoms(double a) const;

  private:
    double shifted_integral(double a, std::function<double(double, double)> const& h) const;

    std::vector<std::pair<double, double>> atoms_;
    Fn g_;
    std::vector<std::pair<double, double>> support_;
};

//---------------------------------------------------------------------------//
// CONDITIONS
//---------------------------------------------------------------------------//
enum class Verdict
{
    holds,
    fails,
    inconclusive
};

std::string to_string(Verdict v);

struct ConditionReport
{
    std::string condition;  //!< "A", "B", "C", "Cprime", "D"
    nlohmann::json inputs;
    std::vector<std::pair<double, double>> evidence;
    Verdict verdict = Verdict::inconclusive;
    std::optional<double> Lambda;
    std::map<std::string, double> values;
    std::vector<std::string> notes;
};

nlohmann::json to_json(ConditionReport const& r);

ConditionReport check_A(ModelParams const& p,
                        std::vector<double> theta_grid,
                        double z_max,
                        int doublings = 12);

ConditionReport check_B(ModelParams const& p,
                        double eps,
                        double eta,
                        std::vector<double> const& a_grid);

//! Shift-TV ratio r(rho) = max over a in {+-rho, +-rho/2} of TV(a) / rho.
double shift_tv_ratio(LineMeasure const& mu, double rho);

ConditionReport check_C(ModelParams const& p,
                        double eps,
                        std::vector<double> const& rho_grid);
ConditionReport check_Cprime(ModelParams const& p,
                             double eps,
                             std::vector<double> const& rho_grid);

//! Density on [lo, hi] of the z2 line.
struct LineDensity
{
    LineMeasure::Fn f;
    double lo = 0;
    double hi = 0;
    std::string label;
};

ConditionReport check_D(ModelParams const& p,
                        LineDensity const& rho0,
                        LineDensity const& g,
                        std::vector<int> const& k_list,
                        int K,
                        std::vector<double> const& rho_grid = {1e-1, 1e-2,
                                                               1e-3, 1e-4});

//! sigma_k = min(k g, rho0) as a line measure.
LineMeasure sigma_k(LineDensity const& rho0, LineDensity const& g, double k);

}  // namespace affine

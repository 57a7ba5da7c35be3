#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affine/riccati.hpp"
#include "affine/simulator.hpp"

namespace affine
{
struct XPoint
{
    double x1 = 0;
    double x2 = 0;
};

//---------------------------------------------------------------------------//
// TOTAL VARIATION ESTIMATION
//---------------------------------------------------------------------------//
//! Bin edges per axis; points outside fall into the edge bins.
struct HistogramGrid
{
    std::vector<double> e1;
    std::vector<double> e2;

    std::size_t n1() const { return e1.size() - 1; }
    std::size_t n2() const { return e2.size() - 1; }
    std::size_t bin(double y, double z) const;
};

//! Grid over the pooled 1%-99% quantile box of P and Q.
HistogramGrid make_grid(EmpiricalDistribution const& P,
                        EmpiricalDistribution const& Q,
                        int n1 = 50,
                        int n2 = 50);

//! Bin masses (row-major in the first axis).
std::vector<double>
histogram(EmpiricalDistribution const& P, HistogramGrid const& grid);

//! Half-L1 histogram distance and the sup-norm-scale value (twice it).
struct TvEstimate
{
    double tv = 0;
    double var_scale() const { return 2 * tv; }
};

TvEstimate tv_hat(EmpiricalDistribution const& P,
                  EmpiricalDistribution const& Q,
                  HistogramGrid const& grid);
TvEstimate tv_hat(EmpiricalDistribution const& P,
                  EmpiricalDistribution const& Q,
                  int n1 = 50,
                  int n2 = 50);

//! Bootstrap standard error of tv_hat (equal-weight samples).
double tv_bootstrap_se(EmpiricalDistribution const& P,
                       EmpiricalDistribution const& Q,
                       HistogramGrid const& grid,
                       int replicates,
                       std::uint64_t seed);

//! Expected tv_hat of two independent samples of sizes n_p, n_q from a law
//! with the given bin masses (normal approximation per bin).
double predicted_floor(std::vector<double> const& masses,
                       std::size_t n_p,
                       std::size_t n_q);

//---------------------------------------------------------------------------//
// CONSTANTS
//---------------------------------------------------------------------------//
struct Lemma31Constants
{
    double C11 = 0;
    double C12 = 0;
    double C1 = 0;
    double C2 = 0;
};

//! Throws SubcriticalityViolated unless 0 < 2 b2 < a1.
Lemma31Constants lemma31_constants(double a1,
                                   double b1,
                                   double b2,
                                   double alpha21,
                                   double alpha22,
                                   double m_z2_second_moment);
Lemma31Constants lemma31_constants(ModelParams const& p);

//! \int |z2|^2 m(dz)
double m_z2_second_moment(ModelParams const& p);

//! kappa = max(1, 1 / (e b2))
double kappa(double b2);

struct Prop42Constants
{
    double Lambda = 0;
    double C_eps = 0;
    double kappa_tilde = 0;
    double C_tilde = 0;
    bool probe_based = true;  //!< Lambda comes from finitely many shifts
};

Prop42Constants prop42_constants(Lemma31Constants const& c,
                                 double b2,
                                 double Lambda,
                                 double C_eps);
//! Runs the condition C checker; throws ConditionCViolated if it fails.
Prop42Constants prop42_constants(ModelParams const& p,
                                 double eps,
                                 std::vector<double> const& rho_grid);

struct Lemma51Constants
{
    double c_bar = 0;
    double C1_t = 0;
    double C2_t = 0;
    double Lambda_k = 0;
    double sigma_k_mass = 0;
    double C_k8 = 0;
};

double lemma51_c_bar(double alpha21, double alpha22, double m_z2_second_moment);
double lemma51_C1(double a1, double b2, double c_bar, double t);
double lemma51_C2(double a1, double b1, double b2, double t);
Lemma51Constants lemma51_constants(ModelParams const& p,
                                   double t,
                                   double Lambda_k,
                                   double sigma_k_mass);

//---------------------------------------------------------------------------//
// BOUNDS
//---------------------------------------------------------------------------//
//! T_t (|x2 - y2| + C2 (x1 - y1) + sqrt(C1 (x1 - y1)))
double lemma31_bound(Lemma31Constants const& c,
                     double b2,
                     XPoint x,
                     XPoint y,
                     double t);
//! P{|Z_t(x) - Z_t(y)| > T_t eta} bound
double lemma31_tail_bound(Lemma31Constants const& c,
                          XPoint x,
                          XPoint y,
                          double eta);

//! 1 + (v + 1)|x1 - y1| + sqrt|x1 - y1| + |x2 - y2|
double difference_bracket(double v, XPoint x, XPoint y);

double prop33_bound(RiccatiSolver const& s,
                    XPoint x,
                    XPoint y,
                    double t,
                    double C_hat);
//! Smallest C_hat making the bound dominate the given values on the grid.
double fit_C_hat(RiccatiSolver const& s,
                 XPoint x,
                 XPoint y,
                 std::vector<double> const& t_grid,
                 std::vector<double> const& var_values);

double prop42_bound(Prop42Constants const& c,
                    RiccatiSolver const& s,
                    XPoint x,
                    XPoint y,
                    double t);

//! Distance of P_t(x, .) to the stationary law, given Delta1 and Delta2.
double exp_ergodic_bound(Prop42Constants const& c,
                         RiccatiSolver const& s,
                         XPoint x,
                         double t,
                         double delta1,
                         double delta2);

//! 2 e^{-sigma_k t} + C_k8 {|x2 - y2| + sqrt(C1(t)|x1 - y1|) + C2(t)|x1 - y1|}
double lemma51_bound(Lemma51Constants const& c, XPoint x, XPoint y, double t);

//---------------------------------------------------------------------------//
// REPORTS
//---------------------------------------------------------------------------//
struct BoundRow
{
    double t = 0;
    double empirical = 0;
    double se = 0;
    double bound = 0;
    //! empirical - bound exceeds 3 se plus the row's allowance
    bool violation = false;
    std::vector<std::pair<std::string, double>> extra;
};

struct BoundReport
{
    std::string name;
    std::string scale;  //!< "tv" or "var"
    std::vector<BoundRow> rows;
    std::vector<std::pair<std::string, double>> constants;
    std::vector<std::string> notes;

    bool any_violation() const;
    void add(double t, double empirical, double se, double bound, double allowance = 0);
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

//---------------------------------------------------------------------------//
// EXPERIMENTS
//---------------------------------------------------------------------------//
struct Lemma31Result
{
    BoundReport mean;  //!< E|Z_t(x) - Z_t(y)|
    BoundReport tail;  //!< one row per (t, eta)
};

Lemma31Result lemma31_check(ModelParams const& p,
                            XPoint x,
                            XPoint y,
                            std::vector<double> const& t_grid,
                            SimConfig cfg,
                            std::vector<double> const& eta_grid = {0.5, 1, 2});
//! Same, on an existing coupled ensemble started at (x, y).
Lemma31Result lemma31_check(ModelParams const& p,
                            CoupledEnsemble const& e,
                            XPoint x,
                            XPoint y,
                            std::vector<double> const& t_grid,
                            std::vector<double> const& eta_grid = {0.5, 1, 2});

//! Non-coalescence probability against min(1, vbar_t (x1 - y1)).
BoundReport coalescence_curve(ModelParams const& p,
                              double x1,
                              double y1,
                              std::vector<double> const& t_grid,
                              SimConfig cfg);

//! Decomposition check on a coupled ensemble: left and right sides of
//! 2 TV(P_t(x), P_t(y)) <= 2 P{not coalesced} + 2 TV on coalesced paths.
struct CouplingChain
{
    double lhs = 0;
    double non_coalesced = 0;
    double coalesced_term = 0;
    double rhs() const { return 2 * non_coalesced + coalesced_term; }
};

CouplingChain coupling_chain(CoupledEnsemble const& e, double t, int n1 = 50, int n2 = 50);

struct ErgodicityResult
{
    BoundReport curve;  //!< 2 tv_hat(P_t(x), pi_hat) on the var scale
    double floor = 0;   //!< var scale, two independent pi_hat ensembles
    double floor_se = 0;
    double fitted_rate = 0;
    bool monotone = true;
    std::optional<double> kappa_tilde;
};

//! pi_hat is built at horizon 4 max(t_grid) from x with independent seeds.
ErgodicityResult ergodicity_curve(ModelParams const& p,
                                  XPoint x,
                                  std::vector<double> const& t_grid,
                                  SimConfig cfg,
                                  std::optional<Prop42Constants> const& c42 = {},
                                  int bootstrap = 20,
                                  int tail_points = 3);

struct MomentEstimate
{
    double horizon = 0;
    double delta1 = 0;
    double delta1_se = 0;
    double delta2 = 0;
    double delta2_se = 0;
};

struct StationaryMoments
{
    std::vector<MomentEstimate> by_horizon;  //!< T/4, T/2, T
    double delta1_exact = 0;
    bool delta1_within_3se = false;
};

//! Long-horizon averages of Y and |Z| from x at cfg.T, cfg.T/2, cfg.T/4.
StationaryMoments
stationary_moments(ModelParams const& p, XPoint x, SimConfig cfg);

//! Strong Feller probe, one row per radius; y = x + r (1, 1) / sqrt 2.
BoundReport strong_feller_probe(ModelParams const& p,
                                XPoint x,
                                double t,
                                std::vector<double> const& radii,
                                SimConfig cfg,
                                Lemma51Constants const& c51,
                                int bootstrap = 20);

//! Seed of an experiment point: seed xor FNV-1a(label).
std::uint64_t derive_seed(std::uint64_t seed, std::string const& label);

}  // namespace affine

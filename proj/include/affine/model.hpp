#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

#include "affine/levy_measure.hpp"

namespace affine
{
//---------------------------------------------------------------------------//
/*!
 * Coefficients of the (1+1)-dimensional affine model.
 *
 * Y is the CBI component (drift a2 - a1 Y, branching jumps m, immigration
 * jumps n); Z is the OU-type component (drift -(b0 + b1 Y + b2 Z)).
 */
struct ModelParams
{
    double a1 = 0;
    double a2 = 0;
    double b0 = 0;
    double b1 = 0;
    double b2 = 0;
    double sigma = 0;
    //! alpha[i][j] = alpha_{i+1, j+1}
    std::array<std::array<double, 2>, 2> alpha{};
    LevyMeasure m;
    LevyMeasure n;

    double a11() const { return alpha[0][0]; }
    double a12() const { return alpha[0][1]; }
    double a21() const { return alpha[1][0]; }
    double a22() const { return alpha[1][1]; }

    //! 0 < 2 b2 < a1
    bool subcritical_strict() const { return 0 < 2 * b2 && 2 * b2 < a1; }
};

struct ValidationCheck
{
    std::string name;
    double value = 0;  //!< may be +inf
    std::string threshold;
    bool pass = false;
};

struct ValidationReport
{
    std::vector<ValidationCheck> checks;

    bool all_pass() const;
    //! Throws std::out_of_range for an unknown name.
    ValidationCheck const& at(std::string const& name) const;
};

//! Integrability, log-moment and sign checks; never throws on failure.
ValidationReport validate(ModelParams const& params);

//! Integral over half-open sub-boxes cut at the given coordinates, summed.
//! Non-convergence is reported as +inf.
double split_integral(LevyMeasure const& mu,
                      DensityFn const& f,
                      std::vector<double> const& cuts1,
                      std::vector<double> const& cuts2);

//! Image of mu under z -> z2, as a measure on the z2 line (z1 = 0).
LevyMeasure z2_marginal(LevyMeasure const& mu);

//! The finite measure n_eps on the z2 line: full marginal if n has finite
//! mass, otherwise the marginal restricted to |z2| >= eps.
LevyMeasure levy_restrict_tail(LevyMeasure const& n, double eps);

//---------------------------------------------------------------------------//
// JSON
//---------------------------------------------------------------------------//
//! axis < 0: measure on G; axis 0/1: 1-D factor on z1/z2 in variable z.
LevyMeasure levy_from_json(nlohmann::json const& j, int axis = -1);
nlohmann::json levy_to_json(LevyMeasure const& mu, int axis = -1);

ModelParams model_from_json(nlohmann::json const& j);
nlohmann::json model_to_json(ModelParams const& p);
ModelParams load_model(std::string const& path);

nlohmann::json to_json(ValidationReport const& r);

//! Finite values as numbers; infinities and NaN as the strings "inf",
//! "-inf", "nan".
nlohmann::json json_number(double v);
double number_from_json(nlohmann::json const& j);

}  // namespace affine

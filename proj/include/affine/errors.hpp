#pragma once

#include <stdexcept>
#include <string>

namespace affine
{
/// Base of every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

#define AFFINE_DEFINE_ERROR(Name)                                            \
    class Name : public Error                                                \
    {                                                                        \
      public:                                                                \
        explicit Name(std::string const& what) : Error(#Name ": " + what) {} \
    }

// Measures and quadrature
AFFINE_DEFINE_ERROR(NonFiniteIntegrand);
AFFINE_DEFINE_ERROR(DomainError);
AFFINE_DEFINE_ERROR(QuadratureError);
AFFINE_DEFINE_ERROR(InfiniteMass);
AFFINE_DEFINE_ERROR(ZeroMass);
AFFINE_DEFINE_ERROR(ExpressionError);
AFFINE_DEFINE_ERROR(ModelFormatError);

// Mechanisms and conditions
AFFINE_DEFINE_ERROR(InvalidUPoint);
AFFINE_DEFINE_ERROR(UnsupportedMeasure);
AFFINE_DEFINE_ERROR(DominationViolated);

// Riccati system
AFFINE_DEFINE_ERROR(StiffnessFailure);
AFFINE_DEFINE_ERROR(ConditionAViolated);
AFFINE_DEFINE_ERROR(NoConvergence);
AFFINE_DEFINE_ERROR(SingularIntegrand);

// Simulation and analysis
AFFINE_DEFINE_ERROR(ConfigError);
AFFINE_DEFINE_ERROR(TimeNotRecorded);
AFFINE_DEFINE_ERROR(EmptyDistribution);
AFFINE_DEFINE_ERROR(SubcriticalityViolated);
AFFINE_DEFINE_ERROR(ConditionCViolated);

#undef AFFINE_DEFINE_ERROR

}  // namespace affine

#pragma once

#include <stdexcept>
#include <string>

namespace hawkesq {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define HAWKESQ_ERROR(Name)                                       \
  struct Name : Error {                                           \
    explicit Name(const std::string& msg = #Name) : Error(msg) {} \
  }

HAWKESQ_ERROR(UnstableProcess);
HAWKESQ_ERROR(StableProcess);
HAWKESQ_ERROR(NearSingularGap);
HAWKESQ_ERROR(SingularMatrix);
HAWKESQ_ERROR(SingularShiftedMatrix);
HAWKESQ_ERROR(NonSquare);
HAWKESQ_ERROR(NonHurwitz);
HAWKESQ_ERROR(OrderCapExceeded);
HAWKESQ_ERROR(InvalidSubGenerator);
HAWKESQ_ERROR(InvalidInitialDist);
HAWKESQ_ERROR(DimensionMismatch);
HAWKESQ_ERROR(CgfBlowup);
HAWKESQ_ERROR(EventCapExceeded);
HAWKESQ_ERROR(InsufficientReps);
HAWKESQ_ERROR(NoConvergence);
HAWKESQ_ERROR(ConfigError);
HAWKESQ_ERROR(DegenerateObjective);

#undef HAWKESQ_ERROR

// Stable-side gap below which closed forms in 1/(beta-alpha) are refused.
inline constexpr double kNearSingularGapTol = 1e-8;

}  // namespace hawkesq

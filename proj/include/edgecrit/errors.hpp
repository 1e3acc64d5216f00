#pragma once

#include <stdexcept>
#include <string>

namespace edgecrit {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define EDGECRIT_ERROR(Name)                                  \
    struct Name : Error {                                     \
        explicit Name(const std::string& m) : Error(#Name ": " + m) {} \
    }

EDGECRIT_ERROR(NoConvergence);
EDGECRIT_ERROR(DegenerateInterval);
EDGECRIT_ERROR(OutOfSupport);
EDGECRIT_ERROR(AssumptionViolated);
EDGECRIT_ERROR(QuadratureFailure);
EDGECRIT_ERROR(PoleSuspected);
EDGECRIT_ERROR(OutOfRange);
EDGECRIT_ERROR(BranchCut);
EDGECRIT_ERROR(PathFailure);
EDGECRIT_ERROR(ContaminationDetected);
EDGECRIT_ERROR(CalibrationUnstable);
EDGECRIT_ERROR(PrecisionExhausted);
EDGECRIT_ERROR(NonPositiveNorm);
EDGECRIT_ERROR(ConfigError);
EDGECRIT_ERROR(InvalidFamily);

#undef EDGECRIT_ERROR

}  // namespace edgecrit

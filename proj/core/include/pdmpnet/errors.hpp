#pragma once

#include <stdexcept>
#include <string>

namespace pdmpnet {

/// Base class of every error raised by the library.  `kind()` is the stable
/// machine-readable name used in CLI error reports.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define PDMPNET_DEFINE_ERROR(Name)                                           \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(#Name, what) {}       \
    }

// network
PDMPNET_DEFINE_ERROR(DuplicateDirection);
PDMPNET_DEFINE_ERROR(BadDimension);
PDMPNET_DEFINE_ERROR(BadEpsilon);
// model
PDMPNET_DEFINE_ERROR(InadmissibleControl);
PDMPNET_DEFINE_ERROR(MissingPrecondition);
PDMPNET_DEFINE_ERROR(BadRho);
PDMPNET_DEFINE_ERROR(BadParameter);
// simulate
PDMPNET_DEFINE_ERROR(LeftNetwork);
PDMPNET_DEFINE_ERROR(StalledEvent);
PDMPNET_DEFINE_ERROR(RateBoundViolated);
// control_projection
PDMPNET_DEFINE_ERROR(ScaleViolated);
PDMPNET_DEFINE_ERROR(InadmissibleInput);
PDMPNET_DEFINE_ERROR(AssumptionCViolated);
// hjb
PDMPNET_DEFINE_ERROR(NoAdmissibleControl);
PDMPNET_DEFINE_ERROR(StepTooLarge);
// linearize
PDMPNET_DEFINE_ERROR(MarginViolated);
PDMPNET_DEFINE_ERROR(SchemeMismatch);
PDMPNET_DEFINE_ERROR(Infeasible);
PDMPNET_DEFINE_ERROR(Unbounded);
PDMPNET_DEFINE_ERROR(IterationLimit);
// cli
PDMPNET_DEFINE_ERROR(ConfigError);

#undef PDMPNET_DEFINE_ERROR

}  // namespace pdmpnet

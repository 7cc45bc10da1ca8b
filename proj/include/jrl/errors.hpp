#pragma once

#include <stdexcept>
#include <string>

namespace jrl {

// One exception type per failure kind so callers (and the CLI) can map
// them to diagnostics without string matching.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define JRL_DEFINE_ERROR(Name)                                              \
    struct Name : Error {                                                   \
        explicit Name(const std::string& w) : Error(#Name, w) {}            \
    }

JRL_DEFINE_ERROR(DomainViolation);
JRL_DEFINE_ERROR(PoleHit);
JRL_DEFINE_ERROR(PoleAtTrivialZ);
JRL_DEFINE_ERROR(FitIllConditioned);
JRL_DEFINE_ERROR(CapTooLarge);
JRL_DEFINE_ERROR(TruncationLoss);
JRL_DEFINE_ERROR(UnsupportedInsertion);
JRL_DEFINE_ERROR(BranchUnresolved);
JRL_DEFINE_ERROR(DegenerateInsertion);
JRL_DEFINE_ERROR(AdmissibilityViolation);
JRL_DEFINE_ERROR(NonIntegerWeight);
JRL_DEFINE_ERROR(NotOnLattice);
JRL_DEFINE_ERROR(GridDegenerate);
JRL_DEFINE_ERROR(ConfigError);

#undef JRL_DEFINE_ERROR

} // namespace jrl

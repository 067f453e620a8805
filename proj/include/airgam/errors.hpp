#pragma once

#include <stdexcept>
#include <string>

namespace airgam {

/// Base class for all recoverable pipeline errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define AIRGAM_ERROR(Name)                                              \
    struct Name : Error {                                               \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

// ingest
AIRGAM_ERROR(MalformedHeader);
// features
AIRGAM_ERROR(DegenerateColumn);
AIRGAM_ERROR(InsufficientData);
AIRGAM_ERROR(EmptyDesign);
// gam_core
AIRGAM_ERROR(BadKnots);
AIRGAM_ERROR(RankDeficient);
AIRGAM_ERROR(TooFewRows);
AIRGAM_ERROR(UnseenLevel);
AIRGAM_ERROR(MissingFeature);
// selection
AIRGAM_ERROR(DegenerateCandidate);
AIRGAM_ERROR(NoViableModel);
// evaluation
AIRGAM_ERROR(PeriodTooShort);
AIRGAM_ERROR(LengthMismatch);
AIRGAM_ERROR(ZeroVariance);
// transfer
AIRGAM_ERROR(InsufficientCoverage);
// analysis
AIRGAM_ERROR(NoOverlap);
AIRGAM_ERROR(UnknownStation);
// cli
AIRGAM_ERROR(ConfigError);
AIRGAM_ERROR(MissingArtifact);

#undef AIRGAM_ERROR

} // namespace airgam

#pragma once

#include <stdexcept>
#include <string>

namespace zefchan {

// Base class of every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- channel table validation ------------------------------------------
struct EmptyTable : Error { using Error::Error; };
struct MalformedTable : Error { using Error::Error; };
struct NegativeEntry : Error { using Error::Error; };
struct NonStochasticRow : Error { using Error::Error; };

// --- indexing / argument validation ------------------------------------
struct IndexOutOfRange : Error { using Error::Error; };
struct InvalidDistribution : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct InvalidCodebook : Error { using Error::Error; };

// --- decoding / enumeration --------------------------------------------
// Probable set came back empty: the output sequence cannot have been
// produced by any codeword, so the transcript or channel is corrupted.
struct ImpossibleOutput : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct NoValidCode : Error { using Error::Error; };

// --- protocol configuration / execution --------------------------------
struct NonterminatingConfig : Error { using Error::Error; };
struct PhaseMismatch : Error { using Error::Error; };
struct DegenerateConfig : Error { using Error::Error; };
struct RoundCapExceeded : Error { using Error::Error; };
// A state machine broke its zero-error contract; indicates a bug, never a
// channel realization.
struct ProtocolViolation : Error { using Error::Error; };

// --- statistics ----------------------------------------------------------
struct DegenerateSamples : Error { using Error::Error; };

// --- file formats / artifact plumbing ------------------------------------
struct ParseError : Error { using Error::Error; };
struct IncompatibleArtifacts : Error { using Error::Error; };

}  // namespace zefchan

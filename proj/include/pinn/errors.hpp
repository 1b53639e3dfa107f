#pragma once

#include <stdexcept>
#include <string>

namespace pinn {

// Base class for all library errors. Every failure mode has its own type so
// callers can react precisely; the CLI maps categories onto exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- model / numerics ---
class SingularNetworkMatrix : public Error { using Error::Error; };
class NonFiniteState : public Error { using Error::Error; };
class DimensionMismatch : public Error { using Error::Error; };
class StepSizeUnderflow : public Error { using Error::Error; };
class EmptySolution : public Error { using Error::Error; };

// --- sampling / datasets ---
class InvalidDomain : public Error { using Error::Error; };
class GridTooLarge : public Error { using Error::Error; };
class TooFewTrajectories : public Error { using Error::Error; };

// --- persistence ---
class IoFailure : public Error { using Error::Error; };
class FormatVersionMismatch : public Error { using Error::Error; };
class ChecksumMismatch : public Error { using Error::Error; };

// --- network / training ---
class InvalidDims : public Error { using Error::Error; };
class NonFiniteInput : public Error { using Error::Error; };
class NonFiniteLoss : public Error { using Error::Error; };
class OptimizerDiverged : public Error { using Error::Error; };
class LineSearchFailed : public Error { using Error::Error; };
class AllTermsDisabled : public Error { using Error::Error; };

// --- orchestration ---
class ConfigError : public Error { using Error::Error; };
class MissingArtifact : public Error { using Error::Error; };

}  // namespace pinn

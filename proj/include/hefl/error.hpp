#pragma once

#include <stdexcept>
#include <string>

namespace hefl {

// Values are part of the C ABI (see hefl.h); append only.
enum class ErrorCode : int {
    kOk = 0,
    kInvalidArgument = 1,
    kOverflow = 2,
    kDegenerateParties = 3,
    kSessionMismatch = 4,
    kLengthMismatch = 5,
    kSingleUseViolation = 6,
    kDealerExhausted = 7,
    kShapeMismatch = 8,
    kPrecisionMismatch = 9,
    kEmptyBatch = 10,
    kEmptyDataset = 11,
    kSpecMismatch = 12,
    kZeroSamples = 13,
    kKTooLarge = 14,
    kAlignmentMismatch = 15,
    kAllZeroWeights = 16,
    kUnknownModelId = 17,
    kQuorumFailure = 18,
    kLedgerRejection = 19,
    kSessionAbort = 20,
    kEmptyEvalSet = 21,
    kConfig = 22,
    kIo = 23,
    kPhase = 24,
    kInternal = 25,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// A failure inside one stage of run_scenario. The phase tag is reported by the CLI.
class PhaseError : public Error {
public:
    PhaseError(std::string phase, ErrorCode cause, const std::string& what)
        : Error(ErrorCode::kPhase, "[" + phase + "] " + what),
          phase_(std::move(phase)),
          cause_(cause) {}

    const std::string& phase() const noexcept { return phase_; }
    ErrorCode cause() const noexcept { return cause_; }

private:
    std::string phase_;
    ErrorCode cause_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

}  // namespace hefl

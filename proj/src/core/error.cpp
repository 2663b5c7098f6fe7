#include "hefl/error.hpp"

namespace hefl {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::kOk: return "Ok";
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kOverflow: return "OverflowError";
        case ErrorCode::kDegenerateParties: return "DegenerateParties";
        case ErrorCode::kSessionMismatch: return "SessionMismatch";
        case ErrorCode::kLengthMismatch: return "LengthMismatch";
        case ErrorCode::kSingleUseViolation: return "SingleUseViolation";
        case ErrorCode::kDealerExhausted: return "DealerExhausted";
        case ErrorCode::kShapeMismatch: return "ShapeMismatch";
        case ErrorCode::kPrecisionMismatch: return "PrecisionMismatch";
        case ErrorCode::kEmptyBatch: return "EmptyBatch";
        case ErrorCode::kEmptyDataset: return "EmptyDataset";
        case ErrorCode::kSpecMismatch: return "SpecMismatch";
        case ErrorCode::kZeroSamples: return "ZeroSamples";
        case ErrorCode::kKTooLarge: return "KTooLarge";
        case ErrorCode::kAlignmentMismatch: return "AlignmentMismatch";
        case ErrorCode::kAllZeroWeights: return "AllZeroWeights";
        case ErrorCode::kUnknownModelId: return "UnknownModelId";
        case ErrorCode::kQuorumFailure: return "QuorumFailure";
        case ErrorCode::kLedgerRejection: return "LedgerRejection";
        case ErrorCode::kSessionAbort: return "SessionAbort";
        case ErrorCode::kEmptyEvalSet: return "EmptyEvalSet";
        case ErrorCode::kConfig: return "ConfigError";
        case ErrorCode::kIo: return "IoError";
        case ErrorCode::kPhase: return "PhaseFailure";
        case ErrorCode::kInternal: return "Internal";
    }
    return "Unknown";
}

}  // namespace hefl

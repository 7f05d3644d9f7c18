#include "iomdp/errors.hpp"

namespace iomdp {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::EmptyModel: return "EmptyModel";
        case ErrorCode::NonStochasticRow: return "NonStochasticRow";
        case ErrorCode::NotRecurrent: return "NotRecurrent";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::ExplosionGuard: return "ExplosionGuard";
        case ErrorCode::ModeRequired: return "ModeRequired";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NotActionIndependent: return "NotActionIndependent";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::Unbounded: return "Unbounded";
        case ErrorCode::NotOptimal: return "NotOptimal";
        case ErrorCode::SingularChain: return "SingularChain";
        case ErrorCode::PolicyDomainMismatch: return "PolicyDomainMismatch";
        case ErrorCode::StatusMismatch: return "StatusMismatch";
        case ErrorCode::MissingArtifact: return "MissingArtifact";
    }
    return "Unknown";
}

}  // namespace iomdp

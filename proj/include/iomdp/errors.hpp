#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iomdp {

enum class ErrorCode {
    InvalidInput,
    EmptyModel,
    NonStochasticRow,
    NotRecurrent,
    SingularSystem,
    ExplosionGuard,
    ModeRequired,
    DimensionMismatch,
    NotActionIndependent,
    Infeasible,
    Unbounded,
    NotOptimal,
    SingularChain,
    PolicyDomainMismatch,
    StatusMismatch,
    MissingArtifact,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace iomdp

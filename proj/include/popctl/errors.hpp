#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace popctl {

enum class ErrorKind {
    configuration,   // bad names, missing sections, out-of-range parameters
    evaluation,      // a field returned a non-finite value
    range,           // exp overflow / underflow in a transform
    domain,          // log or quotient of a non-positive quantity
    numerical,       // solver failed to converge, truncation detected
    perturbation,    // initial density outside the mass-preserving class
    size,            // grid larger than the configured cap
    usage,           // incompatible arguments (mismatched bins, ...)
    control,         // control undefined at a state
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace popctl

#include "popctl/errors.hpp"

namespace popctl {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::configuration: return "configuration error";
        case ErrorKind::evaluation: return "evaluation error";
        case ErrorKind::range: return "range error";
        case ErrorKind::domain: return "domain error";
        case ErrorKind::numerical: return "numerical error";
        case ErrorKind::perturbation: return "perturbation-class error";
        case ErrorKind::size: return "size error";
        case ErrorKind::usage: return "usage error";
        case ErrorKind::control: return "control-undefined error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace popctl

#pragma once

#include <stdexcept>
#include <string>

namespace recon_net {

enum class ErrorKind {
    invalid_network,
    undefined_reciprocity,
    domain,
    parse,
    validation,
    configuration,
    numerical,
    non_convergence,
    degenerate,
    insufficient_data,
    io,
};

inline const char* to_string(ErrorKind k) noexcept {
    switch (k) {
        case ErrorKind::invalid_network: return "invalid-network";
        case ErrorKind::undefined_reciprocity: return "undefined-reciprocity";
        case ErrorKind::domain: return "domain";
        case ErrorKind::parse: return "parse";
        case ErrorKind::validation: return "validation";
        case ErrorKind::configuration: return "configuration";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::non_convergence: return "non-convergence";
        case ErrorKind::degenerate: return "degenerate";
        case ErrorKind::insufficient_data: return "insufficient-data";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

/// Single exception type for the library; the kind tells callers (and the CLI
/// exit-status mapping) what went wrong.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace recon_net

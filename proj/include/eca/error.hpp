#pragma once

#include <stdexcept>
#include <string>

namespace eca {

// Base for every error the library raises. `kind()` is a stable short tag
// used in structured CLI error output and bootstrap failure tallies.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error("parse_error", w) {}
};

struct SchemaError : Error {
    explicit SchemaError(const std::string& w) : Error("schema_violation", w) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error("configuration_error", w) {}
};

struct DataError : Error {
    explicit DataError(const std::string& w) : Error("data_error", w) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error("domain_error", w) {}
};

struct SeparationError : Error {
    explicit SeparationError(const std::string& w) : Error("separation", w) {}
};

struct SingularityError : Error {
    explicit SingularityError(const std::string& w) : Error("singular", w) {}
};

struct NonConvergence : Error {
    explicit NonConvergence(const std::string& w) : Error("non_convergence", w) {}
};

struct ExtremeWeightError : Error {
    explicit ExtremeWeightError(const std::string& w) : Error("extreme_weight", w) {}
};

}  // namespace eca

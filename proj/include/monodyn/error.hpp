#pragma once

#include <stdexcept>
#include <string>

namespace monodyn {

enum class ErrorKind {
    invalid_argument,   // malformed parameters or input values
    degenerate_point,   // mean position where the field vanishes (kink region)
    degenerate_trap,    // omega = 0: no confinement along z, saturation undefined
    degenerate_field,   // field identically zero at the given means
    mode_domain,        // signed saturation requested where it yields a negative variance
    not_linear,         // constant-coefficient system required
    numerical_failure,  // non-finite values or step-size underflow
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

}  // namespace monodyn

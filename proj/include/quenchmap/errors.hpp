#pragma once

#include <stdexcept>
#include <string>

namespace quenchmap {

// Base class so callers can catch everything from this library in one handler.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Config text that cannot be read: bad syntax, unknown keys, duplicates.
class parse_error : public error {
public:
    using error::error;
};

// Well-formed input with an unusable value (bad bounds, wrong grid size,
// non-positive stiffness, ...). Carries the offending field name in the message.
class validation_error : public error {
public:
    using error::error;
};

// Map evaluation at a trap time where cos(omega*tau) vanishes.
class singular_time_error : public error {
public:
    singular_time_error(double tau, double cosine)
        : error("singular map time tau=" + std::to_string(tau) +
                ": |cos(omega*tau)|=" + std::to_string(cosine) +
                " is below the singularity margin"),
          tau_(tau) {}
    double tau() const noexcept { return tau_; }

private:
    double tau_;
};

// A numerical result missed a requested tolerance.
class tolerance_error : public error {
public:
    using error::error;
};

// A hard resource cap was hit (step counts, basis sizes, step-size floors).
class resource_limit_error : public error {
public:
    using error::error;
};

} // namespace quenchmap

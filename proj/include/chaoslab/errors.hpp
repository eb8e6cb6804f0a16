#pragma once

#include <stdexcept>
#include <string>

namespace chaoslab {

// Error taxonomy shared by the library and the command-line driver.  Each
// class maps to a fixed process exit code so scripted callers can react to
// the failure kind without parsing messages.
//
//   precondition_error -> exit 2   (inputs violate a documented precondition)
//   capacity_error     -> exit 3   (request exceeds a documented size cap)
//   io_error           -> exit 4   (file missing, unreadable, or malformed)

class precondition_error : public std::runtime_error {
public:
    explicit precondition_error(const std::string& what)
        : std::runtime_error(what) {}
};

class capacity_error : public std::runtime_error {
public:
    explicit capacity_error(const std::string& what)
        : std::runtime_error(what) {}
};

class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what)
        : std::runtime_error(what) {}
};

// Named refinements used by the experiment drivers.  Both are precondition
// violations (exit 2): the supplied covariance makes the limiting series
// diverge, or the requested evaluation grid leaves the region where the
// regression estimate is supported.

class divergence_error : public precondition_error {
public:
    explicit divergence_error(const std::string& what)
        : precondition_error(what) {}
};

class coverage_error : public precondition_error {
public:
    explicit coverage_error(const std::string& what)
        : precondition_error(what) {}
};

constexpr int exit_success = 0;
constexpr int exit_precondition = 2;
constexpr int exit_capacity = 3;
constexpr int exit_io = 4;

}  // namespace chaoslab

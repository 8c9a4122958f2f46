#pragma once

#include <stdexcept>
#include <string>

#include "spinlab/decision.hpp"

namespace spinlab {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidModel : public Error {
public:
    using Error::Error;
};

class InvalidConfiguration : public Error {
public:
    using Error::Error;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class ClassMismatch : public Error {
public:
    using Error::Error;
};

class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

class TargetUnreachable : public Error {
public:
    TargetUnreachable(const std::string& what, double achieved_lo, double achieved_hi)
        : Error(what), achieved_lo_(achieved_lo), achieved_hi_(achieved_hi) {}

    // Natural-log range the solver could reach before giving up.
    double achieved_lo() const { return achieved_lo_; }
    double achieved_hi() const { return achieved_hi_; }

private:
    double achieved_lo_;
    double achieved_hi_;
};

class EmptyInterval : public Error {
public:
    using Error::Error;
};

class FamilyViolation : public Error {
public:
    using Error::Error;
};

class CapacityViolation : public Error {
public:
    using Error::Error;
};

// Raised when Zhat falls outside a construction's admissible range. The crude
// bounds on Z_G already settle the decision in that case.
class GuardViolation : public Error {
public:
    GuardViolation(const std::string& what, Decision certified)
        : Error(what), certified_(certified) {}

    Decision certified() const { return certified_; }

private:
    Decision certified_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace spinlab

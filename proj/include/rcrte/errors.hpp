#ifndef RCRTE_ERRORS_HPP
#define RCRTE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rcrte {

// Bad or inconsistent user input (files, configs, argument ranges).
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numerical routine failed (singular system, nonpositive rate, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Estimation-specific failure (zero at-risk mass at an event, ...).
class EstimationError : public NumericalError {
public:
    explicit EstimationError(const std::string& msg) : NumericalError(msg) {}
};

} // namespace rcrte

#endif

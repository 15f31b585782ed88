#pragma once
#include <stdexcept>
#include <string>

namespace bai {

// Invalid configuration or argument (bad β, δ, arm index, instance, ...).
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An operation was called on a state that does not satisfy its precondition.
class precondition_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A numerical routine failed to converge.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// I/O failure while exporting results.
class export_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bai

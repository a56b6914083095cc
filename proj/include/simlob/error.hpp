#pragma once

#include <stdexcept>
#include <string>

namespace simlob {

// Violated precondition or malformed input. CLI maps this to exit status 1.
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Rejected order or event (non-positive price or volume, off-tick price).
class ValidationError : public ContractError {
public:
    using ContractError::ContractError;
};

// A NaN or Inf showed up in a tensor op or gradient.
class NumericError : public ContractError {
public:
    using ContractError::ContractError;
};

class IoError : public ContractError {
public:
    using ContractError::ContractError;
};

} // namespace simlob

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dnnens {

// Invalid configuration or violated precondition on a user-supplied setting.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unusable input data (parse failures, too few samples).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

// Shapes of arguments do not match (programming error on the caller side).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad or truncated model / manifest file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateWeightsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class TrainingDivergence : public std::runtime_error {
 public:
  TrainingDivergence(std::size_t epoch, std::size_t batch,
                     const std::string& context = {})
      : std::runtime_error((context.empty() ? "" : context + ": ") +
                           "training diverged: non-finite loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

}  // namespace dnnens

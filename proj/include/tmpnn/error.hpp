#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmpnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Non-finite input reached a numeric routine.
class NumericDomainError : public Error {
public:
    using Error::Error;
};

/// Shape mismatch between a model and the data handed to it.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A Taylor map produced a non-finite value.
///
/// Carries the state that was fed into the offending layer application.
/// `step` and `row` are attached by callers that know them (the model knows
/// the layer index, predict knows the sample row).
class DivergenceError : public Error {
public:
    explicit DivergenceError(std::vector<double> layer_input,
                             std::optional<std::size_t> step = std::nullopt,
                             std::optional<std::size_t> row = std::nullopt);

    const std::vector<double>& layer_input() const noexcept { return layer_input_; }
    std::optional<std::size_t> step() const noexcept { return step_; }
    std::optional<std::size_t> row() const noexcept { return row_; }

    DivergenceError with_step(std::size_t step) const;
    DivergenceError with_row(std::size_t row) const;

private:
    std::vector<double> layer_input_;
    std::optional<std::size_t> step_;
    std::optional<std::size_t> row_;
};

/// Every batch of a training epoch diverged.
class TrainingDivergedError : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable tabular input.
class DataError : public Error {
public:
    using Error::Error;
};

/// Model file could not be read back into a consistent model.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace tmpnn

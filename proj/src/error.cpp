#include "tmpnn/error.hpp"

#include <utility>

namespace tmpnn {

namespace {

std::string divergence_message(std::optional<std::size_t> step, std::optional<std::size_t> row) {
    std::string msg = "Taylor map diverged (non-finite state)";
    if (step) msg += " at step " + std::to_string(*step);
    if (row) msg += " on row " + std::to_string(*row);
    return msg;
}

}  // namespace

DivergenceError::DivergenceError(std::vector<double> layer_input, std::optional<std::size_t> step,
                                 std::optional<std::size_t> row)
    : Error(divergence_message(step, row)),
      layer_input_(std::move(layer_input)),
      step_(step),
      row_(row) {}

DivergenceError DivergenceError::with_step(std::size_t step) const {
    return DivergenceError(layer_input_, step, row_);
}

DivergenceError DivergenceError::with_row(std::size_t row) const {
    return DivergenceError(layer_input_, step_, row);
}

}  // namespace tmpnn

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tmpnn/matrix.hpp"

namespace tmpnn {

/// Feature matrix X (N x n), target matrix Y (N x m) and column names.
struct Dataset {
    Matrix X;
    Matrix Y;
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;

    std::size_t size() const noexcept { return X.rows(); }
    std::size_t n_features() const noexcept { return X.cols(); }
    std::size_t n_targets() const noexcept { return Y.cols(); }

    /// Copy of the given rows, in the given order.
    Dataset subset(std::span<const std::size_t> rows) const;

    /// Throws DataError when shapes, names or values are inconsistent.
    void validate() const;
};

/// Friedman-1 regression problem:
///   y = 10 sin(pi x1 x2) + 20 (x3 - 1/2)^2 + 10 x4 + 5 x5 + noise_std * N(0, 1)
/// with five informative features and `n_unimportant` extra ones, all U(0, 1).
Dataset gen_friedman1(std::size_t n_samples, std::size_t n_unimportant, double noise_std, std::uint64_t seed);

/// Value of the noise-free Friedman-1 function on the first five features.
double friedman1(std::span<const double> x);

/// y = x + U(-0.25, 0.25) with x ~ U(lo, hi).
Dataset gen_noisy_linear(std::size_t n_samples, std::pair<double, double> x_range, std::uint64_t seed);

/// Which CSV columns are targets: a list of names, or the trailing `count` columns.
struct TargetSpec {
    std::variant<std::vector<std::string>, std::size_t> columns;

    static TargetSpec names(std::vector<std::string> names) { return {std::move(names)}; }
    static TargetSpec trailing(std::size_t count) { return {count}; }
    /// "3" -> trailing(3); "rr" or "a,b" -> names.
    static TargetSpec parse(const std::string& text);
};

struct CsvOptions {
    /// Names for a file without a header row. Ignored when the file has one.
    std::vector<std::string> column_names;
};

/// Reads a numeric table. The delimiter (comma, semicolon or whitespace) is
/// detected from the first non-empty line, which is taken as a header when any
/// of its fields is not a number. Headerless files get columns c1, c2, ...
/// unless names are supplied.
Dataset load_csv(const std::filesystem::path& path, const TargetSpec& targets, const CsvOptions& options = {});

/// Reads a feature-only table (no targets).
Matrix load_feature_csv(const std::filesystem::path& path, std::vector<std::string>* names = nullptr);

/// Comma-separated with header; values printed with round-trip precision.
void write_csv(const std::filesystem::path& path, const Dataset& dataset);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& values,
                      std::span<const std::string> names);

/// Shuffled split; the test part has round(N * test_fraction) rows. Rows keep
/// their original relative order inside each part.
std::pair<Dataset, Dataset> split_random(const Dataset& dataset, double test_fraction, std::uint64_t seed);

/// Rows whose `column` value lies strictly above `threshold` go to the test set.
std::pair<Dataset, Dataset> split_threshold(const Dataset& dataset, const std::string& column, double threshold);

/// Empirical quantile of `column` (linear interpolation between order
/// statistics) used as the threshold of split_threshold. Target columns may be
/// used as split columns.
std::pair<Dataset, Dataset> split_quantile(const Dataset& dataset, const std::string& column, double quantile);

/// Linear-interpolation quantile of `values`, 0 <= q <= 1.
double empirical_quantile(std::vector<double> values, double q);

/// Mean of squared differences over every entry.
double metric_mse(const Matrix& y_true, const Matrix& y_pred);
/// Per-target MSE.
std::vector<double> metric_mse_per_target(const Matrix& y_true, const Matrix& y_pred);
/// 1 - SS_res / SS_tot per target, averaged uniformly over targets. Throws
/// InvalidArgument when some target column of y_true is constant.
double metric_r2(const Matrix& y_true, const Matrix& y_pred);
std::vector<double> metric_r2_per_target(const Matrix& y_true, const Matrix& y_pred);

}  // namespace tmpnn

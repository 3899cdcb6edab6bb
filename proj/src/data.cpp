#include "tmpnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "tmpnn/error.hpp"

namespace tmpnn {
namespace {

enum class Delimiter { comma, semicolon, whitespace };

Delimiter detect_delimiter(const std::string& line) {
    if (line.find(',') != std::string::npos) return Delimiter::comma;
    if (line.find(';') != std::string::npos) return Delimiter::semicolon;
    return Delimiter::whitespace;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line, Delimiter delim) {
    std::vector<std::string> fields;
    if (delim == Delimiter::whitespace) {
        std::istringstream in(line);
        std::string f;
        while (in >> f) fields.push_back(f);
        return fields;
    }
    const char sep = delim == Delimiter::comma ? ',' : ';';
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        fields.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? pos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return fields;
}

bool parse_number(std::string_view text, double& out) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return false;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

std::string unquote(std::string s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

bool is_blank_or_comment(const std::string& line) {
    const std::string t = trim(line);
    return t.empty() || t.front() == '#';
}

struct RawTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
};

RawTable read_table(const std::filesystem::path& path, const std::vector<std::string>& supplied_names) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");

    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    std::optional<Delimiter> delim;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) continue;
        if (!delim) {
            delim = detect_delimiter(line);
            auto fields = split_fields(line, *delim);
            width = fields.size();
            bool header = false;
            double tmp = 0.0;
            for (const auto& f : fields) header = header || !parse_number(f, tmp);
            if (header) {
                for (auto& f : fields) table.names.push_back(unquote(f));
                continue;
            }
        }
        const auto fields = split_fields(line, *delim);
        if (fields.size() != width)
            throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " + std::to_string(width));
        std::vector<double> row(width);
        for (std::size_t c = 0; c < width; ++c) {
            if (!parse_number(fields[c], row[c]) || !std::isfinite(row[c]))
                throw DataError(path.string() + ": non-numeric or missing value '" + fields[c] + "' at line " +
                                std::to_string(line_no) + ", column " + std::to_string(c + 1));
        }
        table.rows.push_back(std::move(row));
    }
    if (!delim) throw DataError(path.string() + ": file is empty");
    if (table.rows.empty()) throw DataError(path.string() + ": no data rows");

    if (table.names.empty()) {
        if (!supplied_names.empty()) {
            if (supplied_names.size() != width)
                throw DataError(path.string() + ": " + std::to_string(supplied_names.size()) +
                                " column names supplied for " + std::to_string(width) + " columns");
            table.names = supplied_names;
        } else {
            for (std::size_t c = 0; c < width; ++c) table.names.push_back("c" + std::to_string(c + 1));
        }
    }
    return table;
}

std::string join(const std::vector<std::string>& names) {
    std::string s;
    for (std::size_t i = 0; i < names.size(); ++i) s += (i ? ", " : "") + names[i];
    return s;
}

std::size_t column_index(const Dataset& ds, const std::string& column, bool& is_target) {
    auto f = std::find(ds.feature_names.begin(), ds.feature_names.end(), column);
    if (f != ds.feature_names.end()) {
        is_target = false;
        return static_cast<std::size_t>(f - ds.feature_names.begin());
    }
    auto t = std::find(ds.target_names.begin(), ds.target_names.end(), column);
    if (t != ds.target_names.end()) {
        is_target = true;
        return static_cast<std::size_t>(t - ds.target_names.begin());
    }
    std::vector<std::string> all = ds.feature_names;
    all.insert(all.end(), ds.target_names.begin(), ds.target_names.end());
    throw DataError("unknown column '" + column + "'; available: " + join(all));
}

void check_same_shape(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("metric inputs differ in shape");
    if (a.empty()) throw InvalidArgument("metric inputs are empty");
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.X = Matrix(rows.size(), n_features());
    out.Y = Matrix(rows.size(), n_targets());
    out.feature_names = feature_names;
    out.target_names = target_names;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy_n(X.row(rows[r]).begin(), n_features(), out.X.row(r).begin());
        std::copy_n(Y.row(rows[r]).begin(), n_targets(), out.Y.row(r).begin());
    }
    return out;
}

void Dataset::validate() const {
    if (X.rows() == 0) throw DataError("dataset is empty");
    if (Y.rows() != X.rows()) throw DataError("feature and target row counts differ");
    if (feature_names.size() != X.cols() || target_names.size() != Y.cols())
        throw DataError("column names do not match matrix widths");
    for (double v : X.values())
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    for (double v : Y.values())
        if (!std::isfinite(v)) throw DataError("non-finite target value");
}

double friedman1(std::span<const double> x) {
    if (x.size() < 5) throw InvalidArgument("Friedman-1 needs at least five features");
    const double pi = std::numbers::pi;
    return 10.0 * std::sin(pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] + 5.0 * x[4];
}

Dataset gen_friedman1(std::size_t n_samples, std::size_t n_unimportant, double noise_std, std::uint64_t seed) {
    if (n_samples == 0) throw InvalidArgument("n_samples must be >= 1");
    if (!(noise_std >= 0.0)) throw InvalidArgument("noise_std must be >= 0");
    const std::size_t n = 5 + n_unimportant;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Dataset ds;
    ds.X = Matrix(n_samples, n);
    ds.Y = Matrix(n_samples, 1);
    for (std::size_t j = 0; j < n; ++j) ds.feature_names.push_back("x" + std::to_string(j + 1));
    ds.target_names = {"y"};
    for (std::size_t r = 0; r < n_samples; ++r) {
        for (std::size_t j = 0; j < n; ++j) ds.X(r, j) = unif(rng);
        double y = friedman1(ds.X.row(r));
        // Noise is drawn even when noise_std == 0 so features match across noise levels.
        y += noise_std * normal(rng);
        ds.Y(r, 0) = y;
    }
    return ds;
}

Dataset gen_noisy_linear(std::size_t n_samples, std::pair<double, double> x_range, std::uint64_t seed) {
    if (n_samples == 0) throw InvalidArgument("n_samples must be >= 1");
    const auto [lo, hi] = x_range;
    if (!(lo < hi)) throw InvalidArgument("x range must satisfy lo < hi");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> xs(lo, hi);
    std::uniform_real_distribution<double> noise(-0.25, 0.25);
    Dataset ds;
    ds.X = Matrix(n_samples, 1);
    ds.Y = Matrix(n_samples, 1);
    ds.feature_names = {"x"};
    ds.target_names = {"y"};
    for (std::size_t r = 0; r < n_samples; ++r) {
        ds.X(r, 0) = xs(rng);
        ds.Y(r, 0) = ds.X(r, 0) + noise(rng);
    }
    return ds;
}

TargetSpec TargetSpec::parse(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) throw InvalidArgument("empty target specification");
    if (std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c) != 0; }))
        return trailing(static_cast<std::size_t>(std::stoull(t)));
    std::vector<std::string> names;
    std::size_t start = 0;
    while (true) {
        const auto pos = t.find(',', start);
        auto name = trim(std::string_view(t).substr(start, pos == std::string::npos ? pos : pos - start));
        if (name.empty()) throw InvalidArgument("empty name in target specification '" + text + "'");
        names.push_back(std::move(name));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return TargetSpec::names(std::move(names));
}

Dataset load_csv(const std::filesystem::path& path, const TargetSpec& targets, const CsvOptions& options) {
    RawTable table = read_table(path, options.column_names);
    const std::size_t width = table.names.size();

    std::vector<bool> is_target(width, false);
    std::vector<std::size_t> target_cols;
    if (const auto* count = std::get_if<std::size_t>(&targets.columns)) {
        if (*count == 0 || *count >= width)
            throw DataError("cannot take " + std::to_string(*count) + " trailing target columns from " +
                            std::to_string(width) + " columns");
        for (std::size_t c = width - *count; c < width; ++c) target_cols.push_back(c);
    } else {
        for (const auto& name : std::get<std::vector<std::string>>(targets.columns)) {
            auto it = std::find(table.names.begin(), table.names.end(), name);
            if (it == table.names.end())
                throw DataError("target column '" + name + "' not found; available: " + join(table.names));
            const auto c = static_cast<std::size_t>(it - table.names.begin());
            if (is_target[c]) throw DataError("target column '" + name + "' listed twice");
            target_cols.push_back(c);
            is_target[c] = true;
        }
        if (target_cols.size() >= width) throw DataError("no feature columns left after selecting targets");
    }
    for (auto c : target_cols) is_target[c] = true;

    Dataset ds;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < width; ++c)
        if (!is_target[c]) feature_cols.push_back(c);
    for (auto c : feature_cols) ds.feature_names.push_back(table.names[c]);
    for (auto c : target_cols) ds.target_names.push_back(table.names[c]);
    ds.X = Matrix(table.rows.size(), feature_cols.size());
    ds.Y = Matrix(table.rows.size(), target_cols.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t j = 0; j < feature_cols.size(); ++j) ds.X(r, j) = table.rows[r][feature_cols[j]];
        for (std::size_t j = 0; j < target_cols.size(); ++j) ds.Y(r, j) = table.rows[r][target_cols[j]];
    }
    return ds;
}

Matrix load_feature_csv(const std::filesystem::path& path, std::vector<std::string>* names) {
    RawTable table = read_table(path, {});
    Matrix X(table.rows.size(), table.names.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r)
        std::copy(table.rows[r].begin(), table.rows[r].end(), X.row(r).begin());
    if (names) *names = std::move(table.names);
    return X;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& values, std::span<const std::string> names) {
    if (names.size() != values.cols()) throw InvalidArgument("column name count does not match matrix width");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << std::setprecision(17);
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << '\n';
    for (std::size_t r = 0; r < values.rows(); ++r) {
        for (std::size_t c = 0; c < values.cols(); ++c) out << (c ? "," : "") << values(r, c);
        out << '\n';
    }
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void write_csv(const std::filesystem::path& path, const Dataset& dataset) {
    Matrix all(dataset.size(), dataset.n_features() + dataset.n_targets());
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        auto row = all.row(r);
        std::copy_n(dataset.X.row(r).begin(), dataset.n_features(), row.begin());
        std::copy_n(dataset.Y.row(r).begin(), dataset.n_targets(), row.begin() + dataset.n_features());
    }
    std::vector<std::string> names = dataset.feature_names;
    names.insert(names.end(), dataset.target_names.begin(), dataset.target_names.end());
    write_matrix_csv(path, all, names);
}

std::pair<Dataset, Dataset> split_random(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test fraction must lie in (0, 1)");
    const std::size_t n = dataset.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    std::vector<std::size_t> test(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    return {dataset.subset(train), dataset.subset(test)};
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InvalidArgument("quantile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::pair<Dataset, Dataset> split_threshold(const Dataset& dataset, const std::string& column, double threshold) {
    bool target = false;
    const std::size_t c = column_index(dataset, column, target);
    std::vector<std::size_t> train, test;
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        const double v = target ? dataset.Y(r, c) : dataset.X(r, c);
        (v > threshold ? test : train).push_back(r);
    }
    return {dataset.subset(train), dataset.subset(test)};
}

std::pair<Dataset, Dataset> split_quantile(const Dataset& dataset, const std::string& column, double quantile) {
    if (!(quantile > 0.0 && quantile < 1.0)) throw InvalidArgument("quantile must lie in (0, 1)");
    bool target = false;
    const std::size_t c = column_index(dataset, column, target);
    std::vector<double> values(dataset.size());
    for (std::size_t r = 0; r < dataset.size(); ++r) values[r] = target ? dataset.Y(r, c) : dataset.X(r, c);
    return split_threshold(dataset, column, empirical_quantile(std::move(values), quantile));
}

std::vector<double> metric_mse_per_target(const Matrix& y_true, const Matrix& y_pred) {
    check_same_shape(y_true, y_pred);
    std::vector<double> out(y_true.cols(), 0.0);
    for (std::size_t r = 0; r < y_true.rows(); ++r)
        for (std::size_t c = 0; c < y_true.cols(); ++c) {
            const double e = y_true(r, c) - y_pred(r, c);
            out[c] += e * e;
        }
    for (double& v : out) v /= static_cast<double>(y_true.rows());
    return out;
}

double metric_mse(const Matrix& y_true, const Matrix& y_pred) {
    const auto per = metric_mse_per_target(y_true, y_pred);
    return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
}

std::vector<double> metric_r2_per_target(const Matrix& y_true, const Matrix& y_pred) {
    check_same_shape(y_true, y_pred);
    const std::size_t n = y_true.rows();
    std::vector<double> out(y_true.cols());
    for (std::size_t c = 0; c < y_true.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += y_true(r, c);
        mean /= static_cast<double>(n);
        double ss_tot = 0.0, ss_res = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            ss_tot += (y_true(r, c) - mean) * (y_true(r, c) - mean);
            ss_res += (y_true(r, c) - y_pred(r, c)) * (y_true(r, c) - y_pred(r, c));
        }
        if (ss_tot == 0.0) throw InvalidArgument("R2 is undefined for a constant target column");
        out[c] = 1.0 - ss_res / ss_tot;
    }
    return out;
}

double metric_r2(const Matrix& y_true, const Matrix& y_pred) {
    const auto per = metric_r2_per_target(y_true, y_pred);
    return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
}

}  // namespace tmpnn

#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tmpnn/data.hpp"
#include "tmpnn/error.hpp"
#include "tmpnn/model.hpp"
#include "tmpnn/model_io.hpp"
#include "tmpnn/odeview.hpp"

namespace tmpnn::cli {
namespace {

using nlohmann::json;

/// Raised for flag combinations CLI11 cannot express.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::size_t thread_count() {
    if (const char* env = std::getenv("TMPNN_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        throw UsageError(std::string("TMPNN_THREADS must be a positive integer, got '") + env + "'");
    }
    return 1;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find(',', start);
        out.push_back(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

/// "column:q" for quantile splits.
std::pair<std::string, double> parse_split_spec(const std::string& spec) {
    const auto pos = spec.rfind(':');
    if (pos == std::string::npos || pos == 0 || pos + 1 == spec.size())
        throw UsageError("--split-quantile expects COLUMN:QUANTILE, got '" + spec + "'");
    try {
        std::size_t used = 0;
        const double q = std::stod(spec.substr(pos + 1), &used);
        if (used != spec.size() - pos - 1) throw std::invalid_argument("trailing characters");
        return {spec.substr(0, pos), q};
    } catch (const std::exception&) {
        throw UsageError("--split-quantile expects a numeric quantile, got '" + spec + "'");
    }
}

json metrics_json(const Matrix& y_true, const Matrix& y_pred, const std::vector<std::string>& names) {
    json j;
    const auto mse = metric_mse_per_target(y_true, y_pred);
    j["rows"] = y_true.rows();
    j["mse"] = metric_mse(y_true, y_pred);
    std::optional<std::vector<double>> r2;
    try {
        r2 = metric_r2_per_target(y_true, y_pred);
        j["r2"] = metric_r2(y_true, y_pred);
    } catch (const InvalidArgument&) {
        j["r2"] = nullptr;
    }
    j["per_target"] = json::array();
    for (std::size_t k = 0; k < mse.size(); ++k)
        j["per_target"].push_back({{"name", k < names.size() ? names[k] : "y" + std::to_string(k + 1)},
                                   {"mse", mse[k]},
                                   {"r2", r2 ? json((*r2)[k]) : json(nullptr)}});
    return j;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path + "'");
    f << text;
    if (!f) throw Error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------

struct DataSource {
    std::string data_path;
    std::string gen;
    std::string targets;
    std::string columns;
    std::size_t samples = 0;
    std::size_t unimportant = 0;
    double noise = 0.0;
    double x_lo = -1.0;
    double x_hi = 1.0;
};

void add_generator_options(CLI::App* cmd, DataSource& src) {
    cmd->add_option("--samples", src.samples, "Generated sample count (friedman1: 10000, linear: 200)");
    cmd->add_option("--unimportant", src.unimportant, "friedman1: extra U(0,1) features");
    cmd->add_option("--noise", src.noise, "friedman1: standard deviation of the Gaussian noise");
    cmd->add_option("--x-lo", src.x_lo, "linear: lower end of the x range");
    cmd->add_option("--x-hi", src.x_hi, "linear: upper end of the x range");
}

Dataset generate(const std::string& kind, const DataSource& src, std::uint64_t seed) {
    if (kind == "friedman1") return gen_friedman1(src.samples ? src.samples : 10000, src.unimportant, src.noise, seed);
    if (kind == "linear") return gen_noisy_linear(src.samples ? src.samples : 200, {src.x_lo, src.x_hi}, seed);
    throw UsageError("unknown generator '" + kind + "' (expected friedman1 or linear)");
}

Dataset load_source(const DataSource& src, std::uint64_t seed) {
    if (!src.gen.empty()) {
        if (!src.targets.empty()) throw UsageError("--targets applies to --data input only");
        return generate(src.gen, src, seed);
    }
    if (src.targets.empty()) throw UsageError("--targets is required with --data");
    CsvOptions opts;
    if (!src.columns.empty()) opts.column_names = split_list(src.columns);
    return load_csv(src.data_path, TargetSpec::parse(src.targets), opts);
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    DataSource src;
    std::size_t order = 3;
    std::size_t steps = 5;
    std::size_t latent = 0;
    std::size_t epochs = 1000;
    std::string batch = "256";
    double lr = 0.002;
    double l1 = 0.0;
    double l2 = 0.0;
    std::uint64_t seed = 0;
    double test_fraction = 0.25;
    std::string split_quantile;
    std::string standardize = "on";
    std::string init = "identity";
    bool init_trainable = false;
    std::size_t patience = 0;
    double min_delta = 0.0;
    double valid_fraction = 0.1;
    double clip = 0.0;
    std::string out = "model.json";
    std::string report;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    const Dataset data = load_source(a.src, a.seed);
    data.validate();

    Dataset train, test;
    bool has_test = true;
    if (!a.split_quantile.empty()) {
        const auto [column, q] = parse_split_spec(a.split_quantile);
        std::tie(train, test) = split_quantile(data, column, q);
    } else if (a.test_fraction > 0.0) {
        std::tie(train, test) = split_random(data, a.test_fraction, a.seed);
    } else {
        train = data;
        has_test = false;
    }
    if (train.size() == 0) throw DataError("training split is empty");
    if (has_test && test.size() == 0) has_test = false;

    TrainConfig cfg;
    cfg.epochs = a.epochs;
    if (a.batch == "full") {
        cfg.batch_size.reset();
    } else {
        try {
            cfg.batch_size = static_cast<std::size_t>(std::stoull(a.batch));
        } catch (const std::exception&) {
            throw UsageError("--batch expects a positive integer or 'full', got '" + a.batch + "'");
        }
    }
    cfg.optimizer.learning_rate = a.lr;
    cfg.shuffle_seed = a.seed;
    cfg.standardize = a.standardize == "on";
    cfg.threads = thread_count();
    if (a.clip > 0.0) cfg.grad_clip = a.clip;

    Dataset fit_set = train;
    std::optional<Dataset> valid;
    if (a.patience > 0) {
        cfg.early_stop = EarlyStop{a.patience, a.min_delta};
        auto [tr, va] = split_random(train, a.valid_fraction, a.seed + 1);
        fit_set = std::move(tr);
        valid = std::move(va);
    }

    ModelShape shape{data.n_features(), data.n_targets(), a.latent, a.order, a.steps};
    TmpnnModel model(shape, a.init == "perturbed" ? InitScheme::perturbed : InitScheme::identity, a.seed);
    model.set_regularization(a.l1, a.l2);
    model.set_init_trainable(a.init_trainable);

    const TrainReport rep = fit(model, fit_set, valid ? &*valid : nullptr, cfg);

    json report;
    report["config"] = {{"order", a.order},
                        {"steps", a.steps},
                        {"latent", a.latent},
                        {"epochs", a.epochs},
                        {"batch", a.batch},
                        {"lr", a.lr},
                        {"l1", a.l1},
                        {"l2", a.l2},
                        {"seed", a.seed},
                        {"standardize", a.standardize},
                        {"init", a.init},
                        {"init_trainable", a.init_trainable},
                        {"parameters", model.trainable_count()}};
    json epochs = json::array();
    for (std::size_t e = 0; e < rep.epochs_run; ++e) epochs.push_back(e + 1);
    report["history"] = {{"epoch", epochs}, {"train_loss", rep.train_loss}, {"valid_loss", rep.valid_loss}};
    report["best_epoch"] = rep.best_epoch;
    report["epochs_run"] = rep.epochs_run;
    report["diverged_batches"] = rep.diverged_batches;
    report["stopped_early"] = rep.stopped_early;
    report["train"] = metrics_json(train.Y, predict(model, train.X, cfg.threads), data.target_names);
    report["test"] = has_test ? metrics_json(test.Y, predict(model, test.X, cfg.threads), data.target_names)
                              : json(nullptr);

    ModelFile file{model, data.feature_names, data.target_names, {}};
    file.training.seed = a.seed;
    file.training.epochs_run = rep.epochs_run;
    file.training.final_train_loss = report["train"]["mse"].get<double>();
    if (has_test) file.training.final_test_loss = report["test"]["mse"].get<double>();
    save_model(a.out, file);

    if (!a.report.empty()) write_text(a.report, report.dump(1) + "\n", out);
    json summary = {{"model", a.out}, {"train", report["train"]}, {"test", report["test"]}};
    out << summary.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string model;
    std::string data;
    std::string targets;
    std::string columns;
    std::string split_quantile;
    double test_fraction = 0.0;
    std::uint64_t seed = 0;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const ModelFile file = load_model(a.model);
    const TmpnnModel& model = file.model;
    CsvOptions opts;
    if (!a.columns.empty()) opts.column_names = split_list(a.columns);
    TargetSpec spec = a.targets.empty() ? TargetSpec::trailing(model.n_targets()) : TargetSpec::parse(a.targets);
    Dataset data = load_csv(a.data, spec, opts);
    if (data.n_features() != model.n_features() || data.n_targets() != model.n_targets())
        throw DimensionError("model expects " + std::to_string(model.n_features()) + " features and " +
                             std::to_string(model.n_targets()) + " targets; data has " +
                             std::to_string(data.n_features()) + " features and " + std::to_string(data.n_targets()) +
                             " targets");
    Dataset eval = data;
    if (!a.split_quantile.empty()) {
        const auto [column, q] = parse_split_spec(a.split_quantile);
        eval = split_quantile(data, column, q).second;
    } else if (a.test_fraction > 0.0) {
        eval = split_random(data, a.test_fraction, a.seed).second;
    }
    if (eval.size() == 0) throw DataError("evaluation split is empty");
    json result = metrics_json(eval.Y, predict(model, eval.X, thread_count()), data.target_names);
    out << result.dump(1) << "\n";
    return 0;
}

struct PredictArgs {
    std::string model;
    std::string data;
    std::string out;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    const ModelFile file = load_model(a.model);
    const Matrix X = load_feature_csv(a.data);
    if (X.cols() != file.model.n_features())
        throw DimensionError("model expects " + std::to_string(file.model.n_features()) + " features, file has " +
                             std::to_string(X.cols()) + " columns");
    const Matrix Y = predict(file.model, X, thread_count());
    std::vector<std::string> names = file.target_names;
    if (names.size() != Y.cols()) {
        names.clear();
        for (std::size_t k = 0; k < Y.cols(); ++k) names.push_back("y" + std::to_string(k + 1));
    }
    if (a.out.empty() || a.out == "-") {
        std::ostringstream buf;
        buf.precision(17);
        for (std::size_t k = 0; k < names.size(); ++k) buf << (k ? "," : "") << names[k];
        buf << "\n";
        for (std::size_t r = 0; r < Y.rows(); ++r) {
            for (std::size_t k = 0; k < Y.cols(); ++k) buf << (k ? "," : "") << Y(r, k);
            buf << "\n";
        }
        out << buf.str();
    } else {
        write_matrix_csv(a.out, Y, names);
    }
    return 0;
}

struct InspectArgs {
    std::string model;
    std::string out;
    double threshold = 1e-10;
};

int cmd_inspect_ode(const InspectArgs& a, std::ostream& out) {
    const ModelFile file = load_model(a.model);
    const auto names = state_names(file.model, file.feature_names, file.target_names);
    RenderOptions opts;
    opts.threshold = a.threshold;
    write_text(a.out, render_ode(extract_ode(file.model), names, opts), out);
    return 0;
}

struct RaiseArgs {
    std::string model;
    std::size_t steps = 0;
    std::string out;
};

int cmd_raise_order(const RaiseArgs& a, std::ostream& out) {
    ModelFile file = load_model(a.model);
    const std::size_t old_steps = file.model.steps();
    file.model = raise_order(file.model, a.steps);
    save_model(a.out, file);
    out << json{{"model", a.out}, {"steps_before", old_steps}, {"steps", a.steps}}.dump() << "\n";
    return 0;
}

struct GenArgs {
    std::string kind;
    DataSource src;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_gen_data(const GenArgs& a, std::ostream& out) {
    const Dataset ds = generate(a.kind, a.src, a.seed);
    write_csv(a.out, ds);
    out << json{{"out", a.out}, {"rows", ds.size()}, {"features", ds.n_features()}}.dump() << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Taylor-map polynomial neural network regression"};
    app.name("tmpnn");
    app.require_subcommand(1);

    TrainArgs train;
    auto* tr = app.add_subcommand("train", "Train a model and write model and report files");
    auto* data_opt = tr->add_option("--data", train.src.data_path, "Input CSV")->check(CLI::ExistingFile);
    auto* gen_opt = tr->add_option("--gen", train.src.gen, "Generated dataset")
                        ->check(CLI::IsMember({"friedman1", "linear"}));
    data_opt->excludes(gen_opt);
    tr->add_option("--targets", train.src.targets, "Target columns: names (a,b) or trailing count");
    tr->add_option("--columns", train.src.columns, "Column names for a headerless CSV (comma separated)");
    add_generator_options(tr, train.src);
    tr->add_option("--order", train.order, "Order k of the Taylor map")->check(CLI::PositiveNumber);
    tr->add_option("--steps", train.steps, "Number p of map applications")->check(CLI::PositiveNumber);
    tr->add_option("--latent", train.latent, "Latent state units");
    tr->add_option("--epochs", train.epochs)->check(CLI::PositiveNumber);
    tr->add_option("--batch", train.batch, "Mini-batch size or 'full'");
    tr->add_option("--lr", train.lr, "Adamax learning rate")->check(CLI::PositiveNumber);
    tr->add_option("--l1", train.l1)->check(CLI::NonNegativeNumber);
    tr->add_option("--l2", train.l2)->check(CLI::NonNegativeNumber);
    tr->add_option("--seed", train.seed);
    auto* tf = tr->add_option("--test-fraction", train.test_fraction, "Random test split (0 disables)")
                   ->check(CLI::Range(0.0, 0.99));
    auto* sq = tr->add_option("--split-quantile", train.split_quantile,
                              "COLUMN:Q; rows above the quantile form the test set");
    sq->excludes(tf);
    tr->add_option("--standardize", train.standardize)->check(CLI::IsMember({"on", "off"}));
    tr->add_option("--init", train.init)->check(CLI::IsMember({"identity", "perturbed"}));
    tr->add_flag("--init-trainable", train.init_trainable, "Learn the initial target/latent state");
    tr->add_option("--patience", train.patience, "Early stopping patience in epochs (0 disables)");
    tr->add_option("--min-delta", train.min_delta)->check(CLI::NonNegativeNumber);
    tr->add_option("--valid-fraction", train.valid_fraction, "Share of training rows held out for early stopping")
        ->check(CLI::Range(0.01, 0.9));
    tr->add_option("--clip", train.clip, "Gradient max-norm (0 disables)")->check(CLI::NonNegativeNumber);
    tr->add_option("--out", train.out, "Model file");
    tr->add_option("--report", train.report, "Report file (JSON)");

    EvaluateArgs ev;
    auto* evc = app.add_subcommand("evaluate", "Print MSE and R2 of a model on a CSV");
    evc->add_option("--model", ev.model)->required()->check(CLI::ExistingFile);
    evc->add_option("--data", ev.data)->required()->check(CLI::ExistingFile);
    evc->add_option("--targets", ev.targets);
    evc->add_option("--columns", ev.columns);
    auto* ev_sq = evc->add_option("--split-quantile", ev.split_quantile, "Evaluate rows above COLUMN:Q only");
    auto* ev_tf = evc->add_option("--test-fraction", ev.test_fraction)->check(CLI::Range(0.0, 0.99));
    ev_sq->excludes(ev_tf);
    evc->add_option("--seed", ev.seed);

    PredictArgs pr;
    auto* prc = app.add_subcommand("predict", "Predict targets for a feature-only CSV");
    prc->add_option("--model", pr.model)->required()->check(CLI::ExistingFile);
    prc->add_option("--data", pr.data)->required()->check(CLI::ExistingFile);
    prc->add_option("--out", pr.out, "Predictions CSV (stdout when omitted)");

    InspectArgs in;
    auto* inc = app.add_subcommand("inspect-ode", "Print the ODE system equivalent to a model");
    inc->add_option("--model", in.model)->required()->check(CLI::ExistingFile);
    inc->add_option("--out", in.out, "Output file (stdout when omitted)");
    inc->add_option("--threshold", in.threshold, "Omit coefficients below this magnitude");

    RaiseArgs ra;
    auto* rac = app.add_subcommand("raise-order", "Re-discretize a model with more steps");
    rac->add_option("--model", ra.model)->required()->check(CLI::ExistingFile);
    rac->add_option("--steps", ra.steps, "New step count")->required()->check(CLI::PositiveNumber);
    rac->add_option("--out", ra.out)->required();

    GenArgs ge;
    auto* gec = app.add_subcommand("gen-data", "Write a generated dataset as CSV");
    gec->add_option("kind", ge.kind, "friedman1 or linear")->required()->check(CLI::IsMember({"friedman1", "linear"}));
    add_generator_options(gec, ge.src);
    gec->add_option("--seed", ge.seed);
    gec->add_option("--out", ge.out)->required();

    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        for (auto* sub : app.get_subcommands())
            if (sub->parsed()) {
                out << sub->help();
                return 0;
            }
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (tr->parsed()) {
            if (train.src.data_path.empty() && train.src.gen.empty())
                throw UsageError("train needs --data or --gen");
            return cmd_train(train, out);
        }
        if (evc->parsed()) return cmd_evaluate(ev, out);
        if (prc->parsed()) return cmd_predict(pr, out);
        if (inc->parsed()) return cmd_inspect_ode(in, out);
        if (rac->parsed()) return cmd_raise_order(ra, out);
        if (gec->parsed()) return cmd_gen_data(ge, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace tmpnn::cli

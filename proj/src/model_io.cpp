#include "tmpnn/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tmpnn/basis.hpp"
#include "tmpnn/error.hpp"

namespace tmpnn {
namespace {

using nlohmann::json;

template <class T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("model file is missing '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("model file field '") + key + "': " + e.what());
    }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional_number(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

std::string serialize_model(const ModelFile& file) {
    const TmpnnModel& m = file.model;
    const Matrix& w = m.map().coefficients();
    json doc;
    doc["format"] = "tmpnn-model";
    doc["format_version"] = kModelFormatVersion;
    doc["n_features"] = m.n_features();
    doc["n_targets"] = m.n_targets();
    doc["n_latent"] = m.n_latent();
    doc["order"] = m.order();
    doc["steps"] = m.steps();
    doc["basis_ordering"] = kBasisOrdering;
    doc["feature_names"] = file.feature_names;
    doc["target_names"] = file.target_names;
    doc["weights"] = {{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"data", std::vector<double>(w.values().begin(), w.values().end())}};
    doc["init_state"] = std::vector<double>(m.init_state().begin(), m.init_state().end());
    doc["init_trainable"] = m.init_trainable();
    doc["reg_l1"] = m.reg_l1();
    doc["reg_l2"] = m.reg_l2();
    if (m.scaler())
        doc["scaler"] = {{"mean", m.scaler()->mean}, {"scale", m.scaler()->scale}};
    else
        doc["scaler"] = nullptr;
    doc["training"] = {{"seed", file.training.seed},
                       {"epochs_run", file.training.epochs_run},
                       {"final_train_loss", optional_number(file.training.final_train_loss)},
                       {"final_test_loss", optional_number(file.training.final_test_loss)}};
    return doc.dump(1) + "\n";
}

ModelFile deserialize_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != "tmpnn-model") throw FormatError("not a tmpnn model file");
    const int version = field<int>(doc, "format_version");
    if (version != kModelFormatVersion)
        throw FormatError("unsupported model format version " + std::to_string(version) + " (expected " +
                          std::to_string(kModelFormatVersion) + ")");
    if (field<std::string>(doc, "basis_ordering") != kBasisOrdering)
        throw FormatError("unknown basis ordering '" + field<std::string>(doc, "basis_ordering") + "'");

    ModelShape shape;
    shape.n_features = field<std::size_t>(doc, "n_features");
    shape.n_targets = field<std::size_t>(doc, "n_targets");
    shape.n_latent = field<std::size_t>(doc, "n_latent");
    shape.order = field<std::size_t>(doc, "order");
    shape.steps = field<std::size_t>(doc, "steps");
    if (shape.n_targets == 0 || shape.order == 0 || shape.steps == 0)
        throw FormatError("model file has zero targets, order or steps");

    const std::size_t d = shape.state_dim();
    const std::size_t rows = basis_size(d, shape.order);
    const json& weights = doc.at("weights");
    const auto w_rows = field<std::size_t>(weights, "rows");
    const auto w_cols = field<std::size_t>(weights, "cols");
    const auto data = field<std::vector<double>>(weights, "data");
    if (w_rows != rows || w_cols != d || data.size() != rows * d)
        throw FormatError("weight matrix is " + std::to_string(w_rows) + "x" + std::to_string(w_cols) + " with " +
                          std::to_string(data.size()) + " values; expected " + std::to_string(rows) + "x" +
                          std::to_string(d));

    auto init_state = field<std::vector<double>>(doc, "init_state");
    if (init_state.size() != shape.n_targets + shape.n_latent) throw FormatError("init_state has the wrong length");

    ModelFile file{TmpnnModel(shape), field<std::vector<std::string>>(doc, "feature_names"),
                   field<std::vector<std::string>>(doc, "target_names"), {}};
    if (!file.feature_names.empty() && file.feature_names.size() != shape.n_features)
        throw FormatError("feature_names length does not match n_features");
    if (!file.target_names.empty() && file.target_names.size() != shape.n_targets)
        throw FormatError("target_names length does not match n_targets");

    TmpnnModel& model = file.model;
    std::copy(data.begin(), data.end(), model.map().coefficients().values().begin());
    model.set_init_state(std::move(init_state));
    model.set_init_trainable(field<bool>(doc, "init_trainable"));
    try {
        model.set_regularization(field<double>(doc, "reg_l1"), field<double>(doc, "reg_l2"));
        if (!doc.at("scaler").is_null()) {
            Standardizer s{field<std::vector<double>>(doc.at("scaler"), "mean"),
                           field<std::vector<double>>(doc.at("scaler"), "scale")};
            model.set_scaler(std::move(s));
        }
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string("invalid model file: ") + e.what());
    }

    if (doc.contains("training")) {
        const json& t = doc.at("training");
        file.training.seed = t.value("seed", std::uint64_t{0});
        file.training.epochs_run = t.value("epochs_run", std::size_t{0});
        file.training.final_train_loss = read_optional_number(t, "final_train_loss");
        file.training.final_test_loss = read_optional_number(t, "final_test_loss");
    }
    return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file '" + path.string() + "'");
    out << serialize_model(file);
    if (!out) throw Error("failed writing model file '" + path.string() + "'");
}

ModelFile load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

}  // namespace tmpnn

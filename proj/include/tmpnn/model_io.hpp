#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tmpnn/model.hpp"

namespace tmpnn {

inline constexpr int kModelFormatVersion = 1;
/// Identifies the monomial ordering of the weight rows.
inline constexpr const char* kBasisOrdering = "graded-lex-desc";

struct TrainingMetadata {
    std::uint64_t seed = 0;
    std::size_t epochs_run = 0;
    std::optional<double> final_train_loss;
    std::optional<double> final_test_loss;
};

/// A model together with the names and provenance stored next to it.
struct ModelFile {
    TmpnnModel model;
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;
    TrainingMetadata training;
};

/// Versioned JSON document. Doubles are written with round-trip precision so
/// a reloaded model predicts bit-identically.
std::string serialize_model(const ModelFile& file);
/// Validates every dimension relation before building the model; throws
/// FormatError on any inconsistency or version mismatch.
ModelFile deserialize_model(const std::string& text);

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace tmpnn

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tmpnn/data.hpp"
#include "tmpnn/matrix.hpp"
#include "tmpnn/optim.hpp"
#include "tmpnn/taylor_map.hpp"

namespace tmpnn {

struct ModelShape {
    std::size_t n_features = 1;
    std::size_t n_targets = 1;
    std::size_t n_latent = 0;
    std::size_t order = 3;
    std::size_t steps = 5;

    std::size_t state_dim() const noexcept { return n_features + n_targets + n_latent; }
};

enum class InitScheme {
    identity,   // W_1 = I, every other block 0
    perturbed,  // identity plus N(0, 1e-4) noise on every coefficient
};

/// Per-feature z-score standardization.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    /// Constant columns get scale 1.
    static Standardizer fit(const Matrix& X);
    void transform(std::span<const double> in, std::span<double> out) const;
    Matrix transform(const Matrix& X) const;

    friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// Taylor-map polynomial network.
///
/// The state Z has n_features + n_targets + n_latent components. Z_0 holds
/// the (optionally standardized) features followed by `init_state` for the
/// target and latent slots. One shared Taylor map is applied `steps` times and
/// the target slots of the final state are the prediction.
class TmpnnModel {
public:
    explicit TmpnnModel(const ModelShape& shape, InitScheme init = InitScheme::identity, std::uint64_t seed = 0);
    /// Wraps existing weights; their dimension must equal shape.state_dim().
    TmpnnModel(const ModelShape& shape, TaylorMapWeights map);

    ModelShape shape() const noexcept { return shape_; }
    std::size_t n_features() const noexcept { return shape_.n_features; }
    std::size_t n_targets() const noexcept { return shape_.n_targets; }
    std::size_t n_latent() const noexcept { return shape_.n_latent; }
    std::size_t order() const noexcept { return shape_.order; }
    std::size_t steps() const noexcept { return shape_.steps; }
    std::size_t state_dim() const noexcept { return shape_.state_dim(); }

    const TaylorMapWeights& map() const noexcept { return map_; }
    TaylorMapWeights& map() noexcept { return map_; }

    /// Initial values of the target and latent slots (length n_targets + n_latent).
    std::span<const double> init_state() const noexcept { return init_state_; }
    void set_init_state(std::vector<double> values);

    bool init_trainable() const noexcept { return init_trainable_; }
    void set_init_trainable(bool trainable) noexcept { init_trainable_ = trainable; }

    double reg_l1() const noexcept { return reg_l1_; }
    double reg_l2() const noexcept { return reg_l2_; }
    void set_regularization(double l1, double l2);

    const std::optional<Standardizer>& scaler() const noexcept { return scaler_; }
    void set_scaler(std::optional<Standardizer> scaler);

    /// Copy of this model with different weights and step count.
    TmpnnModel with_map(TaylorMapWeights map, std::size_t steps) const;

    /// Map coefficients (row-major), then init_state when trainable.
    std::size_t trainable_count() const noexcept;
    std::vector<double> trainable_parameters() const;
    void set_trainable_parameters(std::span<const double> params);

    /// Z_0 for one raw feature row.
    std::vector<double> initial_state(std::span<const double> x) const;

private:
    ModelShape shape_;
    TaylorMapWeights map_;
    std::vector<double> init_state_;
    bool init_trainable_ = false;
    double reg_l1_ = 0.0;
    double reg_l2_ = 0.0;
    std::optional<Standardizer> scaler_;
};

struct ForwardResult {
    std::vector<double> prediction;
    /// Z_0 .. Z_p.
    std::vector<std::vector<double>> trajectory;
};

/// Throws DivergenceError tagged with the step index.
ForwardResult forward(const TmpnnModel& model, std::span<const double> x);

/// Row-wise prediction (N x n_targets). DivergenceError carries the row.
Matrix predict(const TmpnnModel& model, const Matrix& X, std::size_t threads = 1);

struct LossGradient {
    /// data_loss + regularization.
    double loss = 0.0;
    /// Mean squared error over every target entry of the batch.
    double data_loss = 0.0;
    /// Same layout as TmpnnModel::trainable_parameters().
    std::vector<double> gradient;
};

/// Batch loss and its gradient with respect to every trainable parameter.
/// Contributions of all `steps` applications of the shared map are summed
/// into the one coefficient matrix. Rows default to the whole dataset.
LossGradient loss_and_gradient(const TmpnnModel& model, const Dataset& batch,
                               std::span<const std::size_t> rows = {}, std::size_t threads = 1);

struct EarlyStop {
    std::size_t patience = 20;
    double min_delta = 0.0;
};

struct TrainConfig {
    std::size_t epochs = 1000;
    /// nullopt means full batch.
    std::optional<std::size_t> batch_size = 256;
    AdamaxOptions optimizer{};
    std::uint64_t shuffle_seed = 0;
    std::optional<EarlyStop> early_stop;
    std::optional<double> grad_clip;
    /// Fit a Standardizer on the training features when the model has none.
    bool standardize = true;
    /// Worker threads for per-batch gradients. Results do not depend on it.
    std::size_t threads = 1;
};

struct TrainReport {
    /// Mean batch loss (data + regularization) of each epoch, before updates.
    std::vector<double> train_loss;
    /// Validation MSE after each epoch; empty without validation data.
    std::vector<double> valid_loss;
    /// 1-based epoch with the lowest validation (or training) loss.
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    std::size_t diverged_batches = 0;
    bool stopped_early = false;
    double final_train_mse = 0.0;
    std::optional<double> final_valid_mse;
};

TrainReport fit(TmpnnModel& model, const Dataset& train, const Dataset* valid, const TrainConfig& config);

}  // namespace tmpnn

#include "tmpnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "tmpnn/error.hpp"
#include "tmpnn/simd.hpp"

namespace tmpnn {
namespace {

constexpr std::size_t kChunkRows = 64;

void check_shape(const ModelShape& s) {
    if (s.order < 1) throw InvalidArgument("model order must be >= 1");
    if (s.steps < 1) throw InvalidArgument("model steps must be >= 1");
    if (s.n_targets < 1) throw InvalidArgument("model needs at least one target");
}

// Forward trajectory of one chunk in structure-of-arrays layout.
struct ChunkPass {
    std::vector<Matrix> states;  // steps + 1 blocks, state_dim x count
    std::vector<Matrix> phis;    // steps blocks, basis size x count
};

// Loads Z_0 for `rows` of the (already standardized) feature matrix.
void load_initial_block(const TmpnnModel& model, const Matrix& Xs, std::span<const std::size_t> rows, Matrix& z0) {
    const std::size_t n = model.n_features();
    const std::size_t count = rows.size();
    if (z0.rows() != model.state_dim() || z0.cols() != count) z0 = Matrix(model.state_dim(), count);
    for (std::size_t j = 0; j < n; ++j) {
        auto dst = z0.row(j);
        for (std::size_t s = 0; s < count; ++s) dst[s] = Xs(rows[s], j);
    }
    const auto init = model.init_state();
    for (std::size_t k = 0; k < init.size(); ++k) {
        auto dst = z0.row(n + k);
        std::fill(dst.begin(), dst.end(), init[k]);
    }
}

[[noreturn]] void throw_block_divergence(const Matrix& input, const Matrix& output, std::size_t step,
                                         std::span<const std::size_t> rows) {
    for (std::size_t s = 0; s < output.cols(); ++s)
        for (std::size_t j = 0; j < output.rows(); ++j)
            if (!std::isfinite(output(j, s))) {
                std::vector<double> z(input.rows());
                for (std::size_t r = 0; r < input.rows(); ++r) z[r] = input(r, s);
                throw DivergenceError(std::move(z), step, rows[s]);
            }
    throw DivergenceError({}, step);
}

// Runs all steps over one chunk. With keep_all == false only the last state
// is retained (states[0] and states[1] are reused as ping-pong buffers).
void propagate(const TmpnnModel& model, const Matrix& Xs, std::span<const std::size_t> rows, ChunkPass& pass,
               bool keep_all) {
    const std::size_t p = model.steps();
    const std::size_t n_states = keep_all ? p + 1 : 2;
    const std::size_t n_phis = keep_all ? p : 1;
    pass.states.resize(n_states);
    pass.phis.resize(n_phis);
    load_initial_block(model, Xs, rows, pass.states[0]);
    for (std::size_t t = 0; t < p; ++t) {
        Matrix& in = keep_all ? pass.states[t] : pass.states[t % 2];
        Matrix& out = keep_all ? pass.states[t + 1] : pass.states[(t + 1) % 2];
        Matrix& phi = keep_all ? pass.phis[t] : pass.phis[0];
        eval_monomials_block(model.map().basis(), in, phi);
        apply_block(model.map(), phi, out);
        if (!simd::all_finite(out.values())) throw_block_divergence(in, out, t, rows);
    }
    if (!keep_all && p % 2 == 1) std::swap(pass.states[0], pass.states[1]);
}

const Matrix& final_state(const TmpnnModel& model, const ChunkPass& pass, bool keep_all) {
    return keep_all ? pass.states[model.steps()] : pass.states[0];
}

Matrix scaled_features(const TmpnnModel& model, const Matrix& X) {
    if (X.cols() != model.n_features())
        throw DimensionError("model expects " + std::to_string(model.n_features()) + " features, data has " +
                             std::to_string(X.cols()));
    return model.scaler() ? model.scaler()->transform(X) : X;
}

// Runs fn(c) for every chunk index c, spread over `threads` workers. The
// first exception (by chunk order) is rethrown after all workers finish.
template <class Fn>
void for_each_chunk(std::size_t n_chunks, std::size_t threads, Fn&& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n_chunks));
    if (threads == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::vector<std::exception_ptr> errors(n_chunks);
    {
        std::vector<std::jthread> workers;
        workers.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w)
            workers.emplace_back([&, w] {
                for (std::size_t c = w; c < n_chunks; c += threads) {
                    try {
                        fn(c);
                    } catch (...) {
                        errors[c] = std::current_exception();
                    }
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct ChunkGradient {
    double squared_error = 0.0;
    Matrix grad_w;
    std::vector<double> grad_init;
};

LossGradient loss_gradient_scaled(const TmpnnModel& model, const Matrix& Xs, const Matrix& Y,
                                  std::span<const std::size_t> rows, std::size_t threads) {
    if (rows.empty()) throw InvalidArgument("loss_and_gradient needs a non-empty batch");
    if (Y.cols() != model.n_targets())
        throw DimensionError("model expects " + std::to_string(model.n_targets()) + " targets, data has " +
                             std::to_string(Y.cols()));
    const std::size_t n = model.n_features();
    const std::size_t m = model.n_targets();
    const std::size_t d = model.state_dim();
    const std::size_t p = model.steps();
    const TaylorMapWeights& map = model.map();
    const double norm = 2.0 / (static_cast<double>(rows.size()) * static_cast<double>(m));

    const std::size_t n_chunks = (rows.size() + kChunkRows - 1) / kChunkRows;
    std::vector<ChunkGradient> parts(n_chunks);
    for_each_chunk(n_chunks, threads, [&](std::size_t c) {
        const auto chunk_rows = rows.subspan(c * kChunkRows, std::min(kChunkRows, rows.size() - c * kChunkRows));
        const std::size_t count = chunk_rows.size();
        ChunkPass pass;
        propagate(model, Xs, chunk_rows, pass, true);

        ChunkGradient& part = parts[c];
        part.grad_w = Matrix(map.coefficients().rows(), d);
        Matrix g_next(d, count);
        const Matrix& last = pass.states[p];
        for (std::size_t k = 0; k < m; ++k) {
            auto pred = last.row(n + k);
            auto g = g_next.row(n + k);
            for (std::size_t s = 0; s < count; ++s) {
                const double diff = pred[s] - Y(chunk_rows[s], k);
                part.squared_error += diff * diff;
                g[s] = norm * diff;
            }
        }
        Matrix g_z, g_phi;
        for (std::size_t t = p; t-- > 0;) {
            backprop_block(map, pass.states[t], pass.phis[t], g_next, g_z, part.grad_w, g_phi);
            std::swap(g_next, g_z);
        }
        if (model.init_trainable()) {
            part.grad_init.assign(d - n, 0.0);
            for (std::size_t k = 0; k < d - n; ++k)
                for (double v : g_next.row(n + k)) part.grad_init[k] += v;
        }
    });

    // Reduce in chunk order so the result does not depend on `threads`.
    double squared_error = 0.0;
    Matrix grad_w(map.coefficients().rows(), d);
    std::vector<double> grad_init(model.init_trainable() ? d - n : 0, 0.0);
    for (const auto& part : parts) {
        squared_error += part.squared_error;
        auto dst = grad_w.values();
        auto src = part.grad_w.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        for (std::size_t k = 0; k < grad_init.size(); ++k) grad_init[k] += part.grad_init[k];
    }

    LossGradient out;
    out.data_loss = squared_error / (static_cast<double>(rows.size()) * static_cast<double>(m));
    double reg = 0.0;
    const auto w = map.coefficients().values();
    auto gw = grad_w.values();
    const double l1 = model.reg_l1();
    const double l2 = model.reg_l2();
    if (l1 > 0.0 || l2 > 0.0) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            reg += l1 * std::abs(w[i]) + l2 * w[i] * w[i];
            const double sign = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
            gw[i] += l1 * sign + 2.0 * l2 * w[i];
        }
    }
    out.loss = out.data_loss + reg;
    out.gradient.assign(gw.begin(), gw.end());
    out.gradient.insert(out.gradient.end(), grad_init.begin(), grad_init.end());
    return out;
}

Matrix predict_scaled(const TmpnnModel& model, const Matrix& Xs, std::size_t threads) {
    const std::size_t N = Xs.rows();
    const std::size_t n = model.n_features();
    Matrix out(N, model.n_targets());
    std::vector<std::size_t> all(N);
    std::iota(all.begin(), all.end(), 0);
    const std::size_t chunk = 256;
    const std::size_t n_chunks = (N + chunk - 1) / chunk;
    for_each_chunk(n_chunks, threads, [&](std::size_t c) {
        const auto rows = std::span<const std::size_t>(all).subspan(c * chunk, std::min(chunk, N - c * chunk));
        ChunkPass pass;
        propagate(model, Xs, rows, pass, false);
        const Matrix& last = final_state(model, pass, false);
        for (std::size_t k = 0; k < model.n_targets(); ++k) {
            auto pred = last.row(n + k);
            for (std::size_t s = 0; s < rows.size(); ++s) out(rows[s], k) = pred[s];
        }
    });
    return out;
}

void check_dataset(const TmpnnModel& model, const Dataset& data) {
    if (data.size() == 0) throw InvalidArgument("dataset is empty");
    if (data.n_features() != model.n_features() || data.n_targets() != model.n_targets())
        throw DimensionError("model is " + std::to_string(model.n_features()) + " -> " +
                             std::to_string(model.n_targets()) + ", data is " + std::to_string(data.n_features()) +
                             " -> " + std::to_string(data.n_targets()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Standardizer

Standardizer Standardizer::fit(const Matrix& X) {
    if (X.rows() == 0) throw InvalidArgument("cannot fit a standardizer on no rows");
    Standardizer s;
    s.mean.assign(X.cols(), 0.0);
    s.scale.assign(X.cols(), 0.0);
    const auto n = static_cast<double>(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) s.mean[c] += X(r, c);
    for (double& v : s.mean) v /= n;
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) {
            const double e = X(r, c) - s.mean[c];
            s.scale[c] += e * e;
        }
    for (double& v : s.scale) {
        v = std::sqrt(v / n);
        if (!(v > 0.0)) v = 1.0;
    }
    return s;
}

void Standardizer::transform(std::span<const double> in, std::span<double> out) const {
    for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
}

Matrix Standardizer::transform(const Matrix& X) const {
    Matrix out(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r) transform(X.row(r), out.row(r));
    return out;
}

// ---------------------------------------------------------------------------
// TmpnnModel

TmpnnModel::TmpnnModel(const ModelShape& shape, InitScheme init, std::uint64_t seed)
    : shape_(shape),
      map_((check_shape(shape), identity_weights(shape.state_dim(), shape.order))),
      init_state_(shape.n_targets + shape.n_latent, 0.0) {
    if (init == InitScheme::perturbed) {
        std::mt19937_64 rng(seed);
        // Variance 1e-4.
        std::normal_distribution<double> eps(0.0, 0.01);
        for (double& w : map_.coefficients().values()) w += eps(rng);
    }
}

TmpnnModel::TmpnnModel(const ModelShape& shape, TaylorMapWeights map)
    : shape_(shape), map_(std::move(map)), init_state_(shape.n_targets + shape.n_latent, 0.0) {
    check_shape(shape);
    if (map_.dim() != shape.state_dim() || map_.order() != shape.order)
        throw DimensionError("map is " + std::to_string(map_.dim()) + "-dimensional of order " +
                             std::to_string(map_.order()) + ", model needs " + std::to_string(shape.state_dim()) +
                             " of order " + std::to_string(shape.order));
}

void TmpnnModel::set_init_state(std::vector<double> values) {
    if (values.size() != shape_.n_targets + shape_.n_latent)
        throw DimensionError("init_state needs " + std::to_string(shape_.n_targets + shape_.n_latent) + " values");
    init_state_ = std::move(values);
}

void TmpnnModel::set_regularization(double l1, double l2) {
    if (!(l1 >= 0.0) || !(l2 >= 0.0)) throw InvalidArgument("regularization weights must be >= 0");
    reg_l1_ = l1;
    reg_l2_ = l2;
}

void TmpnnModel::set_scaler(std::optional<Standardizer> scaler) {
    if (scaler) {
        if (scaler->mean.size() != shape_.n_features || scaler->scale.size() != shape_.n_features)
            throw DimensionError("scaler width does not match the feature count");
        for (double s : scaler->scale)
            if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("scaler entries must be positive");
    }
    scaler_ = std::move(scaler);
}

TmpnnModel TmpnnModel::with_map(TaylorMapWeights map, std::size_t steps) const {
    ModelShape shape = shape_;
    shape.steps = steps;
    TmpnnModel out(shape, std::move(map));
    out.init_state_ = init_state_;
    out.init_trainable_ = init_trainable_;
    out.reg_l1_ = reg_l1_;
    out.reg_l2_ = reg_l2_;
    out.scaler_ = scaler_;
    return out;
}

std::size_t TmpnnModel::trainable_count() const noexcept {
    return map_.parameter_count() + (init_trainable_ ? init_state_.size() : 0);
}

std::vector<double> TmpnnModel::trainable_parameters() const {
    auto w = map_.coefficients().values();
    std::vector<double> out(w.begin(), w.end());
    if (init_trainable_) out.insert(out.end(), init_state_.begin(), init_state_.end());
    return out;
}

void TmpnnModel::set_trainable_parameters(std::span<const double> params) {
    if (params.size() != trainable_count())
        throw DimensionError("expected " + std::to_string(trainable_count()) + " parameters, got " +
                             std::to_string(params.size()));
    auto w = map_.coefficients().values();
    std::copy_n(params.begin(), w.size(), w.begin());
    if (init_trainable_) std::copy(params.begin() + static_cast<std::ptrdiff_t>(w.size()), params.end(), init_state_.begin());
}

std::vector<double> TmpnnModel::initial_state(std::span<const double> x) const {
    if (x.size() != shape_.n_features)
        throw DimensionError("expected " + std::to_string(shape_.n_features) + " features, got " +
                             std::to_string(x.size()));
    std::vector<double> z(state_dim());
    if (scaler_)
        scaler_->transform(x, std::span(z).first(shape_.n_features));
    else
        std::copy(x.begin(), x.end(), z.begin());
    std::copy(init_state_.begin(), init_state_.end(), z.begin() + static_cast<std::ptrdiff_t>(shape_.n_features));
    return z;
}

// ---------------------------------------------------------------------------
// Passes

ForwardResult forward(const TmpnnModel& model, std::span<const double> x) {
    ForwardResult r;
    r.trajectory.reserve(model.steps() + 1);
    r.trajectory.push_back(model.initial_state(x));
    for (std::size_t t = 0; t < model.steps(); ++t) {
        try {
            r.trajectory.push_back(tmpnn::apply(model.map(), r.trajectory.back()));
        } catch (const DivergenceError& e) {
            throw e.with_step(t);
        }
    }
    const auto& last = r.trajectory.back();
    r.prediction.assign(last.begin() + static_cast<std::ptrdiff_t>(model.n_features()),
                        last.begin() + static_cast<std::ptrdiff_t>(model.n_features() + model.n_targets()));
    return r;
}

Matrix predict(const TmpnnModel& model, const Matrix& X, std::size_t threads) {
    return predict_scaled(model, scaled_features(model, X), threads);
}

LossGradient loss_and_gradient(const TmpnnModel& model, const Dataset& batch, std::span<const std::size_t> rows,
                               std::size_t threads) {
    check_dataset(model, batch);
    std::vector<std::size_t> all;
    if (rows.empty()) {
        all.resize(batch.size());
        std::iota(all.begin(), all.end(), 0);
        rows = all;
    }
    return loss_gradient_scaled(model, scaled_features(model, batch.X), batch.Y, rows, threads);
}

// ---------------------------------------------------------------------------
// Training

TrainReport fit(TmpnnModel& model, const Dataset& train, const Dataset* valid, const TrainConfig& config) {
    check_dataset(model, train);
    if (valid) check_dataset(model, *valid);
    if (config.epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (config.batch_size && *config.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
    if (config.grad_clip && !(*config.grad_clip > 0.0)) throw InvalidArgument("gradient clip norm must be > 0");

    if (config.standardize && !model.scaler()) model.set_scaler(Standardizer::fit(train.X));
    const Matrix Xs = scaled_features(model, train.X);
    const Matrix Xv = valid ? scaled_features(model, valid->X) : Matrix();

    const std::size_t N = train.size();
    const std::size_t batch = std::min(config.batch_size.value_or(N), N);
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.shuffle_seed);

    std::vector<double> params = model.trainable_parameters();
    AdamaxState optimizer(params.size(), config.optimizer);

    TrainReport report;
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = params;
    std::size_t since_best = 0;
    const bool early = config.early_stop.has_value() && valid != nullptr;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double lr_scale = 1.0;
        double loss_sum = 0.0;
        std::size_t counted = 0;
        std::size_t batches = 0;
        std::size_t diverged = 0;
        for (std::size_t start = 0; start < N; start += batch) {
            ++batches;
            const auto rows = std::span<const std::size_t>(order).subspan(start, std::min(batch, N - start));
            LossGradient lg;
            try {
                lg = loss_gradient_scaled(model, Xs, train.Y, rows, config.threads);
                if (!std::isfinite(lg.loss) || !simd::all_finite(lg.gradient))
                    throw DivergenceError({}, std::nullopt, std::nullopt);
            } catch (const DivergenceError&) {
                // Skip the step and halve the learning rate for the rest of the epoch.
                ++diverged;
                lr_scale *= 0.5;
                continue;
            }
            loss_sum += lg.loss * static_cast<double>(rows.size());
            counted += rows.size();
            if (config.grad_clip) lg.gradient = clip_gradient(std::move(lg.gradient), *config.grad_clip);
            optimizer.step(params, lg.gradient, lr_scale);
            model.set_trainable_parameters(params);
        }
        report.diverged_batches += diverged;
        if (diverged == batches)
            throw TrainingDivergedError("every batch of epoch " + std::to_string(epoch) +
                                        " diverged; standardize the features or lower the learning rate");
        report.train_loss.push_back(loss_sum / static_cast<double>(counted));
        report.epochs_run = epoch;

        double monitored = report.train_loss.back();
        if (valid) {
            double vloss = std::numeric_limits<double>::infinity();
            try {
                vloss = metric_mse(valid->Y, predict_scaled(model, Xv, config.threads));
            } catch (const DivergenceError&) {
            }
            report.valid_loss.push_back(vloss);
            monitored = vloss;
        }
        const double min_delta = early ? config.early_stop->min_delta : 0.0;
        if (monitored < best_loss - min_delta) {
            best_loss = monitored;
            report.best_epoch = epoch;
            since_best = 0;
            if (early) best_params = params;
        } else if (early && ++since_best >= config.early_stop->patience) {
            report.stopped_early = true;
            break;
        }
    }
    if (early && report.best_epoch > 0) model.set_trainable_parameters(best_params);
    if (report.best_epoch == 0) report.best_epoch = report.epochs_run;

    auto mse_or_inf = [&](const Matrix& Y, const Matrix& X) {
        try {
            return metric_mse(Y, predict_scaled(model, X, config.threads));
        } catch (const DivergenceError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    report.final_train_mse = mse_or_inf(train.Y, Xs);
    if (valid) report.final_valid_mse = mse_or_inf(valid->Y, Xv);
    return report;
}

}  // namespace tmpnn

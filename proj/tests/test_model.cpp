#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tmpnn/error.hpp"
#include "tmpnn/model.hpp"

using namespace tmpnn;

namespace {

TmpnnModel random_model(std::mt19937_64& rng, const ModelShape& shape, double spread) {
    TmpnnModel model(shape);
    std::normal_distribution<double> n(0.0, spread);
    for (double& c : model.map().coefficients().values()) c += n(rng);
    return model;
}

Dataset sample_data(std::mt19937_64& rng, std::size_t rows, std::size_t n, std::size_t m) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Dataset d{Matrix(rows, n), Matrix(rows, m), {}, {}};
    for (double& v : d.X.values()) v = u(rng);
    for (double& v : d.Y.values()) v = u(rng);
    return d;
}

// Straight power-product evaluation of one output of the map.
double direct_polynomial(const TaylorMapWeights& w, const std::vector<double>& z, std::size_t out) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.basis().size(); ++i) {
        double term = w.coefficients()(i, out);
        const auto e = w.basis().exponents(i);
        for (std::size_t j = 0; j < z.size(); ++j) term *= std::pow(z[j], e[j]);
        acc += term;
    }
    return acc;
}

}  // namespace

TEST_CASE("identity-initialized model predicts its initial state") {
    TmpnnModel model(ModelShape{3, 2, 1, 3, 5});
    std::vector<double> x{0.4, -2.0, 7.0};
    const auto r = forward(model, x);
    CHECK(r.prediction == std::vector<double>{0, 0});
    CHECK(r.trajectory.size() == 6);
    model.set_init_state({1.5, -0.5, 2.0});
    CHECK(forward(model, x).prediction == std::vector<double>{1.5, -0.5});
}

TEST_CASE("one step reduces to ordinary polynomial regression") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t order = 1; order <= 4; ++order) {
        const auto model = random_model(rng, ModelShape{2, 1, 1, order, 1}, 0.5);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> x{u(rng), u(rng)};
            const auto z0 = model.initial_state(x);
            const double expect = direct_polynomial(model.map(), z0, 2);
            CHECK(test::rel_error(forward(model, x).prediction[0], expect, 1e-300) <= 1e-12);
        }
    }
}

TEST_CASE("first-order model is affine in its inputs") {
    std::mt19937_64 rng(2);
    const auto model = random_model(rng, ModelShape{3, 2, 0, 1, 4}, 0.3);
    const std::vector<double> a{1, -2, 0.5}, b{-0.3, 0.7, 2};
    for (double s : {0.0, 0.25, 1.7, -3.0}) {
        std::vector<double> mix(3);
        for (int j = 0; j < 3; ++j) mix[j] = s * a[j] + (1 - s) * b[j];
        const auto pa = forward(model, a).prediction, pb = forward(model, b).prediction;
        const auto pm = forward(model, mix).prediction;
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(pm[j] - (s * pa[j] + (1 - s) * pb[j])) <= 1e-8 * std::max(1.0, std::abs(pm[j])));
    }
}

TEST_CASE("parameter count follows the basis formula") {
    for (std::size_t d = 2; d <= 6; ++d)
        for (std::size_t k = 1; k <= 5; ++k) {
            TmpnnModel model(ModelShape{1, 1, d - 2, k, 2});
            std::size_t expect = 0;
            for (std::size_t q = 0; q <= k; ++q) {
                // C(d-1+q, d-1)
                double c = 1;
                for (std::size_t i = 1; i <= d - 1; ++i) c = c * double(q + i) / double(i);
                expect += static_cast<std::size_t>(std::llround(c));
            }
            CHECK(model.trainable_count() == d * expect);
        }
    TmpnnModel model(ModelShape{1, 1, 0, 5, 3});
    model.set_init_trainable(true);
    CHECK(model.trainable_count() == 42 + 1);
}

TEST_CASE("loss and gradient vanish at the identity for zero targets") {
    std::mt19937_64 rng(3);
    auto data = sample_data(rng, 10, 2, 1);
    for (double& v : data.Y.values()) v = 0.0;
    const auto lg = loss_and_gradient(TmpnnModel(ModelShape{2, 1, 0, 2, 3}), data);
    CHECK(lg.loss == 0.0);
    for (double g : lg.gradient) CHECK(g == 0.0);
}

TEST_CASE("single-sample affine gradient matches hand derivation") {
    TmpnnModel model(ModelShape{1, 1, 0, 1, 1});
    auto& W = model.map().coefficients();
    W(0, 1) = 0.3;
    W(1, 1) = -1.2;
    W(2, 1) = 0.8;
    const double x = 0.7, y = 2.0;
    model.set_init_state({0.5});
    Dataset data{Matrix(1, 1, x), Matrix(1, 1, y), {}, {}};
    const double yhat = 0.3 - 1.2 * x + 0.8 * 0.5;
    const auto lg = loss_and_gradient(model, data);
    CHECK(lg.loss == doctest::Approx((yhat - y) * (yhat - y)));
    const double monomials[3] = {1.0, x, 0.5};
    for (int i = 0; i < 3; ++i) {
        CHECK(lg.gradient[i * 2 + 0] == 0.0);
        CHECK(lg.gradient[i * 2 + 1] == doctest::Approx(2 * (yhat - y) * monomials[i]).epsilon(1e-14));
    }
}

TEST_CASE("full gradient matches central finite differences") {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> n_pick(1, 3), m_pick(1, 2), l_pick(0, 1), k_pick(1, 3), p_pick(1, 4);
    double worst = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const ModelShape shape{n_pick(rng), m_pick(rng), l_pick(rng), k_pick(rng), p_pick(rng)};
        auto model = random_model(rng, shape, 0.1);
        model.set_init_trainable(trial % 2 == 0);
        std::vector<double> init(shape.n_targets + shape.n_latent);
        for (double& v : init) v = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
        model.set_init_state(init);
        model.set_regularization(trial % 3 == 0 ? 1e-3 : 0.0, trial % 4 == 0 ? 1e-2 : 0.0);
        const auto data = sample_data(rng, 7, shape.n_features, shape.n_targets);
        const auto lg = loss_and_gradient(model, data);
        const auto params = model.trainable_parameters();
        REQUIRE(lg.gradient.size() == params.size());
        auto loss_at = [&](const std::vector<double>& p) {
            auto m2 = model;
            m2.set_trainable_parameters(p);
            return loss_and_gradient(m2, data).loss;
        };
        for (std::size_t i = 0; i < params.size(); ++i)
            worst = std::max(worst, test::rel_error(lg.gradient[i], test::central_difference(loss_at, params, i), 1e-4));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("gradient is independent of the thread count") {
    std::mt19937_64 rng(5);
    const auto model = random_model(rng, ModelShape{3, 2, 1, 3, 4}, 0.05);
    const auto data = sample_data(rng, 700, 3, 2);
    const auto a = loss_and_gradient(model, data, {}, 1);
    const auto b = loss_and_gradient(model, data, {}, 3);
    CHECK(a.loss == b.loss);
    CHECK(a.gradient == b.gradient);
    CHECK(predict(model, data.X, 1) == predict(model, data.X, 4));
}

TEST_CASE("predict agrees with forward row by row") {
    std::mt19937_64 rng(6);
    auto model = random_model(rng, ModelShape{2, 2, 0, 2, 3}, 0.1);
    const auto data = sample_data(rng, 300, 2, 2);
    model.set_scaler(Standardizer::fit(data.X));
    const auto P = predict(model, data.X);
    REQUIRE(P.rows() == 300);
    REQUIRE(P.cols() == 2);
    for (std::size_t r = 0; r < 300; r += 37) {
        const auto f = forward(model, data.X.row(r)).prediction;
        CHECK(P(r, 0) == doctest::Approx(f[0]).epsilon(1e-13));
        CHECK(P(r, 1) == doctest::Approx(f[1]).epsilon(1e-13));
    }
    CHECK_THROWS_AS(predict(model, Matrix(3, 5)), DimensionError);
}

TEST_CASE("standardizer centers and scales, constant columns keep scale one") {
    Matrix X(4, 2);
    const double col0[4] = {1, 2, 3, 6};
    for (int r = 0; r < 4; ++r) {
        X(r, 0) = col0[r];
        X(r, 1) = 5.0;
    }
    const auto s = Standardizer::fit(X);
    CHECK(s.mean[0] == 3.0);
    CHECK(s.scale[1] == 1.0);
    const auto Z = s.transform(X);
    double m = 0, v = 0;
    for (int r = 0; r < 4; ++r) m += Z(r, 0);
    for (int r = 0; r < 4; ++r) v += Z(r, 0) * Z(r, 0);
    CHECK(std::abs(m) < 1e-15);
    CHECK(v / 4 == doctest::Approx(1.0));
    CHECK(Z(2, 1) == 0.0);
}

TEST_CASE("training is deterministic and learns a constant target") {
    std::mt19937_64 rng(7);
    auto data = sample_data(rng, 64, 2, 1);
    for (double& v : data.Y.values()) v = 2.0;
    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch_size = 16;
    TmpnnModel a(ModelShape{2, 1, 0, 2, 3}), b(ModelShape{2, 1, 0, 2, 3});
    const auto ra = fit(a, data, nullptr, cfg);
    const auto rb = fit(b, data, nullptr, cfg);
    CHECK(ra.train_loss == rb.train_loss);
    CHECK(a.trainable_parameters() == b.trainable_parameters());
    CHECK(ra.final_train_mse < 1e-4);
    CHECK(ra.epochs_run == 500);
}

TEST_CASE("early stopping restores the best validation epoch") {
    std::mt19937_64 rng(8);
    const auto train = sample_data(rng, 40, 2, 1);
    const auto valid = sample_data(rng, 40, 2, 1);
    TrainConfig cfg;
    cfg.epochs = 400;
    cfg.early_stop = EarlyStop{5, 0.0};
    TmpnnModel model(ModelShape{2, 1, 0, 3, 3});
    const auto r = fit(model, train, &valid, cfg);
    REQUIRE(r.final_valid_mse.has_value());
    CHECK(*r.final_valid_mse == doctest::Approx(r.valid_loss[r.best_epoch - 1]).epsilon(1e-12));
    if (r.stopped_early) CHECK(r.epochs_run == r.best_epoch + 5);
}

TEST_CASE("model construction errors") {
    CHECK_THROWS_AS(TmpnnModel(ModelShape{1, 0, 0, 2, 2}), InvalidArgument);
    CHECK_THROWS_AS(TmpnnModel(ModelShape{1, 1, 0, 0, 2}), InvalidArgument);
    CHECK_THROWS_AS(TmpnnModel(ModelShape{1, 1, 0, 2, 0}), InvalidArgument);
    TmpnnModel model(ModelShape{2, 1, 0, 2, 2});
    CHECK_THROWS_AS(model.set_init_state({1, 2}), DimensionError);
    CHECK_THROWS_AS(model.set_regularization(-1, 0), InvalidArgument);
    Dataset empty{Matrix(0, 2), Matrix(0, 1), {}, {}};
    CHECK_THROWS_AS(fit(model, empty, nullptr, TrainConfig{}), InvalidArgument);
}

TEST_CASE("diverging training raises TrainingDivergedError") {
    Dataset data{Matrix(4, 1, 1e120), Matrix(4, 1, 1.0), {}, {}};
    TmpnnModel model(ModelShape{1, 1, 0, 3, 4});
    model.map().coefficients()(3, 0) = 1.0;  // x^2 feeds back into x
    TrainConfig cfg;
    cfg.standardize = false;
    cfg.epochs = 3;
    CHECK_THROWS_AS(fit(model, data, nullptr, cfg), TrainingDivergedError);
}

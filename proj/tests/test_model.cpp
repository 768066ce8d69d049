#include "oracles.hpp"

#include "tgdr/error.hpp"
#include "tgdr/model.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace tgdr;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Central differences of log_likelihood; returns -dll/dtheta to match the
// sign convention of negative_gradient.
std::vector<StudyGradient> finite_difference(const ModelCoefficients& c, const ExpressionDataset& data,
                                             double h) {
    std::vector<StudyGradient> out;
    for (int m = 0; m < c.study_count(); ++m) {
        StudyGradient g;
        g.intercept.resize(c.intercepts.cols());
        g.coef.resize(c.betas[m].rows(), c.betas[m].cols());
        for (Index k = 0; k < c.intercepts.cols(); ++k) {
            auto up = c, down = c;
            up.intercepts(m, k) += h;
            down.intercepts(m, k) -= h;
            g.intercept(k) = -(log_likelihood(up, data) - log_likelihood(down, data)) / (2 * h);
        }
        for (Index k = 0; k < g.coef.rows(); ++k)
            for (Index j = 0; j < g.coef.cols(); ++j) {
                auto up = c, down = c;
                up.betas[m](k, j) += h;
                down.betas[m](k, j) -= h;
                g.coef(k, j) = -(log_likelihood(up, data) - log_likelihood(down, data)) / (2 * h);
            }
        out.push_back(g);
    }
    return out;
}

double relative_error(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("zero coefficients give uniform probabilities") {
    auto c = ModelCoefficients::zeros(1, 3, 4);
    VectorXd x(4);
    x << 1.5, -2.0, 0.3, 7.0;
    VectorXd p = class_probabilities(c, x);
    for (int k = 0; k < 3; ++k) CHECK(p(k) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("hand-evaluated softmax with the simulation intercepts") {
    auto c = ModelCoefficients::zeros(1, 3, 1);
    c.intercepts << 0.5, -1.5;
    c.betas[0] << -2.0, 1.7;
    VectorXd x = VectorXd::Zero(1);
    VectorXd p = class_probabilities(c, x);
    const double z = std::exp(0.5) + std::exp(-1.5) + 1.0;
    CHECK(std::abs(p(0) - std::exp(0.5) / z) < 1e-15);
    CHECK(std::abs(p(1) - std::exp(-1.5) / z) < 1e-15);
    CHECK(std::abs(p(2) - 1.0 / z) < 1e-15);
    CHECK(p(0) > p(2));
    CHECK(p(2) > p(1));
}

TEST_CASE("saturated logits do not overflow") {
    auto c = ModelCoefficients::zeros(1, 2, 1);
    c.intercepts(0, 0) = 50.0;
    VectorXd p = class_probabilities(c, VectorXd(VectorXd::Zero(1)));
    CHECK(std::abs(p(0) - 1.0) <= 1e-15);
    CHECK(p(1) >= 0.0);
    CHECK(p(1) < 1e-15);

    c.intercepts(0, 0) = 1e6;
    p = class_probabilities(c, VectorXd(VectorXd::Zero(1)));
    CHECK(p.allFinite());
    CHECK(p(0) == 1.0);
}

TEST_CASE("probabilities are a distribution for random models") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        auto c = oracle::random_model(rng, 1, 2 + rep % 4, 6, 3.0);
        std::normal_distribution<double> normal(0, 2);
        VectorXd x(6);
        for (auto& v : x) v = normal(rng);
        VectorXd p = class_probabilities(c, x);
        CHECK((p.array() >= 0.0).all());
        CHECK(std::abs(p.sum() - 1.0) < 1e-12);
    }
}

TEST_CASE("class_probabilities rejects bad input") {
    auto c = ModelCoefficients::zeros(1, 3, 2);
    CHECK_THROWS_AS(class_probabilities(c, VectorXd(VectorXd::Zero(3))), Error);
    VectorXd x(2);
    x << 1.0, std::numeric_limits<double>::quiet_NaN();
    try {
        class_probabilities(c, x);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFinite);
    }
    try {
        class_probabilities(c, VectorXd(VectorXd::Zero(5)));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimMismatch);
    }
}

TEST_CASE("standardization stored in the model is replayed") {
    std::mt19937_64 rng(3);
    auto data = oracle::random_dataset(rng, 30, 3, 3);
    auto c = oracle::random_model(rng, 1, 3, 3);
    c.standardization = Standardization::fit(data.features);
    MatrixXd z = oracle::standardize(data.features);
    MatrixXd p = class_probabilities(c, data.features);
    auto raw = c;
    raw.standardization.reset();
    MatrixXd q = class_probabilities(raw, z);
    CHECK((p - q).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("log-likelihood at zero is -n log K") {
    std::mt19937_64 rng(5);
    for (int k = 2; k <= 5; ++k) {
        auto data = oracle::random_dataset(rng, 37, 4, k);
        auto c = ModelCoefficients::zeros(1, k, 4);
        CHECK(std::abs(log_likelihood(c, data) + 37 * std::log(static_cast<double>(k))) < 1e-10);
    }
}

TEST_CASE("binary log-likelihood equals the direct two-class formula") {
    std::mt19937_64 rng(8);
    auto data = oracle::random_dataset(rng, 40, 3, 2);
    auto c = oracle::random_model(rng, 1, 2, 3, 1.0);
    double direct = 0.0;
    for (Index i = 0; i < 40; ++i) {
        const double eta = c.intercepts(0, 0) + c.betas[0].row(0).dot(data.features.row(i));
        const double y = data.labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;
        direct += y * eta - std::log1p(std::exp(eta));
    }
    CHECK(std::abs(log_likelihood(c, data) - direct) < 1e-10);
}

TEST_CASE("log-likelihood matches the per-sample probability product") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 10; ++rep) {
        auto data = oracle::random_dataset(rng, 5, 3, 3);
        auto c = oracle::random_model(rng, 1, 3, 3, 1.0);
        double sum = 0.0;
        for (Index i = 0; i < 5; ++i) {
            VectorXd p = class_probabilities(c, VectorXd(data.features.row(i).transpose()));
            sum += std::log(p(data.labels[static_cast<std::size_t>(i)] - 1));
        }
        CHECK(std::abs(log_likelihood(c, data) - sum) < 1e-12);
        CHECK(std::abs(log_likelihood(c, data) -
                       oracle::plain_log_likelihood(data.features, data.labels,
                                                    c.intercepts.row(0).transpose(), c.betas[0])) < 1e-12);
    }
}

TEST_CASE("negative gradient agrees with central differences") {
    std::mt19937_64 rng(21);
    for (int rep = 0; rep < 20; ++rep) {
        const int k = 2 + rep % 3;
        const int studies = 1 + rep % 2;
        auto data = oracle::random_dataset(rng, 25, 4, k, studies);
        auto c = oracle::random_model(rng, studies, k, 4);
        auto g = negative_gradient(c, data);
        auto fd = finite_difference(c, data, 1e-5);
        REQUIRE(g.size() == fd.size());
        for (std::size_t m = 0; m < g.size(); ++m) {
            for (Index i = 0; i < g[m].intercept.size(); ++i)
                CHECK(relative_error(g[m].intercept(i), fd[m].intercept(i)) <= 1e-5);
            for (Index i = 0; i < g[m].coef.size(); ++i)
                CHECK(relative_error(g[m].coef.data()[i], fd[m].coef.data()[i]) <= 1e-5);
        }
    }
}

TEST_CASE("a zero feature column has exactly zero gradient") {
    std::mt19937_64 rng(4);
    auto data = oracle::random_dataset(rng, 30, 4, 3);
    data.features.col(2).setZero();
    auto c = oracle::random_model(rng, 1, 3, 4);
    auto g = negative_gradient(c, data);
    CHECK(g[0].coef.col(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("balanced two-class data at zero has zero intercept gradient") {
    MatrixXd x(6, 2);
    x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
    auto data = make_dataset(x, {1, 2, 1, 2, 1, 2}, 2);
    auto g = negative_gradient(ModelCoefficients::zeros(1, 2, 2), data);
    double direct = 0.0;
    for (int y : data.labels) direct += 0.5 - (y == 1 ? 1.0 : 0.0);
    CHECK(direct == 0.0);
    CHECK(g[0].intercept(0) == 0.0);
}

TEST_CASE("per-study gradients use each study's own block") {
    std::mt19937_64 rng(9);
    auto data = oracle::random_dataset(rng, 40, 3, 3, 2);
    auto c = oracle::random_model(rng, 2, 3, 3);
    auto g = negative_gradient(c, data);
    for (int m = 1; m <= 2; ++m) {
        auto slice = data.study_slice(m);
        ModelCoefficients one = ModelCoefficients::zeros(1, 3, 3);
        one.intercepts.row(0) = c.intercepts.row(m - 1);
        one.betas[0] = c.betas[m - 1];
        auto gm = negative_gradient(one, slice);
        CHECK((gm[0].coef - g[m - 1].coef).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((gm[0].intercept - g[m - 1].intercept).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("dimension mismatch between model and data") {
    std::mt19937_64 rng(1);
    auto data = oracle::random_dataset(rng, 10, 3, 2);
    auto c = ModelCoefficients::zeros(1, 2, 4);
    CHECK_THROWS_AS(log_likelihood(c, data), Error);
    CHECK_THROWS_AS(negative_gradient(c, data), Error);
}

TEST_CASE("active set uses the tolerance") {
    auto c = ModelCoefficients::zeros(2, 3, 4);
    c.betas[0](1, 2) = 1e-13;
    c.betas[1](0, 3) = -0.5;
    auto active = c.active_set(1e-12);
    CHECK(active == std::vector<bool>{false, false, false, true});
    CHECK(c.active_count(1e-14) == 2);
}

TEST_CASE("standardization handles constant columns") {
    MatrixXd x(4, 2);
    x << 1, 5, 2, 5, 3, 5, 4, 5;
    auto s = Standardization::fit(x);
    CHECK(s.sd(1) == 1.0);
    MatrixXd z = s.apply(x);
    CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::abs(z.col(0).mean()) < 1e-15);
    CHECK((z - oracle::standardize(x)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("dataset validation") {
    MatrixXd x = MatrixXd::Ones(3, 2);
    CHECK_THROWS_AS(make_dataset(x, {1, 2}, 2), Error);
    CHECK_THROWS_AS(make_dataset(x, {1, 2, 3}, 2), Error);
    x(0, 0) = std::numeric_limits<double>::infinity();
    try {
        make_dataset(x, {1, 2, 1}, 2);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonFinite);
    }
    auto ok = make_dataset(MatrixXd::Ones(4, 1), {1, 2, 1, 1}, 2, {1, 1, 2, 2});
    try {
        ok.validate_meta();
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingClass);
    }
}

}  // TEST_SUITE

#include "tgdr/error.hpp"
#include "tgdr/io.hpp"
#include "tgdr/simgen.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace tgdr;
using Eigen::MatrixXd;

namespace {

// True class probabilities written out independently of the library.
std::array<double, 3> truth(double x1, double x2, double x3, double x4) {
    const double w1 = 1.0;
    const double w2 = std::exp(0.5 - 2 * x1 + 1.2 * x2 + 0.8 * x3);
    const double w3 = std::exp(-1.5 + 1.7 * x1 - 1.5 * x2 - x4);
    const double s = w1 + w2 + w3;
    return {w1 / s, w2 / s, w3 / s};
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd ca = a.array() - a.mean();
    const Eigen::VectorXd cb = b.array() - b.mean();
    return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

// Monte Carlo marginal class frequencies, either the mean probability or the
// argmax frequency, from an independent generator.
std::array<double, 3> marginals(bool argmax, int draws) {
    std::mt19937 rng(2024);
    std::normal_distribution<double> normal;
    std::array<double, 3> m{0, 0, 0};
    for (int i = 0; i < draws; ++i) {
        const double a = normal(rng), b = normal(rng), c = normal(rng), d = normal(rng);
        auto p = truth(a, b, c, d);
        if (argmax) {
            int best = 0;
            for (int k = 1; k < 3; ++k)
                if (p[k] > p[best]) best = k;
            m[best] += 1.0 / draws;
        } else {
            for (int k = 0; k < 3; ++k) m[k] += p[k] / draws;
        }
    }
    return m;
}

}  // namespace

TEST_SUITE("simgen") {

TEST_CASE("feature moments") {
    SimDesign d;
    d.n_train = 10000;
    d.n_test = 1;
    d.seed = 1;
    auto sim = generate_example1(d);
    const double n = 10000.0;
    for (Index j = 0; j < 100; ++j) {
        const auto col = sim.train.features.col(j);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / (n - 1);
        CHECK(std::abs(mean) < 5.0 / std::sqrt(n));
        CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));
    }
}

TEST_CASE("probabilities at the origin") {
    auto p = simulation_class_probabilities(Eigen::VectorXd::Zero(100));
    const double s = 1.0 + std::exp(0.5) + std::exp(-1.5);
    CHECK(std::abs(p(0) - 1.0 / s) < 1e-15);
    CHECK(std::abs(p(1) - std::exp(0.5) / s) < 1e-15);
    CHECK(std::abs(p(2) - std::exp(-1.5) / s) < 1e-15);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0, 2);
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd x(4);
        for (auto& v : x) v = normal(rng);
        auto q = simulation_class_probabilities(x);
        auto t = truth(x(0), x(1), x(2), x(3));
        for (int k = 0; k < 3; ++k) CHECK(std::abs(q(k) - t[k]) < 1e-14);
    }
}

TEST_CASE("labels are 1, 2 or 3 and follow the analytic marginals") {
    for (auto rule : {LabelRule::Argmax, LabelRule::Categorical}) {
        SimDesign d;
        d.n_train = 10000;
        d.n_test = 1;
        d.seed = 5;
        d.label_rule = rule;
        auto sim = generate_example1(d);
        std::array<double, 3> freq{0, 0, 0};
        for (int y : sim.train.labels) {
            REQUIRE(y >= 1);
            REQUIRE(y <= 3);
            freq[y - 1] += 1.0 / 10000.0;
        }
        auto m = marginals(rule == LabelRule::Argmax, 1000000);
        for (int k = 0; k < 3; ++k) CHECK(std::abs(freq[k] - m[k]) < 3.0 * std::sqrt(m[k] * (1 - m[k]) / 10000.0) + 0.002);
    }
}

TEST_CASE("argmax labels are the most probable class") {
    SimDesign d;
    d.n_train = 500;
    d.seed = 8;
    auto sim = generate_example1(d);
    for (Index i = 0; i < 500; ++i) {
        const auto& x = sim.train.features;
        auto p = truth(x(i, 0), x(i, 1), x(i, 2), x(i, 3));
        const int best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()) + 1;
        CHECK(sim.train.labels[i] == best);
    }
}

TEST_CASE("example 2 correlations") {
    SimDesign d;
    d.n_train = 10000;
    d.n_test = 1;
    d.seed = 2;
    d.correlation_mode = CorrelationMode::Example2;
    auto sim = generate_example2(d);
    const auto& x = sim.train.features;
    CHECK(std::abs(correlation(x.col(0), x.col(4)) - 0.8) <= 0.03);
    CHECK(std::abs(correlation(x.col(2), x.col(6)) - 0.8) <= 0.03);
    CHECK(std::abs(correlation(x.col(1), x.col(5)) + 0.8) <= 0.03);
    CHECK(std::abs(correlation(x.col(3), x.col(7)) + 0.8) <= 0.03);
    CHECK(std::abs(correlation(x.col(0), x.col(8))) <= 0.05);
    CHECK(std::abs(correlation(x.col(4), x.col(6))) <= 0.05);
    for (Index j = 0; j < 8; ++j) {
        const double var = (x.col(j).array() - x.col(j).mean()).square().mean();
        CHECK(std::abs(var - 1.0) < 0.07);
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(example2_covariance(100));
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
    CHECK(std::abs(eig.eigenvalues().minCoeff() - 0.2) < 1e-12);
}

TEST_CASE("same seed gives identical data; train and test differ") {
    SimDesign d;
    d.seed = 99;
    auto a = generate(d);
    auto b = generate(d);
    std::ostringstream sa, sb;
    write_dataset_csv(sa, a.train);
    write_dataset_csv(sb, b.train);
    CHECK(sa.str() == sb.str());
    CHECK(a.test.features == b.test.features);
    CHECK(a.train.features.row(0) != a.test.features.row(0));
    d.seed = 100;
    CHECK(generate(d).train.features != a.train.features);
}

TEST_CASE("invalid designs") {
    SimDesign d;
    d.n_train = 0;
    CHECK_THROWS_AS(generate(d), Error);
    d.n_train = 10;
    d.d = 3;
    CHECK_THROWS_AS(generate(d), Error);
    d.d = 6;
    d.correlation_mode = CorrelationMode::Example2;
    CHECK_THROWS_AS(generate(d), Error);
    d.d = 100;
    CHECK_THROWS_AS(generate_example1(d), Error);
}

TEST_CASE("small replication is deterministic across job counts") {
    Table1Options o;
    o.n_datasets = 2;
    o.design.n_train = 60;
    o.design.n_test = 50;
    o.design.d = 20;
    o.tau_grid = {0.5, 1.0};
    o.max_steps = 60;
    o.stride = 20;
    o.folds = 3;
    o.n_bootstrap = 5;
    o.seed = 4;
    auto a = replicate_table1(o);
    o.jobs = 3;
    auto b = replicate_table1(o);
    std::ostringstream ca, cb, ra, rb;
    write_table1_csv(ca, a);
    write_table1_csv(cb, b);
    write_replicates_csv(ra, a);
    write_replicates_csv(rb, b);
    CHECK(ca.str() == cb.str());
    CHECK(ra.str() == rb.str());
    REQUIRE(a.rows.size() == 3);
    CHECK(a.replicates.size() == 2);
    for (const auto& r : a.replicates) CHECK(r.ok);
    std::ostringstream text;
    write_table1_text(text, a);
    CHECK(text.str().find("BF>40%") != std::string::npos);
}

}  // TEST_SUITE

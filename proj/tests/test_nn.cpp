#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tdtl/errors.hpp"
#include "tdtl/nn.hpp"
#include "test_util.hpp"

using namespace tdtl;
using namespace tdtl::nn;
using linalg::Matrix;

namespace {

std::vector<double> flatten(const NetworkParams& p) {
    std::vector<double> out;
    for (const DenseParams& l : p.layers) {
        out.insert(out.end(), l.weights.data.begin(), l.weights.data.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

NetworkParams unflatten(const NetworkParams& shape, const std::vector<double>& flat) {
    NetworkParams p = shape;
    std::size_t k = 0;
    for (DenseParams& l : p.layers) {
        for (double& w : l.weights.data) w = flat[k++];
        for (double& b : l.bias) b = flat[k++];
    }
    return p;
}

// Scalar test loss: weighted sum of outputs, with fixed weights c_ij, so the
// output gradient is just the weight matrix.
double weighted_output_loss(const Matrix& out, const Matrix& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) s += out.data[i] * c.data[i];
    return s;
}

void check_gradients(const NetSpec& spec, std::uint64_t seed) {
    Rng data_rng(seed * 977 + 1);
    NetworkParams params = init_network(spec, seed);
    // Larger weights than init so activations are exercised away from zero.
    for (DenseParams& l : params.layers)
        for (double& w : l.weights.data) w = 0.8 * (2.0 * data_rng.uniform() - 1.0);

    const std::size_t batch = 4;
    Matrix x = testutil::random_matrix(batch, input_dim(spec), data_rng);
    Matrix c = testutil::random_matrix(batch, output_dim(spec), data_rng);

    const std::uint64_t fwd_seed = seed * 31 + 7;
    Rng fwd_rng(fwd_seed);
    ForwardResult fr = forward(params, spec, x, true, fwd_rng);
    NetworkParams analytic = backward(params, spec, fr.tape, c);

    auto loss_at = [&](const std::vector<double>& flat) {
        NetworkParams p = unflatten(params, flat);
        Rng r(fwd_seed);  // identical dropout masks on every evaluation
        return weighted_output_loss(forward(p, spec, x, true, r).output, c);
    };
    std::vector<double> numeric = testutil::finite_diff(loss_at, flatten(params), 1e-5);
    CHECK(testutil::max_rel_error(flatten(analytic), numeric) < 1e-4);
}

}  // namespace

TEST_SUITE_BEGIN("nn");

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(validate_spec({}), ContractError);
    CHECK_THROWS_AS(validate_spec({LayerSpec::dense(3, 4), LayerSpec::relu(5)}),
                    ContractError);
    CHECK_THROWS_AS(validate_spec({LayerSpec::softmax(4), LayerSpec::relu(4)}),
                    ContractError);
    CHECK_THROWS_AS(validate_spec({LayerSpec::dropout(4, 1.0)}), ContractError);
    CHECK_NOTHROW(validate_spec(make_classifier_spec(8, {16, 8}, 4, 0.5)));
}

TEST_CASE("init is deterministic with zero biases and the right spread") {
    NetSpec spec = {LayerSpec::dense(100, 100), LayerSpec::softmax(100)};
    NetworkParams a = init_network(spec, 99);
    NetworkParams b = init_network(spec, 99);
    CHECK(a.layers[0].weights.data == b.layers[0].weights.data);

    for (double bias : a.layers[0].bias) CHECK(bias == 0.0);

    // 10^4 weights: empirical std close to 0.01.
    double mean = 0.0;
    for (double w : a.layers[0].weights.data) mean += w;
    mean /= double(a.layers[0].weights.data.size());
    double var = 0.0;
    for (double w : a.layers[0].weights.data) var += (w - mean) * (w - mean);
    var /= double(a.layers[0].weights.data.size());
    const double stddev = std::sqrt(var);
    CHECK(stddev > 0.009);
    CHECK(stddev < 0.011);
    // Sample mean within 3 sigma / sqrt(n) of zero.
    CHECK(std::fabs(mean) < 3.0 * 0.01 / 100.0);
}

TEST_CASE("identity dense layer passes input through") {
    NetSpec spec = {LayerSpec::dense(3, 3)};
    NetworkParams p = init_network(spec, 1);
    p.layers[0].weights = Matrix::identity(3);
    p.layers[0].bias = {0, 0, 0};
    Rng rng(0);
    Matrix x = Matrix::from_rows({{1, -2, 3}, {0.5, 0, -1}});
    ForwardResult r = forward(p, spec, x, false, rng);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(r.output.data[i] == x.data[i]);
}

TEST_CASE("softmax symmetry, shift invariance, row sums") {
    NetSpec spec = {LayerSpec::dense(4, 4), LayerSpec::softmax(4)};
    NetworkParams p = init_network(spec, 1);
    p.layers[0].weights = Matrix::identity(4);
    Rng rng(0);

    Matrix equal(1, 4, 1.7);
    ForwardResult r = forward(p, spec, equal, false, rng);
    for (double v : r.output.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

    Matrix x = Matrix::from_rows({{0.3, -1.2, 2.0, 0.7}});
    Matrix shifted = Matrix::from_rows({{0.3 + 5.0, -1.2 + 5.0, 2.0 + 5.0, 0.7 + 5.0}});
    Matrix y0 = forward(p, spec, x, false, rng).output;
    Matrix y1 = forward(p, spec, shifted, false, rng).output;
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::fabs(y0(0, j) - y1(0, j)) < 1e-12);

    Rng big(77);
    Matrix xs = testutil::random_matrix(10, 4, big, -50.0, 50.0);
    Matrix ys = forward(p, spec, xs, false, big).output;
    for (std::size_t i = 0; i < ys.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(ys(i, j) > 0.0);
            CHECK(ys(i, j) < 1.0);
            sum += ys(i, j);
        }
        CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("dropout fires only in train mode with inverted scaling") {
    NetSpec spec = {LayerSpec::dense(8, 8), LayerSpec::dropout(8, 0.5)};
    NetworkParams p = init_network(spec, 3);
    p.layers[0].weights = Matrix::identity(8);
    Matrix x(1, 8, 1.0);

    Rng eval_rng(5);
    Matrix eval_out = forward(p, spec, x, false, eval_rng).output;
    for (double v : eval_out.data) CHECK(v == 1.0);

    // Expectation over masks of the dropped activation matches the input.
    Rng rng(5);
    double sum = 0.0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        Matrix out = forward(p, spec, x, true, rng).output;
        for (double v : out.data) {
            CHECK((v == 0.0 || v == doctest::Approx(2.0)));
            sum += v;
        }
    }
    const double mean = sum / double(trials * 8);
    CHECK(std::fabs(mean - 1.0) < 0.02);
}

TEST_CASE("backward zero gradient is zero") {
    NetSpec spec = make_classifier_spec(6, {5}, 3, 0.0);
    NetworkParams p = init_network(spec, 11);
    Rng rng(2);
    Matrix x = testutil::random_matrix(4, 6, rng);
    ForwardResult fr = forward(p, spec, x, false, rng);
    NetworkParams g = backward(p, spec, fr.tape, Matrix(4, 3));
    for (const DenseParams& l : g.layers) {
        for (double w : l.weights.data) CHECK(w == 0.0);
        for (double b : l.bias) CHECK(b == 0.0);
    }
}

TEST_CASE("one-layer linear net matches the closed-form gradient") {
    // Squared loss L = ||xW - y||^2 / batch; dL/dW = 2 x^T (xW - y) / batch.
    NetSpec spec = {LayerSpec::dense(3, 2)};
    NetworkParams p = init_network(spec, 4);
    Rng rng(9);
    Matrix x = testutil::random_matrix(5, 3, rng);
    Matrix y = testutil::random_matrix(5, 2, rng);
    ForwardResult fr = forward(p, spec, x, false, rng);

    Matrix resid = fr.output - y;
    Matrix grad_out = linalg::scale(resid, 2.0 / double(x.rows));
    NetworkParams g = backward(p, spec, fr.tape, grad_out);

    Matrix want = linalg::scale(matmul(linalg::transpose(x), resid), 2.0 / double(x.rows));
    for (std::size_t i = 0; i < want.data.size(); ++i)
        CHECK(g.layers[0].weights.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
}

TEST_CASE("analytic gradients match finite differences for every layer kind") {
    check_gradients({LayerSpec::dense(4, 3)}, 1);
    check_gradients({LayerSpec::dense(4, 4), LayerSpec::relu(4)}, 2);
    check_gradients({LayerSpec::dense(4, 4), LayerSpec::tanh(4)}, 3);
    check_gradients({LayerSpec::dense(4, 4), LayerSpec::softmax(4)}, 4);
    check_gradients({LayerSpec::dense(4, 4), LayerSpec::dropout(4, 0.5)}, 5);
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
        check_gradients(
            {LayerSpec::dense(5, 6), LayerSpec::relu(6), LayerSpec::dense(6, 4),
             LayerSpec::tanh(4), LayerSpec::softmax(4)},
            seed);
}

TEST_CASE("forward/backward determinism with dropout") {
    NetSpec spec = make_classifier_spec(6, {8}, 3, 0.5);
    NetworkParams p = init_network(spec, 21);
    Rng data_rng(1);
    Matrix x = testutil::random_matrix(7, 6, data_rng);
    Matrix c = testutil::random_matrix(7, 3, data_rng);

    Rng r1(42), r2(42);
    ForwardResult f1 = forward(p, spec, x, true, r1);
    ForwardResult f2 = forward(p, spec, x, true, r2);
    CHECK(f1.output.data == f2.output.data);
    NetworkParams g1 = backward(p, spec, f1.tape, c);
    NetworkParams g2 = backward(p, spec, f2.tape, c);
    for (std::size_t i = 0; i < g1.layers.size(); ++i)
        CHECK(g1.layers[i].weights.data == g2.layers[i].weights.data);
}

TEST_CASE("sgd step arithmetic and group selection") {
    NetSpec spec = {LayerSpec::dense(1, 1)};
    NetworkParams p = init_network(spec, 1);
    p.layers[0].weights(0, 0) = 1.0;
    NetworkParams g = p;
    g.layers[0].weights(0, 0) = 1.0;
    g.layers[0].bias[0] = 0.0;

    OptimizerConfig cfg;
    cfg.learning_rate_transfer = 0.01;
    // Single dense layer: it is the transfer head.
    NetworkParams updated = sgd_step(p, g, cfg, LayerGroup::Transfer);
    CHECK(updated.layers[0].weights(0, 0) == doctest::Approx(0.99).epsilon(1e-15));

    // Backbone step must leave the head untouched.
    NetworkParams same = sgd_step(p, g, cfg, LayerGroup::Backbone);
    CHECK(same.layers[0].weights(0, 0) == 1.0);

    // Zero gradient is a fixed point.
    NetworkParams zg = g;
    zg.layers[0].weights(0, 0) = 0.0;
    NetworkParams fixed = sgd_step(p, zg, cfg, LayerGroup::Transfer);
    CHECK(fixed.layers[0].weights(0, 0) == 1.0);

    // Two eta steps == one 2*eta step on a constant gradient.
    NetworkParams twice = sgd_step(sgd_step(p, g, cfg, LayerGroup::Transfer), g, cfg,
                                   LayerGroup::Transfer);
    OptimizerConfig dbl = cfg;
    dbl.learning_rate_transfer = 0.02;
    NetworkParams once = sgd_step(p, g, dbl, LayerGroup::Transfer);
    CHECK(twice.layers[0].weights(0, 0) == doctest::Approx(once.layers[0].weights(0, 0))
                                               .epsilon(1e-15));
}

TEST_CASE("two-group update touches the right layers") {
    NetSpec spec = make_classifier_spec(4, {5}, 3, 0.0);
    NetworkParams p = init_network(spec, 6);
    NetworkParams g;
    g.layers.resize(2);
    g.layers[0].weights = Matrix(4, 5, 1.0);
    g.layers[0].bias.assign(5, 1.0);
    g.layers[1].weights = Matrix(5, 3, 1.0);
    g.layers[1].bias.assign(3, 1.0);

    OptimizerConfig cfg;  // 0.01 backbone, 0.005 transfer
    NetworkParams after = sgd_step(sgd_step(p, g, cfg, LayerGroup::Backbone), g, cfg,
                                   LayerGroup::Transfer);
    CHECK(after.layers[0].weights(0, 0) ==
          doctest::Approx(p.layers[0].weights(0, 0) - 0.01).epsilon(1e-12));
    CHECK(after.layers[1].weights(0, 0) ==
          doctest::Approx(p.layers[1].weights(0, 0) - 0.005).epsilon(1e-12));
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    const std::string path = (std::filesystem::temp_directory_path() /
                              "tdtl_ckpt_test.bin").string();
    NetSpec spec = make_classifier_spec(7, {9, 5}, 4, 0.0);
    NetworkParams p = init_network(spec, 1234);
    // Give biases nonzero values so the round trip exercises them.
    for (DenseParams& l : p.layers)
        for (double& b : l.bias) b = 0.123456789123456789;

    save_checkpoint(path, p);
    NetworkParams q = load_checkpoint(path);
    REQUIRE(q.layers.size() == p.layers.size());
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        CHECK(q.layers[i].weights.data == p.layers[i].weights.data);
        CHECK(q.layers[i].bias == p.layers[i].bias);
    }
    std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects garbage") {
    const std::string path = (std::filesystem::temp_directory_path() /
                              "tdtl_ckpt_bad.bin").string();
    {
        std::ofstream f(path, std::ios::binary);
        f << "NOPE";
    }
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/nowhere.bin"), IoError);
    std::remove(path.c_str());
}

TEST_SUITE_END();

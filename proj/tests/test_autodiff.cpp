#include <doctest.h>

#include <cmath>
#include <vector>

#include <rulegrad/autodiff.hpp>
#include <rulegrad/rng.hpp>

#include "testutil.hpp"

using namespace rulegrad;
using testutil::GraphFn;
using testutil::max_grad_rel_err;
using testutil::random_tensor;

TEST_CASE("matmul: identity and hand arithmetic") {
    Tape t;
    Value eye = t.input(Tensor({2, 2}, {1, 0, 0, 1}));
    Value b = t.input(Tensor({2, 2}, {5, 6, 7, 8}));
    CHECK(matmul(eye, b).val() == b.val());

    Value a = t.input(Tensor({2, 2}, {1, 2, 3, 4}));
    Value ones = t.input(Tensor({2, 1}, {1, 1}));
    Tensor prod = matmul(a, ones).val();
    CHECK(prod.shape() == Shape{2, 1});
    CHECK(prod[0] == doctest::Approx(3.0));
    CHECK(prod[1] == doctest::Approx(7.0));
}

TEST_CASE("matmul: shape mismatch reports both shapes") {
    Tape t;
    Value a = t.input(Tensor({2, 3}));
    Value b = t.input(Tensor({2, 3}));
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2x3]"), DimensionError);
}

TEST_CASE("matmul: gradient matches finite differences") {
    GraphFn f = [](Tape&, const std::vector<Value>& v) {
        return sum(matmul(v[0], v[1]));
    };
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        std::vector<Tensor> leaves = {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)};
        CHECK(max_grad_rel_err(f, leaves) < 1e-4);
    }
}

TEST_CASE("cosine: trivial geometry") {
    Tape t;
    Value v = t.input(Tensor({3}, {1, 2, 3}));
    Value nv = t.input(Tensor({3}, {-1, -2, -3}));
    CHECK(cosine(v, v).val()[0] == doctest::Approx(1.0));
    CHECK(cosine(v, nv).val()[0] == doctest::Approx(-1.0));

    Value ex = t.input(Tensor({2}, {1, 0}));
    Value ey = t.input(Tensor({2}, {0, 1}));
    CHECK(cosine(ex, ey).val()[0] == doctest::Approx(0.0));
}

TEST_CASE("cosine: zero-norm operand is rejected") {
    Tape t;
    Value v = t.input(Tensor({2}, {1, 1}));
    Value z = t.input(Tensor({2}, {0, 0}));
    CHECK_THROWS_AS(cosine(v, z), NumericError);
    CHECK_THROWS_AS(cosine(z, v), NumericError);
}

TEST_CASE("softmax_log_probs: uniform, shifted, normalized") {
    Tape t;
    Tensor uniform = softmax_log_probs(t.input(Tensor({4}, {0, 0, 0, 0}))).val();
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(uniform[i] == doctest::Approx(std::log(0.25)));
    }

    Tensor shifted = softmax_log_probs(t.input(Tensor({2}, {1000, 0}))).val();
    CHECK(shifted[0] == doctest::Approx(0.0));
    CHECK(shifted[1] == doctest::Approx(-1000.0));

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        Tensor logits = random_tensor({7}, rng, -30.0, 30.0);
        Tensor lp = softmax_log_probs(t.input(logits)).val();
        double total = 0.0;
        for (std::size_t i = 0; i < lp.numel(); ++i) total += std::exp(lp[i]);
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("elementwise closed forms") {
    Tape t;
    CHECK(sigmoid(t.constant(0.0)).val()[0] == doctest::Approx(0.5));
    CHECK(softplus(t.constant(0.0)).val()[0] == doctest::Approx(std::log(2.0)));
    CHECK(log(t.constant(std::exp(1.0))).val()[0] == doctest::Approx(1.0));
    CHECK(exp(t.constant(0.0)).val()[0] == doctest::Approx(1.0));
    CHECK(clamp(t.constant(5.0), -1.0, 1.0).val()[0] == doctest::Approx(1.0));
    CHECK(l2_norm_sq(t.input(Tensor({3}, {1, 2, 3}))).val()[0] == doctest::Approx(14.0));
}

TEST_CASE("elementwise guards") {
    Tape t;
    CHECK_THROWS_AS(log(t.constant(0.0)), NumericError);
    CHECK_THROWS_AS(log(t.constant(-1.0)), NumericError);
    CHECK_THROWS_AS(clamp(t.constant(0.0), 1.0, 1.0), ContractError);
    Value a = t.input(Tensor({2}));
    Value b = t.input(Tensor({3}));
    CHECK_THROWS_AS(add(a, b), DimensionError);
}

TEST_CASE("elementwise suite: gradients match finite differences") {
    std::vector<std::pair<const char*, GraphFn>> ops = {
        {"add", [](Tape&, const std::vector<Value>& v) { return sum(add(v[0], v[1])); }},
        {"sub", [](Tape&, const std::vector<Value>& v) { return sum(sub(v[0], v[1])); }},
        {"mul", [](Tape&, const std::vector<Value>& v) { return sum(mul(v[0], v[1])); }},
        {"neg", [](Tape&, const std::vector<Value>& v) { return sum(neg(v[0])); }},
        {"scale", [](Tape&, const std::vector<Value>& v) { return sum(scale(v[0], -1.7)); }},
        {"add_scalar", [](Tape&, const std::vector<Value>& v) { return sum(add_scalar(v[0], 0.3)); }},
        {"sigmoid", [](Tape&, const std::vector<Value>& v) { return sum(sigmoid(v[0])); }},
        {"softplus", [](Tape&, const std::vector<Value>& v) { return sum(softplus(v[0])); }},
        {"exp", [](Tape&, const std::vector<Value>& v) { return sum(exp(v[0])); }},
        {"mean", [](Tape&, const std::vector<Value>& v) { return mean(mul(v[0], v[1])); }},
        {"l2_norm_sq", [](Tape&, const std::vector<Value>& v) { return l2_norm_sq(v[0]); }},
        {"clamp",
         [](Tape&, const std::vector<Value>& v) { return sum(clamp(v[0], -0.9, 0.9)); }},
    };
    for (const auto& [name, f] : ops) {
        CAPTURE(name);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed * 31 + 5);
            std::vector<Tensor> leaves = {random_tensor({5}, rng), random_tensor({5}, rng)};
            // keep clamp inputs away from its kinks
            CHECK(max_grad_rel_err(f, leaves) < 1e-4);
        }
    }
    // log needs positive input
    GraphFn flog = [](Tape&, const std::vector<Value>& v) { return sum(log(v[0])); };
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        std::vector<Tensor> leaves = {random_tensor({5}, rng, 0.5, 3.0)};
        CHECK(max_grad_rel_err(flog, leaves) < 1e-4);
    }
}

TEST_CASE("selection ops: pick, row, stack, sum_over, logsumexp_over") {
    Tape t;
    Value v = t.input(Tensor({4}, {1, 2, 3, 4}));
    CHECK(pick(v, 2).val()[0] == doctest::Approx(3.0));
    CHECK_THROWS_AS(pick(v, 9), ContractError);

    Value m = t.input(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    Tensor r = row(m, 1).val();
    CHECK(r == Tensor({3}, {4, 5, 6}));

    Value s = stack({t.constant(1.0), t.constant(2.0)});
    CHECK(s.val() == Tensor({2}, {1, 2}));

    std::vector<std::size_t> idx = {0, 3};
    CHECK(sum_over(v, idx).val()[0] == doctest::Approx(5.0));
    CHECK(logsumexp_over(v, idx).val()[0] ==
          doctest::Approx(std::log(std::exp(1.0) + std::exp(4.0))));
    std::vector<std::size_t> empty;
    CHECK_THROWS_AS(sum_over(v, empty), ContractError);
    CHECK_THROWS_AS(logsumexp_over(v, empty), ContractError);

    GraphFn f = [](Tape&, const std::vector<Value>& v) {
        std::vector<std::size_t> ix = {0, 2, 3};
        return add(logsumexp_over(v[0], ix), mul(pick(v[0], 1), sum_over(v[0], ix)));
    };
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed + 100);
        CHECK(max_grad_rel_err(f, {random_tensor({5}, rng)}) < 1e-4);
    }
}

TEST_CASE("backward: basics") {
    SUBCASE("sum of a leaf gives ones") {
        Tape t;
        Value x = t.param(Tensor({3}, {4, 5, 6}));
        t.backward(sum(x));
        CHECK(x.grad() == Tensor({3}, {1, 1, 1}));
    }
    SUBCASE("x^2 at 3 gives 6") {
        Tape t;
        Value x = t.param(Tensor::scalar(3.0));
        t.backward(mul(x, x));
        CHECK(x.grad()[0] == doctest::Approx(6.0));
    }
    SUBCASE("non-scalar root is rejected") {
        Tape t;
        Value x = t.param(Tensor({2}, {1, 2}));
        CHECK_THROWS_AS(t.backward(x), ContractError);
    }
    SUBCASE("repeated backward accumulates on leaves") {
        Tape t;
        Value x = t.param(Tensor::scalar(3.0));
        Value y = mul(x, x);
        t.backward(y);
        t.backward(y);
        CHECK(x.grad()[0] == doctest::Approx(12.0));
        t.zero_grad();
        t.backward(y);
        CHECK(x.grad()[0] == doctest::Approx(6.0));
    }
}

TEST_CASE("backward: composed graph matches finite differences") {
    GraphFn f = [](Tape&, const std::vector<Value>& v) {
        Value px = vecmat(v[0], v[1]);
        Value pe = vecmat(v[2], v[1]);
        return sigmoid(cosine(px, pe));
    };
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed + 7);
        std::vector<Tensor> leaves = {random_tensor({3}, rng), random_tensor({3, 4}, rng),
                                      random_tensor({3}, rng)};
        CHECK(max_grad_rel_err(f, leaves) < 1e-4);
    }
}

TEST_CASE("backward: fan-out equals the unrolled copy") {
    Rng rng(11);
    Tensor xt = random_tensor({4}, rng);

    Tape shared;
    Value x1 = shared.param(xt);
    Value s = sigmoid(x1);
    shared.backward(add(sum(mul(s, s)), sum(s)));

    Tape unrolled;
    Value x2 = unrolled.param(xt);
    unrolled.backward(add(sum(mul(sigmoid(x2), sigmoid(x2))), sum(sigmoid(x2))));

    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(x1.grad()[i] == doctest::Approx(x2.grad()[i]).epsilon(1e-12));
    }
}

TEST_CASE("backward: deterministic, bitwise identical across runs") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        Tape t;
        Value a = t.param(random_tensor({3, 4}, rng));
        Value b = t.param(random_tensor({4, 2}, rng));
        Value root = sum(sigmoid(matmul(a, b)));
        t.backward(root);
        std::vector<double> out = a.grad().raw();
        const auto& gb = b.grad().raw();
        out.insert(out.end(), gb.begin(), gb.end());
        return out;
    };
    CHECK(run(42) == run(42));
}

TEST_CASE("forward values stay finite on finite inputs") {
    Rng rng(3);
    Tape t;
    Value a = t.param(random_tensor({4, 4}, rng, -5.0, 5.0));
    Value b = t.param(random_tensor({4, 4}, rng, -5.0, 5.0));
    Value z = softmax_log_probs(row(matmul(a, b), 0));
    CHECK(z.val().all_finite());
    t.backward(sum(z));
    CHECK(a.grad().all_finite());
    CHECK(b.grad().all_finite());
}

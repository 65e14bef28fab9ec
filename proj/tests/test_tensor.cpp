#include <doctest.h>

#include <cmath>

#include "demonet/checkpoint.hpp"
#include "demonet/errors.hpp"
#include "demonet/gradcheck.hpp"
#include "demonet/tape.hpp"
#include "test_util.hpp"

using namespace demonet;
using M = Matrix<double>;

namespace {

M random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    M m(r, c);
    for (auto& x : m.data()) x = uniform(rng, -1.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("matmul values and shape errors") {
    M x(2, 2, {1, 2, 3, 4});
    CHECK(multiply(M::identity(2), x) == x);
    const M a(1, 2, {1, 2});
    const M b(2, 1, {3, 4});
    CHECK(multiply(a, b)(0, 0) == 11.0);

    Tape<double> t;
    Var va = t.constant(a);
    CHECK_THROWS_AS(matmul(t, va, va), ShapeError);
}

TEST_CASE("matmul gradient against central differences") {
    Rng rng(3);
    std::vector<M> params{random_matrix(3, 4, rng), random_matrix(4, 2, rng)};
    const Objective<double> f = [](Tape<double>& t, std::span<const Var> p) {
        Var prod = matmul(t, p[0], p[1]);
        // sum(A B) as <1, A B>
        return matmul(t, matmul(t, t.constant(M(1, 3, 1.0)), prod), t.constant(M(2, 1, 1.0)));
    };
    CHECK(finite_diff_check(f, params).max_error < 1e-6);
}

TEST_CASE("neighbor_sum") {
    const Graph p3 = testutil::path_graph(3);
    Tape<double> t;
    const M out = t.value(neighbor_sum(t, p3, t.constant(M::identity(3))));
    CHECK(out == M(3, 3, {0, 1, 0, 1, 0, 1, 0, 1, 0}));

    const Graph isolated = Graph::from_edges(2, std::vector<Edge>{});
    const M z = t.value(neighbor_sum(t, isolated, t.constant(M(2, 3, 5.0))));
    CHECK(z == M(2, 3, 0.0));

    std::vector<Edge> c4{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    const Graph g4 = Graph::from_edges(4, c4);
    const M c = t.value(neighbor_sum(t, g4, t.constant(M(4, 2, {1.5, -2, 1.5, -2, 1.5, -2, 1.5, -2}))));
    for (std::size_t v = 0; v < 4; ++v) {
        CHECK(c(v, 0) == 3.0);
        CHECK(c(v, 1) == -4.0);
    }

    CHECK_THROWS_AS(neighbor_sum(t, p3, t.constant(M(2, 2))), ShapeError);
}

TEST_CASE("neighbor_sum is self-adjoint") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Edge> edges;
        const int n = 10;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (uniform01(rng) < 0.3) edges.emplace_back(u, v);
        const Graph g = Graph::from_edges(n, edges);
        const M x = random_matrix(n, 3, rng), y = random_matrix(n, 3, rng);
        const double lhs = frobenius_dot(detail::neighbor_sum_values(g, x), y);
        const double rhs = frobenius_dot(x, detail::neighbor_sum_values(g, y));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("relu and concat") {
    Tape<double> t;
    const M r = t.value(relu(t, t.constant(M(1, 3, {-1, 0, 2}))));
    CHECK(r == M(1, 3, {0, 0, 2}));

    const M cat = t.value(concat(t, t.constant(M::identity(2)), t.constant(M(2, 1))));
    CHECK(cat == M(2, 3, {1, 0, 0, 0, 1, 0}));
    CHECK_THROWS_AS(concat(t, t.constant(M(2, 1)), t.constant(M(3, 1))), ShapeError);

    Rng rng(2);
    Var x = t.constant(random_matrix(4, 4, rng));
    CHECK(t.value(relu(t, relu(t, x))) == t.value(relu(t, x)));

    // Subgradient at exactly zero is 0.
    Tape<double> g;
    Var p = g.parameter(M(1, 2, {0.0, 1.0}));
    Var s = sum_squares(g, relu(g, p));
    Var loss = add(g, s, matmul(g, relu(g, p), g.constant(M(2, 1, 1.0))));
    g.backward(loss);
    CHECK(g.grad(p)(0, 0) == 0.0);
    CHECK(g.grad(p)(0, 1) == 3.0);
}

TEST_CASE("softmax cross-entropy") {
    Tape<double> t;
    const std::vector<int> labels{0, 3};
    const std::vector<std::size_t> mask{0, 1};
    Var uniform_loss = softmax_xent_loss(t, t.constant(M(2, 4, 0.7)), labels, mask);
    CHECK(t.value(uniform_loss)(0, 0) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    M sharp(2, 4);
    sharp(0, 0) = 100;
    sharp(1, 3) = 100;
    CHECK(t.value(softmax_xent_loss(t, t.constant(sharp), labels, mask))(0, 0) < 1e-8);

    const std::vector<std::size_t> none;
    CHECK_THROWS_AS(softmax_xent_loss(t, t.constant(sharp), labels, none), ValidationError);
    const std::vector<int> bad{0, 4};
    CHECK_THROWS_AS(softmax_xent_loss(t, t.constant(sharp), bad, mask), ValidationError);

    Rng rng(5);
    std::vector<M> params{random_matrix(5, 3, rng)};
    const std::vector<int> y{2, 0, 1, 1, 0};
    const std::vector<std::size_t> rows{0, 2, 3};
    const Objective<double> f = [&](Tape<double>& tp, std::span<const Var> p) {
        return softmax_xent_loss(tp, p[0], y, rows);
    };
    CHECK(finite_diff_check(f, params).max_error < 1e-5);

    // Unmasked rows get exactly zero gradient.
    Tape<double> g;
    Var z = g.parameter(params[0]);
    g.backward(softmax_xent_loss(g, z, y, rows));
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(g.grad(z)(1, j) == 0.0);
        CHECK(g.grad(z)(4, j) == 0.0);
    }
}

TEST_CASE("finite_diff_check basics") {
    Rng rng(9);
    const M c = random_matrix(3, 3, rng);
    std::vector<M> params{random_matrix(3, 3, rng)};
    const Objective<double> linear = [&](Tape<double>& t, std::span<const Var> p) {
        // <c, p> = 1^T (c .* p) 1, written with a mask multiply.
        Var masked = apply_mask(t, p[0], c);
        return matmul(t, matmul(t, t.constant(M(1, 3, 1.0)), masked), t.constant(M(3, 1, 1.0)));
    };
    CHECK(finite_diff_check(linear, params).max_error < 1e-10);

    const Objective<double> constant = [](Tape<double>& t, std::span<const Var>) { return t.constant(M(1, 1, 4.0)); };
    const auto r = finite_diff_check(constant, params);
    CHECK(r.max_error == 0.0);

    int calls = 0;
    const Objective<double> noisy = [&](Tape<double>& t, std::span<const Var> p) {
        ++calls;
        return add(t, sum_squares(t, p[0]), t.constant(M(1, 1, static_cast<double>(calls))));
    };
    CHECK_THROWS_AS(finite_diff_check(noisy, params), ValidationError);
}

TEST_CASE("backward rules are linear in the output gradient") {
    Rng rng(21);
    const Graph g = testutil::path_graph(4);
    const M a = random_matrix(4, 3, rng), b = random_matrix(3, 2, rng), mask = random_matrix(4, 3, rng);
    const M w = random_matrix(4, 5, rng);
    // Each op's input gradient for upstream weight w, scaled by alpha.
    auto input_grad = [&](double alpha, int op) {
        Tape<double> t;
        Var x = t.parameter(a);
        Var y;
        switch (op) {
            case 0: y = concat(t, matmul(t, x, t.constant(b)), relu(t, x)); break;
            case 1: y = concat(t, neighbor_sum(t, g, x), matmul(t, apply_mask(t, x, mask), t.constant(b))); break;
            default: y = concat(t, scale(t, x, 2.5), t.constant(M(4, 2))); break;
        }
        M weight = w;
        for (auto& v : weight.data()) v *= alpha;
        t.backward(matmul(t, matmul(t, t.constant(M(1, 4, 1.0)), apply_mask(t, y, weight)), t.constant(M(5, 1, 1.0))));
        return t.grad(x);
    };
    for (int op = 0; op < 3; ++op) {
        const M g1 = input_grad(1.0, op), g3 = input_grad(-3.0, op);
        for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g3.data()[i] == doctest::Approx(-3.0 * g1.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("unused parameters get exactly zero gradient") {
    Tape<double> t;
    Var used = t.parameter(M(1, 1, 2.0));
    Var unused = t.parameter(M(2, 2, 1.0));
    t.backward(sum_squares(t, used));
    CHECK(t.grad(used)(0, 0) == 4.0);
    CHECK(t.grad(unused) == M(2, 2, 0.0));
}

TEST_CASE("checkpoint round trip") {
    testutil::TempDir dir;
    std::vector<NamedTensor> tensors{{"layer1.W0", Matrix<float>(2, 3, {1, 2, 3, 4, 5, 6})},
                                     {"classifier", Matrix<float>(1, 1, {-0.5f})}};
    const auto path = dir.path() / "c.bin";
    write_checkpoint(path, tensors);
    const auto back = read_checkpoint(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "layer1.W0");
    CHECK(back[0].value == tensors[0].value);
    CHECK(back[1].value(0, 0) == -0.5f);

    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "DMN1");

    dir.write("bad.bin", "NOPE");
    CHECK_THROWS(read_checkpoint(dir.path() / "bad.bin"));
}

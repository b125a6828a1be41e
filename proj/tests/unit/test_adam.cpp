#include <cmath>

#include "doctest.h"

#include "aesad/adam.hpp"

using namespace aesad;

TEST_CASE("adam_update with zero gradient leaves parameters and decays moments") {
    Tensor p{{0.3, -0.2}};
    const Tensor g(1, 2, 0.0);
    AdamMoments m{Tensor{{0.5, -0.5}}, Tensor{{0.25, 0.04}}};
    AdamConfig cfg;
    cfg.epsilon = 1e300;  // isolate parameter change caused by the decayed first moment
    adam_update(p, g, m, 3, cfg);
    CHECK(m.first(0, 0) == doctest::Approx(0.45));
    CHECK(m.second(0, 1) == doctest::Approx(0.04 * 0.999));
    CHECK(p(0, 0) == doctest::Approx(0.3));

    Tensor q{{1.0, 2.0}};
    AdamMoments fresh{Tensor(1, 2), Tensor(1, 2)};
    adam_update(q, g, fresh, 1, AdamConfig{});
    CHECK(q == Tensor{{1.0, 2.0}});
    CHECK(fresh.first == Tensor(1, 2));
}

TEST_CASE("first Adam step moves each parameter by lr against the gradient sign") {
    // m1 = (1-b1) g, v1 = (1-b2) g^2; bias correction gives m_hat = g, v_hat = g^2,
    // so the update is -lr * g / (|g| + eps).
    Tensor p{{0.0, 1.0, -1.0}};
    const Tensor g{{0.5, -2.0, 1e-3}};
    AdamMoments m{Tensor(1, 3), Tensor(1, 3)};
    AdamConfig cfg;
    cfg.learning_rate = 0.01;
    adam_update(p, g, m, 1, cfg);
    const double eps = cfg.epsilon;
    CHECK(p(0, 0) == doctest::Approx(0.0 - 0.01 * 0.5 / (0.5 + eps)).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(1.0 + 0.01 * 2.0 / (2.0 + eps)).epsilon(1e-12));
    CHECK(p(0, 2) == doctest::Approx(-1.0 - 0.01 * 1e-3 / (1e-3 + eps)).epsilon(1e-12));
}

TEST_CASE("adam_step advances the step counter and is deterministic") {
    const Network base = init_network(NetworkSpec{{3, 2, 3}}, 5);
    const Tensor batch{{0.1, 0.5, 0.9}, {0.7, 0.2, 0.4}};
    const std::vector<double> w{0.5, 0.5};

    auto run = [&] {
        Network net = base;
        AdamState state(net, AdamConfig{});
        for (int i = 0; i < 3; ++i) adam_step(net, backward(net, batch, batch, w), state);
        CHECK(state.step() == 3);
        return net;
    };
    CHECK(run() == run());
}

TEST_CASE("adam_step rejects mismatched gradients") {
    Network net = init_network(NetworkSpec{{3, 2, 3}}, 5);
    AdamState state(net, AdamConfig{});
    Gradients g = Gradients::zeros_like(net);
    g.weights[0] = Tensor(1, 1);
    CHECK_THROWS_AS(adam_step(net, g, state), std::invalid_argument);
    CHECK(state.step() == 0);
}

TEST_CASE("adam moments mirror parameter shapes") {
    const Network net = init_network(NetworkSpec{{4, 3, 2, 3, 4}}, 5);
    const AdamState state(net, AdamConfig{});
    REQUIRE(state.moments().size() == 8);
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        CHECK(state.moments()[2 * i].first.same_shape(net.layers()[i].weights));
        CHECK(state.moments()[2 * i + 1].second.same_shape(net.layers()[i].bias));
    }
}

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "plastlab/optim.hpp"
#include "support/builders.hpp"

using namespace plastlab;

namespace {

// One weight, one output bias: the smallest net whose tensors we can poke.
Network scalar_net(double w0) {
    NetworkArch arch;
    arch.widths = {1, 1};
    Network net = init_network(arch, 0);
    net.output.weights(0, 0) = w0;
    net.output.bias[0] = 0.0;
    return net;
}

Gradients grads_with_weight(Network& net, double gw) {
    Gradients g = Gradients::zeros_like(net);
    g.g[net.weight_tensor_index(net.hidden_count())][0] = gw;
    return g;
}

double weight(Network& net) { return net.output.weights(0, 0); }

} // namespace

TEST_CASE("sgd_step arithmetic") {
    OptimConfig cfg;
    cfg.alpha = 0.1;

    Network net = scalar_net(1.0);
    Gradients g = grads_with_weight(net, 2.0);
    sgd_step(net, g, cfg);
    REQUIRE(weight(net) == Catch::Approx(0.8).epsilon(1e-15));

    net = scalar_net(1.0);
    g = grads_with_weight(net, 0.0);
    cfg.l2_lambda = 0.5;
    sgd_step(net, g, cfg);
    REQUIRE(weight(net) == Catch::Approx(0.95).epsilon(1e-15));
}

TEST_CASE("sgd coupled L2 shrink factor matches the tuned grid point") {
    // lambda parameterized as 1e-4 / alpha: the per-step shrink is exactly
    // 1 - 1e-4 regardless of alpha.
    OptimConfig cfg;
    cfg.alpha = 0.05;
    cfg.l2_lambda = 1e-4 / cfg.alpha;
    Network net = scalar_net(1.0);
    Gradients g = grads_with_weight(net, 0.0);
    sgd_step(net, g, cfg);
    REQUIRE(weight(net) == Catch::Approx(1.0 - 1e-4).epsilon(1e-15));
}

TEST_CASE("sgdw with zero momentum reduces to sgd") {
    OptimConfig cfg;
    cfg.kind = OptimKind::SgdwMomentum;
    cfg.alpha = 0.07;
    cfg.momentum = 0.0;
    cfg.l2_lambda = 0.3;

    Network a = scalar_net(1.0);
    Gradients g = grads_with_weight(a, 1.7);
    OptimizerState st = OptimizerState::create(OptimKind::SgdwMomentum, a);
    sgdw_momentum_step(a, g, cfg, st);

    Network b = scalar_net(1.0);
    sgd_step(b, g, cfg);
    REQUIRE(weight(a) == weight(b));
}

TEST_CASE("sgdw momentum unrolls as v accumulation") {
    // theta0 = 0, constant gradient, m = 0.9, alpha = 1, lambda = 0:
    // v1 = g, theta1 = -g; v2 = 1.9 g, theta2 = -2.9 g.
    OptimConfig cfg;
    cfg.kind = OptimKind::SgdwMomentum;
    cfg.alpha = 1.0;
    cfg.momentum = 0.9;
    const double gw = 0.5;
    Network net = scalar_net(0.0);
    Gradients g = grads_with_weight(net, gw);
    OptimizerState st = OptimizerState::create(OptimKind::SgdwMomentum, net);
    sgdw_momentum_step(net, g, cfg, st);
    sgdw_momentum_step(net, g, cfg, st);
    REQUIRE(weight(net) == Catch::Approx(-2.9 * gw).epsilon(1e-12));
    REQUIRE(st.t == 2);
}

TEST_CASE("sgdw decoupled decay is a pure shrink when gradients vanish") {
    OptimConfig cfg;
    cfg.kind = OptimKind::SgdwMomentum;
    cfg.alpha = 0.01;
    cfg.momentum = 0.9;
    cfg.l2_lambda = 2.0;
    Network net = scalar_net(1.0);
    Gradients g = grads_with_weight(net, 0.0);
    OptimizerState st = OptimizerState::create(OptimKind::SgdwMomentum, net);
    for (int i = 0; i < 3; ++i) sgdw_momentum_step(net, g, cfg, st);
    REQUIRE(weight(net) == Catch::Approx(std::pow(1.0 - 0.02, 3)).epsilon(1e-12));
}

TEST_CASE("adamw first step moves by about alpha") {
    OptimConfig cfg;
    cfg.kind = OptimKind::AdamW;
    cfg.alpha = 5e-4;
    Network net = scalar_net(0.2);
    Gradients g = grads_with_weight(net, -3.0);
    OptimizerState st = OptimizerState::create(OptimKind::AdamW, net);
    adamw_step(net, g, cfg, st);
    // mhat/sqrt(vhat) = g/|g| up to epsilon, so the move is alpha*sign(g).
    REQUIRE(weight(net) - 0.2 == Catch::Approx(cfg.alpha).epsilon(1e-6));
    REQUIRE(st.t == 1);
}

TEST_CASE("adamw with zero gradients from a fresh state is a no-op") {
    OptimConfig cfg;
    cfg.kind = OptimKind::AdamW;
    Network net = scalar_net(0.7);
    Gradients g = grads_with_weight(net, 0.0);
    OptimizerState st = OptimizerState::create(OptimKind::AdamW, net);
    adamw_step(net, g, cfg, st);
    REQUIRE(weight(net) == 0.7);
}

TEST_CASE("adamw moments decay toward zero once gradients stop") {
    OptimConfig cfg;
    cfg.kind = OptimKind::AdamW;
    Network net = scalar_net(0.0);
    OptimizerState st = OptimizerState::create(OptimKind::AdamW, net);
    Gradients g = grads_with_weight(net, 1.0);
    adamw_step(net, g, cfg, st);
    const std::size_t wi = net.weight_tensor_index(net.hidden_count());
    const double m_before = st.m1[wi][0];
    const double v_before = st.m2[wi][0];
    g = grads_with_weight(net, 0.0);
    adamw_step(net, g, cfg, st);
    REQUIRE(st.m1[wi][0] == Catch::Approx(cfg.beta1 * m_before).epsilon(1e-15));
    REQUIRE(st.m2[wi][0] == Catch::Approx(cfg.beta2 * v_before).epsilon(1e-15));
}

TEST_CASE("tuned optimizer defaults") {
    OptimConfig cfg;
    REQUIRE(cfg.beta1 == 0.9);
    REQUIRE(cfg.beta2 == 0.999);
    REQUIRE(cfg.adam_epsilon == 1e-8);
    cfg.validate();
    cfg.momentum = 1.0;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("all three rules step against the gradient sign") {
    NetworkArch arch;
    arch.widths = {4, 3, 2};
    Rng rng = make_rng(21);
    OptimConfig cfg;
    cfg.alpha = 0.01;
    for (OptimKind kind : {OptimKind::Sgd, OptimKind::SgdwMomentum, OptimKind::AdamW}) {
        cfg.kind = kind;
        cfg.momentum = 0.0;
        Network net = init_network(arch, 5);
        const auto before = [&] {
            std::vector<double> v;
            for (const auto& tv : net.tensors()) v.insert(v.end(), tv.data, tv.data + tv.size);
            return v;
        }();
        Gradients g = Gradients::zeros_like(net);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& t : g.g)
            for (auto& x : t) x = u(rng);
        OptimizerState st = OptimizerState::create(kind, net);
        optimizer_step(net, g, cfg, st);
        std::size_t i = 0, ti = 0;
        for (const auto& tv : net.tensors()) {
            for (std::size_t e = 0; e < tv.size; ++e, ++i) {
                const double delta = tv.data[e] - before[i];
                const double grad = g.g[ti][e];
                if (grad > 1e-9) REQUIRE(delta < 0.0);
                if (grad < -1e-9) REQUIRE(delta > 0.0);
            }
            ++ti;
        }
        REQUIRE(st.t == 1);
    }
}

TEST_CASE("reset_state_at zeroes exactly the requested elements") {
    NetworkArch arch;
    arch.widths = {3, 4, 2};
    Network net = init_network(arch, 9);
    OptimizerState st = OptimizerState::create(OptimKind::AdamW, net);
    Gradients g = Gradients::zeros_like(net);
    Rng rng = make_rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& t : g.g)
        for (auto& x : t) x = u(rng);
    OptimConfig cfg;
    cfg.kind = OptimKind::AdamW;
    adamw_step(net, g, cfg, st);

    SECTION("reset none leaves state untouched") {
        OptimizerState copy = st;
        reset_state_at(st, 0, std::vector<std::size_t>{});
        REQUIRE(st.m1 == copy.m1);
        REQUIRE(st.m2 == copy.m2);
    }
    SECTION("reset all equals a fresh state with the same step count") {
        OptimizerState fresh = OptimizerState::create(OptimKind::AdamW, net);
        fresh.t = st.t;
        for (std::size_t ti = 0; ti < st.m1.size(); ++ti) {
            std::vector<std::size_t> all(st.m1[ti].size());
            std::iota(all.begin(), all.end(), 0);
            reset_state_at(st, ti, all);
        }
        REQUIRE(st.m1 == fresh.m1);
        REQUIRE(st.m2 == fresh.m2);
        REQUIRE(st.t == fresh.t);
    }
    SECTION("a reset element with zero gradient stays put under adamw") {
        const double w_before = net.output.weights(0, 0);
        const std::size_t wi = net.weight_tensor_index(net.hidden_count());
        reset_state_at(st, wi, std::vector<std::size_t>{0});
        Gradients zero = Gradients::zeros_like(net);
        adamw_step(net, zero, cfg, st);
        REQUIRE(net.output.weights(0, 0) == w_before);
    }
    SECTION("bad indices throw") {
        REQUIRE_THROWS_AS(reset_state_at(st, 99, std::vector<std::size_t>{0}), ShapeError);
        REQUIRE_THROWS_AS(reset_state_at(st, 0, std::vector<std::size_t>{1u << 30}), ShapeError);
    }
}

TEST_CASE("state buffers stay shape-congruent with the network") {
    NetworkArch arch;
    arch.widths = {5, 6, 3};
    arch.norm = LayerNormMode::Standard;
    Network net = init_network(arch, 4);
    OptimizerState st = OptimizerState::create(OptimKind::SgdwMomentum, net);
    const auto sizes = net.tensor_sizes();
    REQUIRE(st.momentum.size() == sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) REQUIRE(st.momentum[i].size() == sizes[i]);

    OptimConfig cfg;
    cfg.kind = OptimKind::SgdwMomentum;
    REQUIRE_THROWS_AS(sgdw_momentum_step(net, Gradients{}, cfg, st), ShapeError);
    OptimizerState wrong = OptimizerState::create(OptimKind::Sgd, net);
    REQUIRE_THROWS_AS(sgdw_momentum_step(net, Gradients::zeros_like(net), cfg, wrong),
                      ConfigError);
}

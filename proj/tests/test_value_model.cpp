#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "meanq/errors.hpp"
#include "meanq/value_model.hpp"

using namespace meanq;

namespace {

std::unique_ptr<ActionValueTable> table_with(int n_states, int n_actions,
                                             std::vector<double> values) {
    auto t = std::make_unique<ActionValueTable>(n_states, n_actions);
    t->params() = std::move(values);
    return t;
}

// dot(g, mlp(x)) differentiated by central differences in every parameter.
double max_grad_check_error(MlpQNetwork& mlp, const std::vector<double>& x,
                            const std::vector<double>& g, double h = 1e-6) {
    std::vector<double> analytic(mlp.params().size(), 0.0);
    mlp.forward_backward(x, g, analytic);
    double worst = 0.0;
    for (std::size_t i = 0; i < mlp.params().size(); ++i) {
        const double saved = mlp.params()[i];
        mlp.params()[i] = saved + h;
        const std::vector<double> up = mlp.forward(x);
        mlp.params()[i] = saved - h;
        const std::vector<double> down = mlp.forward(x);
        mlp.params()[i] = saved;
        double fd = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) fd += g[j] * (up[j] - down[j]);
        fd /= 2.0 * h;
        const double scale = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
        worst = std::max(worst, std::abs(fd - analytic[i]) / scale);
    }
    return worst;
}

} // namespace

TEST_CASE("predict: tabular reads rows exactly") {
    auto t = table_with(5, 2, {0, 0, 0, 0, 0, 0, 1.0, -2.0, 0, 0});
    const std::vector<double> q = t->predict(3);
    CHECK(q[0] == 1.0);
    CHECK(q[1] == -2.0);
    CHECK_THROWS_AS(t->predict(5), std::out_of_range);
    CHECK_THROWS_AS(t->predict(-1), std::out_of_range);

    ActionValueTable fresh(4, 3);
    for (int s = 0; s < 4; ++s)
        for (const double v : fresh.predict(s)) CHECK(v == 0.0);
}

TEST_CASE("predict: zero-parameter MLP outputs zeros") {
    MlpQNetwork mlp({4, 8, 3});
    for (int s = 0; s < 4; ++s)
        for (const double v : mlp.predict(s)) CHECK(v == 0.0);
    CHECK_THROWS_AS(mlp.forward(std::vector<double>(5, 0.0)), std::invalid_argument);
}

TEST_CASE("ensemble_mean_values: mean of members") {
    SUBCASE("K=1 equals predict") {
        auto t = table_with(1, 2, {1.5, -0.5});
        const ModelView view{t.get()};
        CHECK(ensemble_mean_values(view, 0) == t->predict(0));
    }
    SUBCASE("symmetric pair averages to (2,2)") {
        auto a = table_with(1, 2, {1, 3});
        auto b = table_with(1, 2, {3, 1});
        const std::vector<double> mean = ensemble_mean_values({a.get(), b.get()}, 0);
        CHECK(mean[0] == 2.0);
        CHECK(mean[1] == 2.0);
    }
    SUBCASE("five zero members stay zero") {
        std::vector<std::unique_ptr<QModel>> owners;
        ModelView view;
        for (int k = 0; k < 5; ++k) {
            owners.push_back(std::make_unique<ActionValueTable>(2, 2));
            view.push_back(owners.back().get());
        }
        for (const double v : ensemble_mean_values(view, 1)) CHECK(v == 0.0);
    }
    CHECK_THROWS_AS(ensemble_mean_values({}, 0), std::invalid_argument);
}

TEST_CASE("ensemble_value: max over the mean") {
    auto a = table_with(1, 2, {0, 4});
    auto b = table_with(1, 2, {2, 0});
    // Brute-force oracle: mean each action, then max.
    const double oracle = std::max((0.0 + 2.0) / 2.0, (4.0 + 0.0) / 2.0);
    CHECK(ensemble_value({a.get(), b.get()}, 0) == oracle);
    CHECK(oracle == 2.0);

    auto tie = table_with(1, 2, {2, 2});
    CHECK(ensemble_value({tie.get()}, 0) == 2.0);
    auto single = table_with(1, 2, {1.0, -2.0});
    CHECK(ensemble_value({single.get()}, 0) == 1.0);
}

TEST_CASE("greedy_action: argmax with lowest-index ties") {
    auto up = table_with(1, 2, {1, 2});
    CHECK(greedy_action({up.get()}, 0) == 1);
    auto tie = table_with(1, 2, {2, 2});
    CHECK(greedy_action({tie.get()}, 0) == 0);
    auto a = table_with(1, 2, {1, 3});
    auto b = table_with(1, 2, {3, 1});
    CHECK(greedy_action({a.get(), b.get()}, 0) == 0); // means tie at (2,2)
}

TEST_CASE("greedy_action: invariant under a common constant shift") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        auto a = std::make_unique<ActionValueTable>(3, 4);
        auto b = std::make_unique<ActionValueTable>(3, 4);
        for (double& v : a->params()) v = rng.uniform(-5, 5);
        for (double& v : b->params()) v = rng.uniform(-5, 5);
        const int before = greedy_action({a.get(), b.get()}, 1);
        const double c = rng.uniform(-100, 100);
        for (double& v : a->params()) v += c;
        for (double& v : b->params()) v += c;
        CHECK(greedy_action({a.get(), b.get()}, 1) == before);
    }
}

TEST_CASE("ensemble_std: population spread per action") {
    auto solo = table_with(1, 3, {1, 2, 3});
    for (const double s : ensemble_std({solo.get()}, 0)) CHECK(s == 0.0);

    auto a = table_with(1, 2, {1, 5});
    auto b = table_with(1, 2, {1, 5});
    for (const double s : ensemble_std({a.get(), b.get()}, 0)) CHECK(s == 0.0);

    auto hi = table_with(1, 1, {1});
    auto lo = table_with(1, 1, {-1});
    const std::vector<double> sd = ensemble_std({hi.get(), lo.get()}, 0);
    CHECK(sd[0] == doctest::Approx(1.0)); // sqrt(mean of squared deviations), divisor K
}

TEST_CASE("forward_backward: zero upstream gradient gives zero parameter gradient") {
    MlpQNetwork mlp({3, 4, 2});
    Rng rng(5);
    mlp.init_random(rng);
    std::vector<double> grads(mlp.params().size(), 0.0);
    mlp.forward_backward(std::vector<double>{1, 0, 0}, std::vector<double>{0, 0}, grads);
    for (const double g : grads) CHECK(g == 0.0);
}

TEST_CASE("forward_backward: single linear layer weight gradient is outer(g, x)") {
    MlpQNetwork mlp({3, 2});
    Rng rng(6);
    mlp.init_random(rng);
    const std::vector<double> x{0.5, -1.0, 2.0};
    const std::vector<double> g{2.0, -3.0};
    std::vector<double> grads(mlp.params().size(), 0.0);
    mlp.forward_backward(x, g, grads);
    // Layout: W row-major (out x in) then b.
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(grads[static_cast<std::size_t>(i) * 3 + j] == doctest::Approx(g[i] * x[j]));
    CHECK(grads[6] == doctest::Approx(g[0]));
    CHECK(grads[7] == doctest::Approx(g[1]));
}

TEST_CASE("forward_backward: matches central finite differences") {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const int in = 1 + rng.uniform_int(4);
        const int hidden = 1 + rng.uniform_int(5);
        const int out = 1 + rng.uniform_int(3);
        MlpQNetwork mlp({in, hidden, out}, Activation::tanh);
        mlp.init_random(rng);
        std::vector<double> x(in), g(out);
        for (double& v : x) v = rng.uniform(-1, 1);
        for (double& v : g) v = rng.uniform(-1, 1);
        CHECK(max_grad_check_error(mlp, x, g) < 1e-5);
    }
}

TEST_CASE("forward_backward: relu path matches finite differences away from kinks") {
    Rng rng(123);
    int checked = 0;
    for (int trial = 0; trial < 60 && checked < 20; ++trial) {
        MlpQNetwork mlp({3, 6, 2}, Activation::relu);
        mlp.init_random(rng);
        std::vector<double> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        // Skip draws with a preactivation near zero, where the central
        // difference straddles the kink.
        bool near_kink = false;
        for (int i = 0; i < 6; ++i) {
            double z = mlp.params()[18 + i]; // hidden biases
            for (int j = 0; j < 3; ++j) z += mlp.params()[static_cast<std::size_t>(i) * 3 + j] * x[j];
            if (std::abs(z) < 1e-3) near_kink = true;
        }
        if (near_kink) continue;
        ++checked;
        const std::vector<double> g{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        CHECK(max_grad_check_error(mlp, x, g) < 1e-5);
    }
    CHECK(checked >= 10);
}

TEST_CASE("optimizer: zero gradient leaves parameters unchanged, counters advance") {
    Optimizer opt(OptimizerConfig{}); // adam defaults
    std::vector<double> params{1.0, -2.0};
    const std::vector<double> zero{0.0, 0.0};
    opt.step(params, zero);
    opt.step(params, zero);
    CHECK(params[0] == 1.0);
    CHECK(params[1] == -2.0);
    CHECK(opt.steps_taken() == 2);
}

TEST_CASE("optimizer: plain sgd is p -= alpha * g exactly") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::sgd;
    cfg.alpha = 0.25;
    Optimizer opt(cfg);
    std::vector<double> params{1.0, 2.0};
    opt.step(params, std::vector<double>{4.0, -8.0});
    CHECK(params[0] == 1.0 - 0.25 * 4.0);
    CHECK(params[1] == 2.0 - 0.25 * -8.0);
}

TEST_CASE("optimizer: default learning rate and non-finite rejection") {
    const OptimizerConfig cfg;
    CHECK(cfg.alpha == 6.25e-5);
    Optimizer opt(cfg);
    std::vector<double> params{0.0};
    CHECK_THROWS_AS(opt.step(params, std::vector<double>{std::nan("")}), NumericalError);
    CHECK(params[0] == 0.0);
}

TEST_CASE("optimizer: sgd_decay shrinks the step with per-parameter visits") {
    OptimizerConfig cfg;
    cfg.kind = OptimizerKind::sgd_decay;
    cfg.alpha = 1.0;
    cfg.decay = 1.0;
    Optimizer opt(cfg);
    std::vector<double> params{0.0};
    opt.step(params, std::vector<double>{-1.0});
    CHECK(params[0] == doctest::Approx(0.5)); // alpha / (1 + 1)
    opt.step(params, std::vector<double>{-1.0});
    CHECK(params[0] == doctest::Approx(0.5 + 1.0 / 3.0));
}

TEST_CASE("sync_targets: online aliases live reads; lagging copies on period") {
    std::vector<std::unique_ptr<QModel>> members;
    members.push_back(std::make_unique<ActionValueTable>(2, 2));
    Ensemble live(std::move(members));

    TargetEnsemble online = TargetEnsemble::online(live);
    dynamic_cast<ActionValueTable&>(live.member(0)).at(0, 0) = 7.0;
    CHECK(online.view()[0]->predict(0)[0] == 7.0); // reads always reflect live

    TargetEnsemble lagging = TargetEnsemble::lagging(live, 100);
    CHECK(lagging.view()[0]->predict(0)[0] == 7.0);
    dynamic_cast<ActionValueTable&>(live.member(0)).at(0, 0) = 9.0;
    lagging.sync(live, 99);
    CHECK(lagging.view()[0]->predict(0)[0] == 7.0);
    lagging.sync(live, 100); // copy happens exactly here
    CHECK(lagging.view()[0]->predict(0)[0] == 9.0);
    dynamic_cast<ActionValueTable&>(live.member(0)).at(0, 0) = 11.0;
    lagging.sync(live, 101);
    CHECK(lagging.view()[0]->predict(0)[0] == 9.0);
    CHECK(live.member(0).params()[0] == 11.0); // live untouched by syncs

    CHECK(ensemble_value(lagging.view(), 0) ==
          ensemble_value(live.view(), 0) - (11.0 - 9.0)); // lag visible
    lagging.force_sync(live);
    CHECK(ensemble_value(lagging.view(), 0) == ensemble_value(live.view(), 0));
}

TEST_CASE("snapshot_push: ring of recent parameter copies") {
    ActionValueTable model(1, 1);
    SnapshotHistory history(2);
    CHECK(history.size() == 0);

    model.at(0, 0) = 0.0;
    history.push(model);
    CHECK(history.size() == 1);
    CHECK(ensemble_value(history.view(), 0) == 0.0);

    model.at(0, 0) = 4.0;
    history.push(model);
    CHECK(history.size() == 2);
    CHECK(ensemble_value(history.view(), 0) == 2.0); // mean of 0 and 4

    model.at(0, 0) = 4.0;
    history.push(model); // evicts the 0-valued snapshot
    CHECK(history.size() == 2);
    CHECK(ensemble_value(history.view(), 0) == 4.0);
}

TEST_CASE("ensemble_value equals max of mean exactly on random ensembles") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::unique_ptr<QModel>> owners;
        ModelView view;
        for (int k = 0; k < 3; ++k) {
            auto t = std::make_unique<ActionValueTable>(4, 3);
            for (double& v : t->params()) v = rng.uniform(-10, 10);
            view.push_back(t.get());
            owners.push_back(std::move(t));
        }
        for (int s = 0; s < 4; ++s) {
            const std::vector<double> mean = ensemble_mean_values(view, s);
            double mx = mean[0];
            for (const double v : mean) mx = std::max(mx, v);
            CHECK(ensemble_value(view, s) == mx);
        }
    }
}

TEST_CASE("checkpoint: save/load round-trips every member bit for bit") {
    Rng rng(77);
    std::vector<std::unique_ptr<QModel>> members;
    auto mlp = std::make_unique<MlpQNetwork>(std::vector<int>{4, 6, 2});
    mlp->init_random(rng);
    members.push_back(std::move(mlp));
    auto table = std::make_unique<ActionValueTable>(4, 2);
    for (double& v : table->params()) v = rng.uniform(-1, 1);
    members.push_back(std::move(table));
    auto cat = std::make_unique<CategoricalQModel>(4, std::vector<int>{5}, 2, Support(-2, 2, 11));
    cat->init_random(rng);
    members.push_back(std::move(cat));
    Ensemble ensemble(std::move(members));

    const std::string path =
        (std::filesystem::temp_directory_path() / "meanq_ckpt_test.bin").string();
    save_checkpoint(path, ensemble);
    const Ensemble loaded = load_checkpoint(path);
    REQUIRE(loaded.size() == ensemble.size());
    for (int k = 0; k < ensemble.size(); ++k) {
        CHECK(loaded.member(k).kind() == ensemble.member(k).kind());
        CHECK(loaded.member(k).params() == ensemble.member(k).params());
    }
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint: bad magic is rejected") {
    const std::string path =
        (std::filesystem::temp_directory_path() / "meanq_ckpt_bad.bin").string();
    {
        std::FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("not a checkpoint", f);
        std::fclose(f);
    }
    CHECK_THROWS(load_checkpoint(path));
    std::filesystem::remove(path);
}

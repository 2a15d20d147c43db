#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "habsk/dqn.hpp"
#include "habsk/errors.hpp"
#include "habsk/mlp.hpp"
#include "habsk/replay_buffer.hpp"

using namespace habsk;
using namespace habsk::testing;

namespace {

/// Sets a {n, 3} single-layer network so that Q = W x + b.
QNetwork linear_net(std::size_t n, const std::vector<float>& w, const std::vector<float>& b) {
    QNetwork net({n, 3});
    auto p = net.parameters();
    std::copy(w.begin(), w.end(), p.begin());
    std::copy(b.begin(), b.end(), p.begin() + static_cast<std::ptrdiff_t>(w.size()));
    return net;
}

TrainerConfig small_trainer(std::uint64_t seed) {
    TrainerConfig tc;
    tc.sim.arena.center = {35.0, -103.0};
    tc.seed = seed;
    tc.hp.total_steps = 600;
    tc.hp.warmup_steps = 100;
    tc.hp.train_every = 1;
    tc.hp.batch_size = 16;
    tc.hp.target_update_interval = 100;
    tc.hp.replay_capacity = 1000;
    tc.hp.hidden_layers = {16, 16};
    tc.hp.eval_interval = 300;
    tc.hp.eval_episodes = 2;
    tc.hp.learning_rate = 1e-3;
    return tc;
}

}  // namespace

TEST_SUITE("dqn_agent") {

TEST_CASE("network shapes") {
    const QNetwork net = make_qnetwork(24, {128, 128});
    CHECK(net.parameter_count() == (24 * 128 + 128) + (128 * 128 + 128) + (128 * 3 + 3));
    CHECK(net.input_size() == 24);
    CHECK(net.output_size() == 3);
    std::vector<float> short_obs(5, 0.0f);
    CHECK_THROWS_AS(q_forward(net, short_obs), ShapeError);
    CHECK_THROWS_AS(QNetwork({4}), ShapeError);
}

TEST_CASE("forward pass") {
    QNetwork zero({4, 8, 3});
    std::vector<float> x{0.3f, -1.0f, 2.0f, 0.5f};
    for (float q : q_forward(zero, x)) CHECK(q == 0.0f);

    // Q = W x + b with a hand-set matrix
    const QNetwork lin = linear_net(2, {1, 0, 0, 1, 2, -1}, {0.5f, 0, 0});
    const std::vector<float> obs{3.0f, 4.0f};
    const auto q = q_forward(lin, obs);
    CHECK(q[0] == 3.5f);
    CHECK(q[1] == 4.0f);
    CHECK(q[2] == 2.0f);

    Rng rng(5);
    QNetwork net = make_qnetwork(12, {32, 32});
    for (int i = 0; i < 1000; ++i) {
        net.initialize(rng);
        std::vector<float> o(12);
        for (auto& v : o) v = static_cast<float>(rng.uniform(-5, 5));
        for (float v : q_forward(net, o)) CHECK(std::isfinite(v));
    }
}

TEST_CASE("argmax ties go to the lowest index") {
    const std::vector<float> q{1.0f, 3.0f, 3.0f};
    CHECK(argmax_action(q) == 1);
    const std::vector<float> flat{0.0f, 0.0f, 0.0f};
    CHECK(argmax_action(flat) == 0);
}

TEST_CASE("epsilon-greedy selection") {
    const QNetwork favour2 = linear_net(1, {0, 0, 1}, {0, 0, 0});
    const std::vector<float> obs{1.0f};
    Rng rng(10);
    for (int i = 0; i < 1000; ++i) CHECK(select_action(favour2, obs, 0.0, rng) == 2);
    // epsilon 0 draws nothing from the generator
    Rng fresh(10);
    CHECK(rng == fresh);

    std::array<int, 3> counts{};
    const int n = 30000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(select_action(favour2, obs, 1.0, rng))];
    const double sigma = std::sqrt(n * (1.0 / 3.0) * (2.0 / 3.0));
    for (int c : counts) CHECK(std::abs(c - n / 3.0) <= 3.0 * sigma);
}

TEST_CASE("epsilon schedule") {
    DQNHyperparams hp;
    CHECK(epsilon_at(hp, 0) == hp.epsilon_start);
    const auto decay_end = std::llround(static_cast<double>(hp.total_steps) * hp.epsilon_decay_fraction);
    CHECK(epsilon_at(hp, decay_end) == hp.epsilon_end);
    CHECK(epsilon_at(hp, hp.total_steps) == hp.epsilon_end);
    CHECK(epsilon_at(hp, decay_end / 2) == doctest::Approx((hp.epsilon_start + hp.epsilon_end) / 2).epsilon(1e-4));
    hp.total_steps = 300;
    hp.epsilon_decay_fraction = 0.5;
    CHECK(epsilon_at(hp, 150) == hp.epsilon_end);
}

TEST_CASE("hyperparameter validation") {
    DQNHyperparams hp;
    hp.learning_rate = 0.0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = {};
    hp.learning_rate = 1.5;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = {};
    hp.epsilon_end = 0.6;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = {};
    hp.batch_size = 0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
}

TEST_CASE("TD targets") {
    const QNetwork target = linear_net(1, {1, 2, 3}, {0, 0, 0});
    TransitionBatch b;
    b.clear(1);
    const std::vector<float> s{1.0f}, s2{2.0f};
    b.push(s, 0, 1.0f, s2, true);
    b.push(s, 1, 0.5f, s2, false);
    const auto y = td_targets(b, target, 0.9);
    CHECK(y[0] == 1.0f);
    CHECK(y[1] == doctest::Approx(0.5 + 0.9 * 6.0));
    const auto y0 = td_targets(b, target, 0.0);
    CHECK(y0[1] == 0.5f);
}

TEST_CASE("two-state chain converges to the optimal values") {
    // state 0 -> state 1 and back; rewards depend on state and action
    const double gamma = 0.5;
    const double r[2][3] = {{0.0, 1.0, 0.25}, {0.5, -1.0, 0.75}};
    // value iteration oracle
    double qstar[2][3] = {};
    for (int it = 0; it < 200; ++it) {
        double next[2][3];
        for (int s = 0; s < 2; ++s) {
            const int s2 = 1 - s;
            const double v = std::max({qstar[s2][0], qstar[s2][1], qstar[s2][2]});
            for (int a = 0; a < 3; ++a) next[s][a] = r[s][a] + gamma * v;
        }
        std::copy(&next[0][0], &next[0][0] + 6, &qstar[0][0]);
    }

    QNetwork online({2, 3});
    QNetwork target = online;
    Adam<float> opt(online.parameter_count());
    TransitionBatch batch;
    batch.clear(2);
    const std::vector<float> one_hot[2] = {{1.0f, 0.0f}, {0.0f, 1.0f}};
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 3; ++a) batch.push(one_hot[s], a, static_cast<float>(r[s][a]), one_hot[1 - s], false);

    for (int outer = 0; outer < 120; ++outer) {
        target = online;
        const auto y = td_targets(batch, target, gamma);
        const double lr = std::max(1e-4, 0.05 * std::pow(0.93, outer));
        for (int inner = 0; inner < 150; ++inner) gradient_step(online, opt, batch, y, lr);
    }
    for (int s = 0; s < 2; ++s) {
        const auto q = q_forward(online, one_hot[s]);
        for (int a = 0; a < 3; ++a) CHECK(std::abs(q[static_cast<std::size_t>(a)] - qstar[s][a]) <= 1e-3);
    }
}

TEST_CASE("gradient step") {
    Rng rng(3);
    QNetwork net = make_qnetwork(4, {16});
    net.initialize(rng);
    Adam<float> opt(net.parameter_count());
    TransitionBatch b;
    b.clear(4);
    const std::vector<float> s{0.2f, -0.4f, 0.9f, 0.1f};
    b.push(s, 1, 0.0f, s, true);
    const std::vector<float> y{3.0f};

    const QNetwork before = net;
    gradient_step(net, opt, b, y, 0.0);
    CHECK(net == before);

    Adam<float> fresh(net.parameter_count());
    const double first = gradient_step(net, fresh, b, y, 1e-2);
    double last = first;
    for (int i = 0; i < 100; ++i) last = gradient_step(net, fresh, b, y, 1e-2);
    CHECK(last * 10.0 <= first);

    const std::vector<float> bad{std::numeric_limits<float>::infinity()};
    const QNetwork snapshot = net;
    CHECK_THROWS_AS(gradient_step(net, fresh, b, bad, 1e-2), TrainingError);
    CHECK(net == snapshot);
}

TEST_CASE("analytic gradients match finite differences") {
    Rng rng(77);
    Mlp<double> net({5, 7, 6, 3});
    std::vector<double> grad(net.parameter_count());
    for (int trial = 0; trial < 20; ++trial) {
        net.initialize(rng);
        for (auto& p : net.parameters()) p += rng.uniform(-0.1, 0.1);  // non-zero biases
        const std::size_t batch = 4;
        std::vector<double> x(batch * 5), y(batch);
        std::vector<int> a(batch);
        for (auto& v : x) v = rng.uniform(-2, 2);
        for (auto& v : y) v = rng.uniform(-1, 1);
        for (auto& v : a) v = static_cast<int>(rng.integer(0, 2));
        net.loss_and_gradient(x, a, y, grad);
        auto loss = [&] {
            double l = 0.0;
            std::vector<double> q(3);
            for (std::size_t s = 0; s < batch; ++s) {
                net.forward(std::span<const double>(x).subspan(s * 5, 5), q);
                const double e = q[static_cast<std::size_t>(a[s])] - y[s];
                l += e * e;
            }
            return l / static_cast<double>(batch);
        };
        auto params = net.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double h = 1e-6, keep = params[i];
            params[i] = keep + h;
            const double up = loss();
            params[i] = keep - h;
            const double down = loss();
            params[i] = keep;
            const double fd = (up - down) / (2 * h);
            CHECK(std::abs(fd - grad[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("adam bias correction on the first step") {
    std::vector<double> p{1.0, -2.0};
    const std::vector<double> g{0.5, -4.0};
    Adam<double> opt(2);
    opt.step(p, g, 0.1);
    // first step moves each parameter by lr * sign(g)
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(-1.9).epsilon(1e-6));
    CHECK(opt.steps() == 1);
}

TEST_CASE("replay buffer") {
    ReplayBuffer rb(5, 2);
    for (int i = 0; i < 8; ++i) {
        const std::vector<float> s{static_cast<float>(i), 0.0f}, s2{static_cast<float>(i + 1), 0.0f};
        rb.push(s, i % 3, static_cast<float>(i), s2, i == 7);
        CHECK(rb.size() == std::min(i + 1, 5));
        CHECK(rb.size() <= rb.capacity());
    }
    // oldest three evicted
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(rb.state(i)[0] == static_cast<float>(i + 3));
        CHECK(rb.reward(i) == static_cast<float>(i + 3));
        CHECK(rb.next_state(i)[0] == static_cast<float>(i + 4));
    }
    CHECK(rb.terminal(4));
    CHECK_FALSE(rb.terminal(0));

    Rng rng(1);
    TransitionBatch b;
    for (int n = 0; n < 200; ++n) {
        rb.sample(5, rng, b);
        std::vector<float> seen(b.rewards);
        std::sort(seen.begin(), seen.end());
        CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    }
    CHECK_THROWS(rb.sample(6, rng, b));

    const std::vector<float> s{0, 0};
    CHECK_THROWS_AS(rb.push(s, 0, std::nanf(""), s, false), TrainingError);

    std::stringstream ss;
    rb.serialize(ss);
    ReplayBuffer back;
    back.deserialize(ss);
    CHECK(back == rb);
}

TEST_CASE("sampling without replacement is uniform") {
    Rng rng(21);
    std::vector<int> hits(10, 0);
    const int rounds = 20000;
    for (int i = 0; i < rounds; ++i) {
        const auto pick = sample_without_replacement(10, 3, rng);
        CHECK(pick.size() == 3);
        for (auto p : pick) ++hits[p];
    }
    const double expect = rounds * 0.3, sigma = std::sqrt(rounds * 0.3 * 0.7);
    for (int h : hits) CHECK(std::abs(h - expect) <= 4 * sigma);
}

TEST_CASE("observation normalizer round trip") {
    const SimConfig sim;
    const RewardConfig rw;
    const DQNHyperparams hp;
    const ObservationNormalizer norm = ObservationNormalizer::from(sim, rw, hp);
    Observation obs;
    obs.altitude = 17500.0;
    obs.relative_distance = 25.0;
    obs.relative_bearing = 90.0;
    obs.wind_column = {{16000.0, 10.0, 45.0}, {20000.0, 4.0, 180.0}};
    const auto flat = norm.encode(obs);
    REQUIRE(flat.size() == obs.flat_size());
    CHECK(flat[0] == doctest::Approx(0.25));
    CHECK(flat[1] == doctest::Approx(0.5));
    CHECK(flat[2] == doctest::Approx(0.5));
    CHECK(flat[4] == doctest::Approx(0.5));
    const Observation back = norm.decode(flat);
    CHECK(back.altitude == doctest::Approx(obs.altitude));
    CHECK(back.wind_column[1].relative_bearing == doctest::Approx(180.0));
}

TEST_CASE("greedy action survives consistent normalization") {
    // the same map applied to every input leaves the greedy choice a pure function of the observation
    Rng rng(4);
    QNetwork net = make_qnetwork(9, {8});
    net.initialize(rng);
    const ObservationNormalizer norm;
    Observation obs;
    obs.wind_column.resize(2);
    for (int i = 0; i < 100; ++i) {
        obs.altitude = rng.uniform(15000, 25000);
        obs.relative_distance = rng.uniform(0, 100);
        obs.relative_bearing = rng.uniform(0, 180);
        for (auto& c : obs.wind_column) c = {rng.uniform(15000, 25000), rng.uniform(0, 20), rng.uniform(0, 180)};
        const auto x = norm.encode(obs);
        const auto x2 = norm.encode(norm.decode(x));
        Rng unused(0);
        CHECK(select_action(net, x, 0.0, unused) == select_action(net, x2, 0.0, unused));
    }
}

TEST_CASE("episode draws fit inside the grids") {
    const GridLibrary lib = library_of(opposing_layers_grid());
    SimConfig base;
    Rng rng(14);
    for (int i = 0; i < 200; ++i) {
        const EpisodeSpec e = draw_episode(lib, base, true, rng);
        const auto& g = *lib[e.pair].truth;
        CHECK_NOTHROW(check_coverage(g, e.sim, *e.sim.start_time, "truth"));
        CHECK((*e.sim.start_time - g.time_begin()) % 3600 == 0);
    }
    auto tiny = make_axes(35, 35.5, -100, -99.5, 0.5, altitude_levels(15000, 25000, 5000), {kT0, kT0 + 72000});
    const GridLibrary small = library_of(WindGrid::filled(tiny, GridKind::Synthetic, [](auto...) { return WindVector{}; }));
    CHECK_THROWS_AS(draw_episode(small, base, true, rng), CoverageError);
}

TEST_CASE("target network only changes at sync steps") {
    DqnTrainer t(library_of(opposing_layers_grid()), small_trainer(5));
    QNetwork prev = t.target();
    for (std::int64_t k = 1; k <= 600; ++k) {
        t.run(k);
        if (!(t.target() == prev)) {
            CHECK(k % 100 == 0);
            CHECK(t.target() == t.online());
            prev = t.target();
        }
    }
    CHECK(t.step() == 600);
    CHECK(t.replay().size() == 600);
}

TEST_CASE("training on a calm grid produces a learning curve") {
    TrainerConfig tc = small_trainer(1);
    tc.hp.total_steps = 10000;
    tc.hp.warmup_steps = 1000;
    tc.hp.train_every = 4;
    tc.hp.eval_interval = 2000;
    DqnTrainer t(library_of(uniform_wind_grid(0.0, 0.0)), tc);
    t.run();
    const auto& curve = t.learning_curve();
    REQUIRE(curve.size() == 5);
    double best = -1e300;
    for (const auto& p : curve) {
        const double next = std::max(best, p.mean_reward);
        CHECK(next >= best);
        best = next;
        CHECK(p.twr50 == 1.0);  // never leaves the station
    }
    CHECK(curve.back().step == 10000);
    std::ostringstream os;
    write_learning_curve_csv(os, curve);
    CHECK(os.str().rfind("step,mean_reward,twr25,twr50,twr75,epsilon,loss\n", 0) == 0);
}

TEST_CASE("checkpoint resume continues exactly") {
    TempDir dir("ckpt");
    const GridLibrary lib = library_of(opposing_layers_grid());
    TrainerConfig tc = small_trainer(9);
    tc.hp.total_steps = 1500;
    tc.hp.eval_interval = 500;

    DqnTrainer straight(lib, tc);
    straight.run();

    DqnTrainer first(lib, tc);
    first.run(700);  // stop mid-episode
    first.save_checkpoint(dir / "ck");
    DqnTrainer resumed = DqnTrainer::resume(dir / "ck", lib);
    CHECK(resumed.step() == 700);
    CHECK(resumed.online() == first.online());
    CHECK(resumed.replay() == first.replay());
    resumed.run();

    CHECK(resumed.online() == straight.online());
    CHECK(resumed.target() == straight.target());
    CHECK(resumed.replay() == straight.replay());
    CHECK(resumed.learning_curve() == straight.learning_curve());
    CHECK(resumed.episodes() == straight.episodes());

    const PolicyBundle p = load_policy(dir / "ck");
    CHECK(p.net == first.online());
    CHECK(p.seed == 9);
    CHECK(p.normalizer == first.normalizer());
}

TEST_CASE("corrupt checkpoints are rejected") {
    TempDir dir("ckbad");
    DqnTrainer t(library_of(opposing_layers_grid()), small_trainer(2));
    t.run(150);
    t.save_checkpoint(dir / "ck");
    {
        std::ofstream os(dir / "ck" / "weights.bin", std::ios::binary | std::ios::trunc);
        os << "xx";
    }
    CHECK_THROWS(load_policy(dir / "ck"));
    CHECK_THROWS(load_policy(dir / "nowhere"));
}

TEST_CASE("random search") {
    TempDir dir("search");
    const GridLibrary lib = library_of(opposing_layers_grid());
    TrainerConfig base = small_trainer(0);
    base.hp.total_steps = 300;
    base.hp.eval_interval = 300;
    const SearchSpace space;
    const auto one = hyperparameter_search(lib, base, space, 1, 5, dir.path());
    REQUIRE(one.size() == 1);
    CHECK(one[0].ok);
    CHECK(std::filesystem::exists(dir / "trial_000.json"));
    CHECK(std::filesystem::exists(dir / "ranking.json"));

    const auto trials = hyperparameter_search(lib, base, space, 4, 5);
    REQUIRE(trials.size() == 4);
    for (std::size_t i = 0; i < trials.size(); ++i) {
        CHECK(trials[i].hp.learning_rate >= 1e-5);
        CHECK(trials[i].hp.learning_rate <= 1e-4);
        CHECK(trials[i].hp.epsilon_end <= trials[i].hp.epsilon_start);
        if (i > 0) CHECK(trials[i - 1].score >= trials[i].score);
    }
    const auto again = hyperparameter_search(lib, base, space, 4, 5);
    for (std::size_t i = 0; i < trials.size(); ++i) {
        CHECK(again[i].index == trials[i].index);
        CHECK(again[i].score == trials[i].score);
    }
}

}  // TEST_SUITE

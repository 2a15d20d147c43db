#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "habsk/config_json.hpp"
#include "habsk/dqn.hpp"
#include "habsk/errors.hpp"

namespace habsk {

void SearchSpace::validate() const {
    if (!(lr_min > 0.0 && lr_min <= lr_max && lr_max < 1.0))
        throw ConfigError("search learning-rate range needs 0 < lr_min <= lr_max < 1");
    if (!(epsilon_start_min <= epsilon_start_max && epsilon_start_min >= 0.0 && epsilon_start_max <= 1.0))
        throw ConfigError("search epsilon_start range must lie in [0, 1] with min <= max");
    if (!(epsilon_end_min <= epsilon_end_max && epsilon_end_min >= 0.0 && epsilon_end_max <= 1.0))
        throw ConfigError("search epsilon_end range must lie in [0, 1] with min <= max");
}

namespace {

double draw(Rng& rng, double lo, double hi) { return lo == hi ? lo : rng.uniform(lo, hi); }

json trial_json(const TrialResult& t, std::uint64_t seed) {
    return {{"index", t.index},
            {"seed", seed},
            {"ok", t.ok},
            {"score", t.ok ? json(t.score) : json(nullptr)},
            {"error", t.error},
            {"hyperparameters", to_json(t.hp)}};
}

}  // namespace

std::vector<TrialResult> hyperparameter_search(const GridLibrary& library, const TrainerConfig& base,
                                               const SearchSpace& space, std::size_t budget, std::uint64_t seed,
                                               const std::optional<std::filesystem::path>& out_dir) {
    if (budget < 1) throw ConfigError("search budget must be >= 1");
    space.validate();
    if (out_dir) std::filesystem::create_directories(*out_dir);

    std::vector<TrialResult> trials;
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < budget; ++i) {
        Rng rng(substream_seed(seed, i));
        TrialResult t;
        t.index = i;
        t.hp = base.hp;
        t.hp.learning_rate = std::exp(draw(rng, std::log(space.lr_min), std::log(space.lr_max)));
        t.hp.epsilon_start = draw(rng, space.epsilon_start_min, space.epsilon_start_max);
        t.hp.epsilon_end = std::min(draw(rng, space.epsilon_end_min, space.epsilon_end_max), t.hp.epsilon_start);
        const std::uint64_t trial_seed = rng.next_u64();
        seeds.push_back(trial_seed);

        TrainerConfig cfg = base;
        cfg.hp = t.hp;
        cfg.seed = trial_seed;
        cfg.checkpoint_dir.reset();
        try {
            DqnTrainer trainer(library, cfg);
            trainer.run();
            t.curve = trainer.learning_curve();
            t.score = t.curve.empty() ? 0.0 : t.curve.back().twr50;
            t.ok = true;
        } catch (const Error& e) {
            t.ok = false;
            t.error = e.what();
        }
        if (out_dir) {
            std::ofstream os(*out_dir / fmt::format("trial_{:03}.json", i));
            os << trial_json(t, trial_seed).dump(2) << '\n';
        }
        trials.push_back(std::move(t));
    }

    std::stable_sort(trials.begin(), trials.end(), [](const TrialResult& a, const TrialResult& b) {
        if (a.ok != b.ok) return a.ok;
        return a.score > b.score;
    });
    if (out_dir) {
        json ranking = json::array();
        for (const auto& t : trials) ranking.push_back(trial_json(t, seeds[t.index]));
        std::ofstream os(*out_dir / "ranking.json");
        os << json{{"seed", seed}, {"budget", budget}, {"space", to_json(space)}, {"trials", ranking}}.dump(2) << '\n';
    }
    return trials;
}

}  // namespace habsk

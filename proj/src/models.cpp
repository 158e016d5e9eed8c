// File: models.cpp
// Description: Oracle and noisy model implementations.
#include "apm/models.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace apm {

namespace {

constexpr std::uint64_t kWorldNoiseTag = 0x776e6f697365ULL;   // "wnoise"
constexpr std::uint64_t kAffNoiseTag = 0x616e6f697365ULL;     // "anoise"
constexpr std::uint64_t kAffDetailTag = 0x616e6f69736532ULL;  // "anoise2"

void check_unit_interval(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

}  // namespace

NoisyWorldModel::NoisyWorldModel(const Simulator& sim, NoisyWorldParams params)
    : sim_(&sim), params_(params) {
    check_unit_interval(params_.corruption_rate, "corruption_rate");
}

auto NoisyWorldModel::do_predict(const State& s, const AbstractAction& a) -> State {
    State truth = sim_->step(s, a).next_state;
    Rng rng(derive_seed({kWorldNoiseTag, params_.seed, state_hash(s), action_hash(a)}));
    if (!rng.bernoulli(params_.corruption_rate)) return truth;

    // Teleport one uncovered block to a uniformly chosen empty cell.  Picking
    // an uncovered block keeps stacks intact, and an empty destination keeps
    // cells conflict-free, so corrupted predictions are still valid states.
    std::vector<std::size_t> movable;
    for (std::size_t i = 0; i < truth.blocks.size(); ++i)
        if (truth.clear_top(truth.blocks[i])) movable.push_back(i);
    if (movable.empty()) return truth;

    std::set<GridPos> occupied;
    for (const auto& b : truth.blocks) occupied.insert(b.pos);
    std::vector<GridPos> free_cells;
    for (int x = 0; x < truth.width; ++x)
        for (int y = 0; y < truth.height; ++y)
            if (!occupied.contains({x, y})) free_cells.push_back({x, y});
    if (free_cells.empty()) return truth;  // fully packed grid: nowhere to teleport

    auto& victim = truth.blocks[movable[rng.next_below(movable.size())]];
    victim.pos = free_cells[rng.next_below(free_cells.size())];
    victim.level = 0;
    truth.normalize();
    return truth;
}

NoisyAffordanceModel::NoisyAffordanceModel(const Simulator& sim, NoisyAffordanceParams params)
    : sim_(&sim), params_(params) {
    check_unit_interval(params_.accuracy, "accuracy");
    check_unit_interval(params_.drop_rate, "drop_rate");
    check_unit_interval(params_.spurious_rate, "spurious_rate");
}

auto NoisyAffordanceModel::do_afforded(const State& s, int /*m*/)
    -> std::vector<AbstractAction> {
    auto truth = sim_->oracle_affordances(s);
    // The accuracy coin deliberately ignores m and the corruption detail
    // stream: states answered correctly at accuracy a stay correct at any
    // accuracy a' > a.
    Rng coin(derive_seed({kAffNoiseTag, params_.seed, state_hash(s)}));
    if (coin.next_double() < params_.accuracy) return truth;

    Rng rng(derive_seed({kAffDetailTag, params_.seed, state_hash(s)}));
    std::vector<AbstractAction> out;
    for (const auto& a : truth)
        if (!rng.bernoulli(params_.drop_rate)) out.push_back(a);
    if (params_.spurious_rate > 0.0) {
        std::set<AbstractAction> truth_set(truth.begin(), truth.end());
        for (const auto& a : sim_->candidate_actions(s)) {
            if (truth_set.contains(a)) continue;
            if (rng.bernoulli(params_.spurious_rate)) out.push_back(a);
        }
        std::sort(out.begin(), out.end());  // restore canonical order
    }
    return out;
}

}  // namespace apm

// File: search.hpp
// Description: Monte Carlo tree search with uniform-random descent, optional
// affordance-restricted expansion, random rollouts, and an online evaluation
// loop that commits to modelled successful trajectories and replans when
// they diverge from the real environment.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "apm/blocksim.hpp"
#include "apm/models.hpp"

namespace apm {

struct SearchConfig {
    int num_simulations = 4;
    int max_depth = 10;           // rollout horizon measured from the root
    double terminal_reward = kTerminalReward;
    bool use_affordances = true;
    int affordance_request = 8;   // m: cap on actions requested per node
    bool affordance_restricted_rollouts = false;
    std::uint64_t rollout_seed = 0;
};

struct SearchNode {
    State state;
    double node_score = 0.0;  // reward of `state` under the true reward model
    int depth = 0;
    long long visits = 0;
    double value_sum = 0.0;  // sum of returns observed from this node onward
    bool actions_initialized = false;
    std::vector<AbstractAction> untried;
    std::vector<AbstractAction> child_actions;  // parallel to `children`
    std::vector<std::unique_ptr<SearchNode>> children;

    auto mean_value() const -> double {
        return visits > 0 ? value_sum / static_cast<double>(visits) : 0.0;
    }
};

struct SearchMetrics {
    double mc_score = 0.0;               // best simulation return observed
    double avg_accumulated_reward = 0.0; // mean simulation return
    double avg_leaf_score = 0.0;         // mean node_score over leaves
    double avg_tree_score = 0.0;         // mean node_score over all nodes
    double simulations_used = 0.0;
    double model_calls = 0.0;
    double affordance_calls = 0.0;
};

struct SearchResult {
    std::optional<AbstractAction> best_action;
    SearchMetrics metrics;
    std::unique_ptr<SearchNode> tree;
    std::vector<double> simulation_returns;
    // Action sequence of the simulation that observed the terminal reward,
    // from the root to the terminal state (tree edges followed by rollout
    // actions).  Empty when no simulation that passed through a tree child
    // reached a terminal state.
    std::vector<AbstractAction> terminal_plan;
};

struct EvalReport {
    bool completed = false;
    int steps_used = 0;  // steps consumed; equals the budget when exhausted
    double online_cumulative_reward = 0.0;
};

struct OnlineEvaluation {
    EvalReport report;
    SearchMetrics mean_step_metrics;   // per-step metrics averaged over steps
    double total_model_calls = 0.0;       // summed over steps
    double total_affordance_calls = 0.0;  // summed over steps
    double best_mc_score = 0.0;           // max per-step mc_score
};

// Actions available for expanding/rolling out from `s`.  In affordance mode:
// the first m afforded actions when `restricted`, otherwise the simulator's
// candidate set (rollouts are not affordance-restricted by default).  Without
// affordances the search faces the unrestricted color × cell action space.
auto available_actions(const State& s, const Simulator& sim, AffordanceModel* affordances,
                       const SearchConfig& cfg, bool restricted)
    -> std::vector<AbstractAction>;

// Random rollout from `s` for at most `depth_remaining` steps; returns the
// accumulated reward Σ reward(s_i) including reward(s) itself.  Stops early
// on terminal states or when no actions are available.  `hit_terminal` and
// `model_calls` report what happened.  When `actions_out` is non-null the
// applied actions are appended to it (including the terminal-reaching one).
auto rollout(const State& s, const Simulator& sim, WorldModel& world,
             AffordanceModel* affordances, const SearchConfig& cfg, int depth_remaining,
             Rng& rng, bool& hit_terminal, long long& model_calls,
             long long& affordance_calls,
             std::vector<AbstractAction>* actions_out = nullptr) -> double;

// Run Monte Carlo search from `root_state`.  Each simulation descends the
// tree by uniform-random child selection, expands one untried action chosen
// uniformly at random, rolls out from the new child, and backs up the
// undiscounted return.  Search stops early once a simulation observes the
// terminal reward.  best_action is the root child with the highest mean
// value; ties break toward the canonically smallest action.
auto run_search(const State& root_state, const Simulator& sim, WorldModel& world,
                AffordanceModel* affordances, const SearchConfig& cfg, Rng& rng)
    -> SearchResult;

// Tree-shape statistics plus simulation-return aggregates.  With no recorded
// returns the score fields fall back to the root's node_score.
auto compute_metrics(const SearchNode& tree, std::span<const double> simulation_returns = {})
    -> SearchMetrics;

// Structural fingerprint of a search tree (states, actions, visit counts,
// value sums); byte-stable across runs for determinism checks.
auto tree_signature(const SearchNode& tree) -> std::uint64_t;

// Online evaluation: run run_search from the current real state and execute
// best_action in the true simulator.  When a search models a trajectory that
// reaches the terminal reward, the evaluation commits to that trajectory and
// executes its remaining actions without further searches (testing whether
// the modelled successful trajectory matches the real environment); if the
// plan runs out without real completion, planning resumes from the current
// state.  At most the task's max_steps environment steps are taken.
auto evaluate_online(const State& start, const Simulator& sim, WorldModel& world,
                     AffordanceModel* affordances, const SearchConfig& cfg)
    -> OnlineEvaluation;

}  // namespace apm

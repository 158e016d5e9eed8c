// File: search.cpp
// Description: Monte Carlo search implementation.
#include "apm/search.hpp"

#include <algorithm>
#include <bit>

namespace apm {

namespace {

constexpr std::uint64_t kOnlineStepTag = 0x6f6e6c696e65ULL;  // "online"

struct TreeStats {
    long long nodes = 0;
    double score_sum = 0.0;
    long long leaves = 0;
    double leaf_score_sum = 0.0;
};

void accumulate_tree(const SearchNode& node, TreeStats& stats) {
    ++stats.nodes;
    stats.score_sum += node.node_score;
    if (node.children.empty()) {
        ++stats.leaves;
        stats.leaf_score_sum += node.node_score;
    }
    for (const auto& child : node.children) accumulate_tree(*child, stats);
}

}  // namespace

auto available_actions(const State& s, const Simulator& sim, AffordanceModel* affordances,
                       const SearchConfig& cfg, bool restricted)
    -> std::vector<AbstractAction> {
    if (cfg.use_affordances) {
        if (restricted && affordances != nullptr)
            return affordances->afforded(s, cfg.affordance_request);
        // Rollouts in affordance mode stay on the curated candidate set; only
        // tree expansion is affordance-restricted.
        return sim.candidate_actions(s);
    }
    // Without an affordance filter the search faces every possible
    // state-action pair.
    return sim.all_actions(s);
}

auto rollout(const State& s, const Simulator& sim, WorldModel& world,
             AffordanceModel* affordances, const SearchConfig& cfg, int depth_remaining,
             Rng& rng, bool& hit_terminal, long long& model_calls,
             long long& affordance_calls, std::vector<AbstractAction>* actions_out)
    -> double {
    double total = sim.reward(s);
    hit_terminal = total >= cfg.terminal_reward;
    if (hit_terminal) return total;

    const bool restricted = cfg.use_affordances && cfg.affordance_restricted_rollouts;
    State cur = s;
    for (int d = 0; d < depth_remaining; ++d) {
        auto actions = available_actions(cur, sim, affordances, cfg, restricted);
        if (restricted && affordances != nullptr) ++affordance_calls;
        if (actions.empty()) break;
        const auto& a = actions[rng.next_below(actions.size())];
        cur = world.predict_next(cur, a);
        ++model_calls;
        if (actions_out != nullptr) actions_out->push_back(a);
        const double r = sim.reward(cur);
        total += r;
        if (r >= cfg.terminal_reward) {
            hit_terminal = true;
            break;
        }
    }
    return total;
}

auto run_search(const State& root_state, const Simulator& sim, WorldModel& world,
                AffordanceModel* affordances, const SearchConfig& cfg, Rng& rng)
    -> SearchResult {
    SearchResult result;
    result.tree = std::make_unique<SearchNode>();
    SearchNode* root = result.tree.get();
    root->state = root_state;
    root->node_score = sim.reward(root_state);
    root->depth = 0;

    long long model_calls = 0;
    long long affordance_calls = 0;

    if (root->node_score < cfg.terminal_reward) {
        bool stop = false;
        for (int i = 0; i < cfg.num_simulations && !stop; ++i) {
            // Descend by uniform-random child choice until a node still has
            // untried actions (or is a dead end).
            std::vector<SearchNode*> path{root};
            std::vector<AbstractAction> edge_actions;
            SearchNode* node = root;
            while (true) {
                if (!node->actions_initialized) {
                    node->untried = available_actions(node->state, sim, affordances, cfg,
                                                      cfg.use_affordances);
                    if (cfg.use_affordances && affordances != nullptr) ++affordance_calls;
                    node->actions_initialized = true;
                }
                if (!node->untried.empty() || node->children.empty()) break;
                const auto idx = rng.next_below(node->children.size());
                edge_actions.push_back(node->child_actions[idx]);
                node = node->children[idx].get();
                path.push_back(node);
            }

            bool terminal_hit = false;
            double ret = 0.0;
            std::vector<AbstractAction> rollout_actions;
            if (node->untried.empty()) {
                // Dead end (no afforded actions): evaluate the leaf in place.
                ret = rollout(node->state, sim, world, affordances, cfg,
                              std::max(0, cfg.max_depth - node->depth), rng, terminal_hit,
                              model_calls, affordance_calls, &rollout_actions);
            } else {
                const auto pick = rng.next_below(node->untried.size());
                const AbstractAction action =
                    node->untried[static_cast<std::size_t>(pick)];
                node->untried.erase(node->untried.begin() +
                                    static_cast<std::ptrdiff_t>(pick));

                auto child = std::make_unique<SearchNode>();
                child->state = world.predict_next(node->state, action);
                ++model_calls;
                child->node_score = sim.reward(child->state);
                child->depth = node->depth + 1;
                SearchNode* child_ptr = child.get();
                node->child_actions.push_back(action);
                node->children.push_back(std::move(child));
                path.push_back(child_ptr);
                edge_actions.push_back(action);

                ret = rollout(child_ptr->state, sim, world, affordances, cfg,
                              std::max(0, cfg.max_depth - child_ptr->depth), rng,
                              terminal_hit, model_calls, affordance_calls,
                              &rollout_actions);
            }

            // Back up undiscounted returns: each ancestor observes its own
            // node score plus the return continuing below it.
            double value = ret;
            for (auto i = static_cast<std::ptrdiff_t>(path.size()) - 1; i >= 0; --i) {
                path[static_cast<std::size_t>(i)]->visits += 1;
                path[static_cast<std::size_t>(i)]->value_sum += value;
                if (i > 0)
                    value += path[static_cast<std::size_t>(i) - 1]->node_score;
            }
            result.simulation_returns.push_back(value);
            if (terminal_hit) {
                stop = true;
                // Record the modelled terminal trajectory when it runs through
                // at least one tree child (its first action is a root action).
                if (!edge_actions.empty()) {
                    result.terminal_plan = std::move(edge_actions);
                    result.terminal_plan.insert(result.terminal_plan.end(),
                                                rollout_actions.begin(),
                                                rollout_actions.end());
                }
            }
        }
    }

    result.metrics = compute_metrics(*root, result.simulation_returns);
    result.metrics.model_calls = static_cast<double>(model_calls);
    result.metrics.affordance_calls = static_cast<double>(affordance_calls);

    // Best root action by mean backed-up value; ties break toward the
    // canonically smallest action.
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < root->children.size(); ++i) {
        if (!best) {
            best = i;
            continue;
        }
        const double vi = root->children[i]->mean_value();
        const double vb = root->children[*best]->mean_value();
        if (vi > vb || (vi == vb && root->child_actions[i] < root->child_actions[*best]))
            best = i;
    }
    if (best) result.best_action = root->child_actions[*best];
    return result;
}

auto compute_metrics(const SearchNode& tree, std::span<const double> simulation_returns)
    -> SearchMetrics {
    SearchMetrics m;
    TreeStats stats;
    accumulate_tree(tree, stats);
    m.avg_tree_score = stats.score_sum / static_cast<double>(stats.nodes);
    m.avg_leaf_score = stats.leaf_score_sum / static_cast<double>(stats.leaves);
    m.simulations_used = static_cast<double>(simulation_returns.size());
    if (simulation_returns.empty()) {
        m.mc_score = tree.node_score;
        m.avg_accumulated_reward = tree.node_score;
    } else {
        m.mc_score = *std::max_element(simulation_returns.begin(), simulation_returns.end());
        double sum = 0.0;
        for (double r : simulation_returns) sum += r;
        m.avg_accumulated_reward = sum / static_cast<double>(simulation_returns.size());
    }
    return m;
}

auto tree_signature(const SearchNode& tree) -> std::uint64_t {
    std::uint64_t h = state_hash(tree.state);
    h = mix_u64(h, std::bit_cast<std::uint64_t>(tree.node_score));
    h = mix_u64(h, static_cast<std::uint64_t>(tree.visits));
    h = mix_u64(h, std::bit_cast<std::uint64_t>(tree.value_sum));
    h = mix_u64(h, tree.children.size());
    for (std::size_t i = 0; i < tree.children.size(); ++i) {
        h = mix_u64(h, action_hash(tree.child_actions[i]));
        h = mix_u64(h, tree_signature(*tree.children[i]));
    }
    return h;
}

auto evaluate_online(const State& start, const Simulator& sim, WorldModel& world,
                     AffordanceModel* affordances, const SearchConfig& cfg)
    -> OnlineEvaluation {
    OnlineEvaluation out;
    State cur = start;
    if (sim.is_terminal(cur)) {
        out.report.completed = true;
        return out;
    }

    std::vector<SearchMetrics> per_step;
    std::vector<AbstractAction> plan;
    std::size_t plan_next = 0;
    const int budget = sim.config().max_steps;
    for (int step = 1; step <= budget; ++step) {
        std::optional<AbstractAction> act;
        if (plan_next < plan.size()) {
            // Committed to a modelled terminal trajectory: execute it without
            // further searches.
            act = plan[plan_next++];
        } else {
            Rng rng(derive_seed(
                {kOnlineStepTag, cfg.rollout_seed, static_cast<std::uint64_t>(step)}));
            auto res = run_search(cur, sim, world, affordances, cfg, rng);
            per_step.push_back(res.metrics);
            if (!res.terminal_plan.empty()) {
                plan = std::move(res.terminal_plan);
                plan_next = 1;
                act = plan.front();
            } else {
                act = res.best_action;
            }
        }

        StepResult sr;
        if (act) {
            sr = sim.step(cur, *act);
        } else {
            sr = {cur, sim.reward(cur), sim.is_terminal(cur)};
        }
        cur = sr.next_state;
        out.report.online_cumulative_reward += sr.reward;
        out.report.steps_used = step;
        if (sr.done) {
            out.report.completed = true;
            break;
        }
    }

    const auto n = static_cast<double>(per_step.size());
    for (const auto& m : per_step) {
        out.mean_step_metrics.mc_score += m.mc_score / n;
        out.mean_step_metrics.avg_accumulated_reward += m.avg_accumulated_reward / n;
        out.mean_step_metrics.avg_leaf_score += m.avg_leaf_score / n;
        out.mean_step_metrics.avg_tree_score += m.avg_tree_score / n;
        out.mean_step_metrics.simulations_used += m.simulations_used / n;
        out.mean_step_metrics.model_calls += m.model_calls / n;
        out.mean_step_metrics.affordance_calls += m.affordance_calls / n;
        out.total_model_calls += m.model_calls;
        out.total_affordance_calls += m.affordance_calls;
    }
    if (!per_step.empty()) {
        out.best_mc_score = per_step.front().mc_score;
        for (const auto& m : per_step)
            out.best_mc_score = std::max(out.best_mc_score, m.mc_score);
    }
    return out;
}

}  // namespace apm

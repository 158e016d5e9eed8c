// File: blocksim.hpp
// Description: Discrete seedable blocks-world environment: states, abstract
// move actions, shaped rewards, ground-truth affordances, and a line-oriented
// text serialization used as the prompt format for language-model backends.
#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/rng.hpp"

namespace apm {

inline constexpr double kTerminalReward = 10.0;

struct GridPos {
    int x = 0;
    int y = 0;
    auto operator<=>(const GridPos&) const = default;
};

// One block.  `level` is the stack height: 0 rests on the table, 1 sits on a
// level-0 block at the same cell, and so on.
struct Block {
    std::string color;
    GridPos pos;
    int level = 0;
    auto operator<=>(const Block&) const = default;
};

// A high-level action: move the block of a given color so that it lands at
// `target` (on the table, or on top of whatever stack occupies the cell).
struct AbstractAction {
    std::string color;
    GridPos target;
    auto operator<=>(const AbstractAction&) const = default;
};

struct State {
    int width = 10;
    int height = 10;
    std::vector<Block> blocks;  // kept sorted by color (colors are unique)

    // Restore the canonical ordering after direct edits.
    void normalize();
    auto find(const std::string& color) const -> const Block*;
    auto blocks_at(GridPos p) const -> std::vector<const Block*>;  // bottom-up
    auto top_level_at(GridPos p) const -> int;  // -1 when the cell is empty
    // True when nothing rests on top of `b`.
    auto clear_top(const Block& b) const -> bool;
    auto in_bounds(GridPos p) const -> bool;
    auto hash() const -> std::uint64_t;
    auto operator==(const State& other) const -> bool = default;
};

struct StepResult {
    State next_state;
    double reward = 0.0;
    bool done = false;
};

struct TaskConfig {
    int num_blocks = 3;
    int width = 10;
    int height = 10;
    double close_threshold = 2.0;
    int max_steps = 10;
    std::uint64_t seed = 0;
};

// Invalid task parameterisations (too many blocks, palette exhausted, ...).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent serialized state text.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Deterministic ground-truth environment.  All methods are const and pure;
// randomness only enters through explicit seeds.
class Simulator {
  public:
    explicit Simulator(TaskConfig cfg);

    auto config() const -> const TaskConfig& { return cfg_; }

    // Sample an initial state: blocks with distinct colors on distinct cells,
    // all at level 0.  Identical (config, seed) pairs yield identical states.
    auto init_state(std::uint64_t seed) const -> State;
    auto init_state() const -> State { return init_state(cfg_.seed); }

    // Total transition function: invalid actions (unknown color, covered
    // block, out-of-bounds target) leave the state unchanged.
    auto step(const State& s, const AbstractAction& a) const -> StepResult;

    // Shaped reward of a state: the terminal bonus when every pairwise block
    // distance is within close_threshold, otherwise the negated mean pairwise
    // Euclidean distance normalized by the grid diagonal.
    auto reward(const State& s) const -> double;
    auto is_terminal(const State& s) const -> bool;

    // All target cells worth considering: block positions, their clipped
    // 8-neighbourhoods, and the four grid corners (deduplicated, sorted).
    auto candidate_targets(const State& s) const -> std::vector<GridPos>;

    // Every color present crossed with every candidate target, in canonical
    // (color, target) order.  Superset of the afforded set.
    auto candidate_actions(const State& s) const -> std::vector<AbstractAction>;

    // The unrestricted action space: every color present crossed with every
    // in-bounds cell, in canonical order.  This is what a search without an
    // affordance filter has to contend with.
    auto all_actions(const State& s) const -> std::vector<AbstractAction>;

    // Ground-truth afforded actions: movable (uncovered) colors crossed with
    // all candidate targets, in canonical order.
    auto oracle_affordances(const State& s) const -> std::vector<AbstractAction>;

  private:
    TaskConfig cfg_;
};

// Stable 64-bit hashes used for seed derivation keyed on states/actions.
auto state_hash(const State& s) -> std::uint64_t;
auto action_hash(const AbstractAction& a) -> std::uint64_t;

// Human/LLM-readable text form:
//   workspace <W> <H>
//   <color> block at (x, y), height h, clear
//   <color> block at (x, y), height h, under <color-above>
// Blocks are listed in canonical color order; parse() is the exact inverse on
// valid states and raises ParseError (naming the offending line) otherwise.
auto serialize_state_text(const State& s) -> std::string;
auto parse_state_text(const std::string& text) -> State;

// "move <color> block to (x, y)"
auto action_to_text(const AbstractAction& a) -> std::string;

// Alphabetical color palette used for initial state construction.
auto color_palette() -> const std::vector<std::string>&;

}  // namespace apm

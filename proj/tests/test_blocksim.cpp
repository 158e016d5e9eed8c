// File: test_blocksim.cpp
// Description: Unit tests for the blocks-world environment: state mechanics,
// transition semantics, rewards, action sets, serialization, and hashing.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "apm/blocksim.hpp"

using namespace apm;

namespace {

auto make_state(std::vector<Block> blocks, int w = 10, int h = 10) -> State {
    State s;
    s.width = w;
    s.height = h;
    s.blocks = std::move(blocks);
    s.normalize();
    return s;
}

const TaskConfig kDefault{};

}  // namespace

TEST_CASE("task config defaults") {
    CHECK(kDefault.num_blocks == 3);
    CHECK(kDefault.width == 10);
    CHECK(kDefault.height == 10);
    CHECK(kDefault.close_threshold == doctest::Approx(2.0));
    CHECK(kDefault.max_steps == 10);
    CHECK(kTerminalReward == doctest::Approx(10.0));
}

TEST_CASE("simulator rejects invalid configurations") {
    CHECK_THROWS_AS(Simulator(TaskConfig{1, 10, 10, 2.0, 10, 0}), ConfigError);
    CHECK_THROWS_AS(Simulator(TaskConfig{3, 0, 10, 2.0, 10, 0}), ConfigError);
    CHECK_THROWS_AS(Simulator(TaskConfig{3, 10, -1, 2.0, 10, 0}), ConfigError);
    CHECK_THROWS_AS(Simulator(TaskConfig{26, 5, 5, 2.0, 10, 0}), ConfigError);  // 26 > 25 cells
    CHECK_THROWS_AS(Simulator(TaskConfig{37, 100, 100, 2.0, 10, 0}), ConfigError);  // palette
    CHECK_THROWS_AS(Simulator(TaskConfig{3, 10, 10, 0.0, 10, 0}), ConfigError);
    CHECK_THROWS_AS(Simulator(TaskConfig{3, 10, 10, 2.0, 0, 0}), ConfigError);
    CHECK_NOTHROW(Simulator(TaskConfig{}));
}

TEST_CASE("init_state is deterministic per seed and well-formed") {
    Simulator sim(kDefault);
    const auto a = sim.init_state(123);
    const auto b = sim.init_state(123);
    CHECK(a == b);
    CHECK(a.blocks.size() == 3);

    std::set<std::string> colors;
    std::set<std::pair<int, int>> cells;
    for (const auto& blk : a.blocks) {
        CHECK(blk.level == 0);
        CHECK(a.in_bounds(blk.pos));
        colors.insert(blk.color);
        cells.insert({blk.pos.x, blk.pos.y});
    }
    CHECK(colors.size() == 3);  // distinct colors
    CHECK(cells.size() == 3);   // distinct cells
    // Canonical color order, drawn from the front of the palette.
    CHECK(std::is_sorted(a.blocks.begin(), a.blocks.end(),
                         [](const Block& x, const Block& y) { return x.color < y.color; }));
    CHECK(a.blocks[0].color == "amber");
    CHECK(a.blocks[1].color == "aqua");
    CHECK(a.blocks[2].color == "beige");

    CHECK(sim.init_state(124) != a);

    // Pinned layout so cross-platform drift is caught immediately.
    const auto s5 = sim.init_state(5);
    CHECK(s5.blocks[0].pos == GridPos{7, 1});
    CHECK(s5.blocks[1].pos == GridPos{1, 6});
    CHECK(s5.blocks[2].pos == GridPos{4, 2});
}

TEST_CASE("init_state fills a fully packed grid") {
    Simulator sim(TaskConfig{4, 2, 2, 2.0, 10, 0});
    const auto s = sim.init_state(9);
    std::set<std::pair<int, int>> cells;
    for (const auto& blk : s.blocks) cells.insert({blk.pos.x, blk.pos.y});
    CHECK(cells.size() == 4);
}

TEST_CASE("step moves a clear block to an empty cell") {
    Simulator sim(kDefault);
    const auto s = make_state({{"amber", {0, 0}, 0}, {"aqua", {9, 9}, 0}});
    const auto res = sim.step(s, {"amber", {5, 5}});
    CHECK(res.next_state.find("amber")->pos == GridPos{5, 5});
    CHECK(res.next_state.find("amber")->level == 0);
    CHECK(res.next_state.find("aqua")->pos == GridPos{9, 9});
    CHECK_FALSE(res.done);
}

TEST_CASE("step stacks onto an occupied cell") {
    Simulator sim(kDefault);
    const auto s = make_state({{"amber", {2, 2}, 0}, {"aqua", {7, 7}, 0}});
    const auto res = sim.step(s, {"aqua", {2, 2}});
    const Block* aqua = res.next_state.find("aqua");
    CHECK(aqua->pos == GridPos{2, 2});
    CHECK(aqua->level == 1);
    // Stacked blocks share a cell: pairwise distance zero means terminal here.
    CHECK(res.done);
    CHECK(res.reward == doctest::Approx(10.0));

    // Stacking a third block lands on level 2.
    const auto s3 = make_state(
        {{"amber", {2, 2}, 0}, {"aqua", {2, 2}, 1}, {"beige", {8, 8}, 0}});
    const auto res3 = sim.step(s3, {"beige", {2, 2}});
    CHECK(res3.next_state.find("beige")->level == 2);
}

TEST_CASE("step unstacks the top block and frees the one below") {
    Simulator sim(kDefault);
    const auto s = make_state({{"amber", {2, 2}, 0}, {"aqua", {2, 2}, 1}});
    CHECK_FALSE(s.clear_top(*s.find("amber")));
    CHECK(s.clear_top(*s.find("aqua")));

    const auto res = sim.step(s, {"aqua", {6, 6}});
    CHECK(res.next_state.find("aqua")->pos == GridPos{6, 6});
    CHECK(res.next_state.find("aqua")->level == 0);
    CHECK(res.next_state.clear_top(*res.next_state.find("amber")));
}

TEST_CASE("invalid actions leave the state unchanged") {
    Simulator sim(kDefault);
    const auto s = make_state({{"amber", {2, 2}, 0}, {"aqua", {2, 2}, 1}, {"beige", {8, 8}, 0}});
    const double r = sim.reward(s);

    SUBCASE("unknown color") {
        const auto res = sim.step(s, {"magenta", {4, 4}});
        CHECK(res.next_state == s);
        CHECK(res.reward == doctest::Approx(r));
    }
    SUBCASE("covered block cannot move") {
        const auto res = sim.step(s, {"amber", {4, 4}});
        CHECK(res.next_state == s);
    }
    SUBCASE("out-of-bounds target") {
        CHECK(sim.step(s, {"beige", {10, 0}}).next_state == s);
        CHECK(sim.step(s, {"beige", {0, -1}}).next_state == s);
    }
    SUBCASE("moving a block onto its own cell is a wellformed no-op") {
        const auto res = sim.step(s, {"beige", {8, 8}});
        CHECK(res.next_state == s);
    }
}

TEST_CASE("terminal requires every pairwise distance within the threshold") {
    Simulator sim(kDefault);
    // (0,0)-(1,1)-(2,2): the extreme pair is 2*sqrt(2) > 2.
    CHECK_FALSE(sim.is_terminal(
        make_state({{"amber", {0, 0}, 0}, {"aqua", {1, 1}, 0}, {"beige", {2, 2}, 0}})));
    // (0,0)-(1,1)-(1,0): all pairs within sqrt(2).
    CHECK(sim.is_terminal(
        make_state({{"amber", {0, 0}, 0}, {"aqua", {1, 1}, 0}, {"beige", {1, 0}, 0}})));
    // Exactly at the threshold counts as close.
    CHECK(sim.is_terminal(make_state({{"amber", {0, 0}, 0}, {"aqua", {2, 0}, 0}})));
    // A stack is mutually at distance zero.
    CHECK(sim.is_terminal(make_state(
        {{"amber", {5, 5}, 0}, {"aqua", {5, 5}, 1}, {"beige", {5, 5}, 2}})));
}

TEST_CASE("reward is the terminal bonus or negated mean pairwise distance") {
    Simulator sim(kDefault);
    CHECK(sim.reward(make_state({{"amber", {0, 0}, 0}, {"aqua", {1, 1}, 0}})) ==
          doctest::Approx(10.0));

    // Two blocks at distance 5 on a 10x10 grid: -5 / hypot(9, 9).
    const double diag = std::hypot(9.0, 9.0);
    CHECK(sim.reward(make_state({{"amber", {0, 0}, 0}, {"aqua", {3, 4}, 0}})) ==
          doctest::Approx(-5.0 / diag));

    // Three blocks: mean over the three pairs.
    const auto s = make_state({{"amber", {7, 1}, 0}, {"aqua", {1, 6}, 0}, {"beige", {4, 2}, 0}});
    const double mean =
        (std::hypot(6, 5) + std::hypot(3, 1) + std::hypot(3, 4)) / 3.0;
    CHECK(sim.reward(s) == doctest::Approx(-mean / diag));
    CHECK(sim.reward(s) == doctest::Approx(-0.41830675526022804));
}

TEST_CASE("candidate targets are block cells, clipped neighborhoods, and corners") {
    Simulator sim(kDefault);
    const auto s = make_state({{"amber", {0, 0}, 0}, {"aqua", {5, 5}, 0}});
    const auto targets = sim.candidate_targets(s);

    // Corner block (0,0) contributes its clipped neighborhood of 4 cells; the
    // interior block contributes 9; corners add 3 new cells.
    CHECK(targets.size() == 16);
    CHECK(std::is_sorted(targets.begin(), targets.end()));
    CHECK(std::adjacent_find(targets.begin(), targets.end()) == targets.end());

    const std::set<GridPos> tset(targets.begin(), targets.end());
    for (const GridPos p : {GridPos{0, 0}, GridPos{5, 5}, GridPos{0, 1}, GridPos{1, 1},
                            GridPos{4, 4}, GridPos{6, 6}, GridPos{9, 0}, GridPos{0, 9},
                            GridPos{9, 9}})
        CHECK(tset.contains(p));
    CHECK_FALSE(tset.contains(GridPos{3, 3}));
    for (const auto& p : targets) CHECK(s.in_bounds(p));
}

TEST_CASE("candidate actions cross colors with candidate targets in canonical order") {
    Simulator sim(kDefault);
    const auto s = make_state({{"aqua", {5, 5}, 0}, {"amber", {0, 0}, 0}});
    const auto actions = sim.candidate_actions(s);
    const auto targets = sim.candidate_targets(s);
    REQUIRE(actions.size() == 2 * targets.size());
    CHECK(std::is_sorted(actions.begin(), actions.end()));
    CHECK(actions.front().color == "amber");
    CHECK(actions.front().target == targets.front());
    CHECK(actions.back().color == "aqua");
    CHECK(actions.back().target == targets.back());
}

TEST_CASE("all_actions is the unrestricted color by cell cross product") {
    Simulator sim(kDefault);
    const auto s = make_state({{"amber", {0, 0}, 0}, {"aqua", {5, 5}, 0}, {"beige", {9, 9}, 0}});
    const auto actions = sim.all_actions(s);
    REQUIRE(actions.size() == 300);
    CHECK(std::is_sorted(actions.begin(), actions.end()));
    CHECK(actions.front() == AbstractAction{"amber", {0, 0}});
    CHECK(actions.back() == AbstractAction{"beige", {9, 9}});
    const std::set<AbstractAction> unique(actions.begin(), actions.end());
    CHECK(unique.size() == actions.size());
    // Strict superset of the curated candidate set.
    for (const auto& a : sim.candidate_actions(s)) CHECK(unique.contains(a));
}

TEST_CASE("oracle affordances exclude covered blocks") {
    Simulator sim(kDefault);
    const auto s = make_state(
        {{"amber", {2, 2}, 0}, {"aqua", {2, 2}, 1}, {"beige", {8, 8}, 0}});
    const auto aff = sim.oracle_affordances(s);
    const auto targets = sim.candidate_targets(s);
    CHECK(aff.size() == 2 * targets.size());  // amber is covered
    for (const auto& a : aff) CHECK(a.color != "amber");
    CHECK(std::is_sorted(aff.begin(), aff.end()));

    // With no stacks every block is afforded.
    const auto flat = make_state({{"amber", {0, 0}, 0}, {"aqua", {5, 5}, 0}});
    CHECK(sim.oracle_affordances(flat).size() == sim.candidate_actions(flat).size());
}

TEST_CASE("state text serialization round-trips and is pinned") {
    const auto s = make_state(
        {{"amber", {1, 2}, 0}, {"aqua", {3, 4}, 0}, {"beige", {3, 4}, 1}});
    const std::string expected =
        "workspace 10 10\n"
        "amber block at (1, 2), height 0, clear\n"
        "aqua block at (3, 4), height 0, under beige\n"
        "beige block at (3, 4), height 1, clear\n";
    CHECK(serialize_state_text(s) == expected);
    CHECK(parse_state_text(expected) == s);

    Simulator sim(kDefault);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto st = sim.init_state(seed);
        CHECK(parse_state_text(serialize_state_text(st)) == st);
    }
    // Blank lines and surrounding whitespace are tolerated.
    CHECK(parse_state_text("\nworkspace 10 10\n\n  amber block at (1, 2), height 0, clear\n")
              .blocks.size() == 1);
}

TEST_CASE("state text parser rejects malformed input with line diagnostics") {
    CHECK_THROWS_AS(parse_state_text(""), ParseError);
    CHECK_THROWS_AS(parse_state_text("workspace 10 10\n"), ParseError);  // no blocks
    CHECK_THROWS_AS(parse_state_text("hello\n"), ParseError);
    CHECK_THROWS_AS(parse_state_text("workspace 0 10\namber block at (0, 0), height 0, clear\n"),
                    ParseError);
    CHECK_THROWS_AS(parse_state_text("workspace 10 10\namber frisbee at (0, 0)\n"), ParseError);
    // Out-of-bounds position.
    CHECK_THROWS_AS(parse_state_text("workspace 4 4\namber block at (4, 0), height 0, clear\n"),
                    ParseError);
    // Duplicate color.
    CHECK_THROWS_AS(parse_state_text("workspace 10 10\n"
                                     "amber block at (0, 0), height 0, clear\n"
                                     "amber block at (1, 1), height 0, clear\n"),
                    ParseError);
    // Overlapping (cell, level) slot.
    CHECK_THROWS_AS(parse_state_text("workspace 10 10\n"
                                     "amber block at (0, 0), height 0, clear\n"
                                     "aqua block at (0, 0), height 0, clear\n"),
                    ParseError);
    // Floating block.
    CHECK_THROWS_AS(parse_state_text("workspace 10 10\n"
                                     "amber block at (0, 0), height 1, clear\n"),
                    ParseError);
    // Marked clear but covered.
    CHECK_THROWS_AS(parse_state_text("workspace 10 10\n"
                                     "amber block at (0, 0), height 0, clear\n"
                                     "aqua block at (0, 0), height 1, clear\n"),
                    ParseError);
    // Marked under the wrong color.
    CHECK_THROWS_AS(parse_state_text("workspace 10 10\n"
                                     "amber block at (0, 0), height 0, under beige\n"
                                     "aqua block at (0, 0), height 1, clear\n"),
                    ParseError);
    // The diagnostic names the offending line.
    try {
        parse_state_text("workspace 10 10\nnonsense\n");
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("action text is pinned") {
    CHECK(action_to_text({"amber", {0, 9}}) == "move amber block to (0, 9)");
}

TEST_CASE("hashes are stable goldens and sensitive to content") {
    const auto s = make_state(
        {{"amber", {1, 2}, 0}, {"aqua", {3, 4}, 0}, {"beige", {3, 4}, 1}});
    CHECK(state_hash(s) == 17011866272619183589ULL);
    CHECK(s.hash() == state_hash(s));
    CHECK(action_hash({"amber", {0, 9}}) == 8118587210993588980ULL);

    auto moved = s;
    moved.blocks[0].pos = {1, 3};
    CHECK(state_hash(moved) != state_hash(s));
    CHECK(action_hash({"amber", {9, 0}}) != action_hash({"amber", {0, 9}}));
}

TEST_CASE("state helpers report stacks correctly") {
    const auto s = make_state(
        {{"amber", {2, 2}, 0}, {"aqua", {2, 2}, 1}, {"beige", {8, 8}, 0}});
    CHECK(s.top_level_at({2, 2}) == 1);
    CHECK(s.top_level_at({8, 8}) == 0);
    CHECK(s.top_level_at({0, 0}) == -1);
    const auto at = s.blocks_at({2, 2});
    REQUIRE(at.size() == 2);
    CHECK(at[0]->color == "amber");  // bottom-up order
    CHECK(at[1]->color == "aqua");
    CHECK(s.find("plum") == nullptr);
}

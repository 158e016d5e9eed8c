// File: blocksim.cpp
// Description: Blocks-world environment implementation.
#include "apm/blocksim.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

namespace apm {

namespace {

constexpr std::uint64_t kInitStreamTag = 0x626c6f636b696e69ULL;  // "blockini"

auto hash_string(std::uint64_t h, const std::string& s) -> std::uint64_t {
    h = mix_u64(h, s.size());
    for (unsigned char c : s) h = mix_u64(h, c);
    return h;
}

}  // namespace

void State::normalize() {
    std::sort(blocks.begin(), blocks.end(),
              [](const Block& a, const Block& b) { return a.color < b.color; });
}

auto State::find(const std::string& color) const -> const Block* {
    for (const auto& b : blocks)
        if (b.color == color) return &b;
    return nullptr;
}

auto State::blocks_at(GridPos p) const -> std::vector<const Block*> {
    std::vector<const Block*> out;
    for (const auto& b : blocks)
        if (b.pos == p) out.push_back(&b);
    std::sort(out.begin(), out.end(),
              [](const Block* a, const Block* b) { return a->level < b->level; });
    return out;
}

auto State::top_level_at(GridPos p) const -> int {
    int top = -1;
    for (const auto& b : blocks)
        if (b.pos == p) top = std::max(top, b.level);
    return top;
}

auto State::clear_top(const Block& b) const -> bool {
    for (const auto& other : blocks)
        if (other.pos == b.pos && other.level == b.level + 1) return false;
    return true;
}

auto State::in_bounds(GridPos p) const -> bool {
    return p.x >= 0 && p.x < width && p.y >= 0 && p.y < height;
}

auto State::hash() const -> std::uint64_t { return state_hash(*this); }

auto state_hash(const State& s) -> std::uint64_t {
    std::uint64_t h = 0x73746174ULL;  // "stat"
    h = mix_u64(h, static_cast<std::uint64_t>(s.width));
    h = mix_u64(h, static_cast<std::uint64_t>(s.height));
    for (const auto& b : s.blocks) {
        h = hash_string(h, b.color);
        h = mix_u64(h, static_cast<std::uint64_t>(b.pos.x));
        h = mix_u64(h, static_cast<std::uint64_t>(b.pos.y));
        h = mix_u64(h, static_cast<std::uint64_t>(b.level));
    }
    return h;
}

auto action_hash(const AbstractAction& a) -> std::uint64_t {
    std::uint64_t h = 0x61637475ULL;  // "actu"
    h = hash_string(h, a.color);
    h = mix_u64(h, static_cast<std::uint64_t>(a.target.x));
    h = mix_u64(h, static_cast<std::uint64_t>(a.target.y));
    return h;
}

auto color_palette() -> const std::vector<std::string>& {
    static const std::vector<std::string> palette = {
        "amber",  "aqua",   "beige",  "black",    "blue",   "brown",
        "coral",  "crimson", "cyan",  "gold",     "gray",   "green",
        "indigo", "ivory",  "khaki",  "lavender", "lime",   "magenta",
        "maroon", "mint",   "navy",   "olive",    "orange", "peach",
        "pink",   "plum",   "purple", "red",      "rose",   "salmon",
        "silver", "tan",    "teal",   "violet",   "white",  "yellow"};
    return palette;
}

Simulator::Simulator(TaskConfig cfg) : cfg_(cfg) {
    if (cfg_.width < 1 || cfg_.height < 1)
        throw ConfigError("workspace dimensions must be positive");
    if (cfg_.num_blocks < 2)
        throw ConfigError("num_blocks must be at least 2");
    const long long capacity =
        static_cast<long long>(cfg_.width) * static_cast<long long>(cfg_.height);
    if (cfg_.num_blocks > capacity) {
        std::ostringstream msg;
        msg << "num_blocks " << cfg_.num_blocks << " exceeds grid capacity " << capacity
            << " (" << cfg_.width << "x" << cfg_.height << ")";
        throw ConfigError(msg.str());
    }
    if (static_cast<std::size_t>(cfg_.num_blocks) > color_palette().size()) {
        std::ostringstream msg;
        msg << "num_blocks " << cfg_.num_blocks << " exceeds color palette size "
            << color_palette().size();
        throw ConfigError(msg.str());
    }
    if (!(cfg_.close_threshold > 0.0))
        throw ConfigError("close_threshold must be positive");
    if (cfg_.max_steps < 1)
        throw ConfigError("max_steps must be at least 1");
}

auto Simulator::init_state(std::uint64_t seed) const -> State {
    State s;
    s.width = cfg_.width;
    s.height = cfg_.height;

    std::vector<GridPos> cells;
    cells.reserve(static_cast<std::size_t>(cfg_.width) * cfg_.height);
    for (int x = 0; x < cfg_.width; ++x)
        for (int y = 0; y < cfg_.height; ++y) cells.push_back({x, y});

    Rng rng(derive_seed({kInitStreamTag, seed}));
    // Partial Fisher-Yates: the first num_blocks entries become the block
    // cells; bounded work even when the grid is fully packed.
    for (int i = 0; i < cfg_.num_blocks; ++i) {
        const auto j = i + rng.next_below(cells.size() - static_cast<std::size_t>(i));
        std::swap(cells[static_cast<std::size_t>(i)], cells[j]);
    }
    for (int i = 0; i < cfg_.num_blocks; ++i)
        s.blocks.push_back({color_palette()[static_cast<std::size_t>(i)],
                            cells[static_cast<std::size_t>(i)], 0});
    s.normalize();
    return s;
}

auto Simulator::step(const State& s, const AbstractAction& a) const -> StepResult {
    const Block* b = s.find(a.color);
    const bool valid = b != nullptr && s.clear_top(*b) && s.in_bounds(a.target);

    State next = s;
    if (valid) {
        auto it = std::find_if(next.blocks.begin(), next.blocks.end(),
                               [&](const Block& blk) { return blk.color == a.color; });
        next.blocks.erase(it);
        const int level = next.top_level_at(a.target) + 1;
        next.blocks.push_back({a.color, a.target, level});
        next.normalize();
    }
    const double r = reward(next);
    return {std::move(next), r, r >= kTerminalReward};
}

auto Simulator::is_terminal(const State& s) const -> bool {
    for (std::size_t i = 0; i < s.blocks.size(); ++i)
        for (std::size_t j = i + 1; j < s.blocks.size(); ++j) {
            const double dx = s.blocks[i].pos.x - s.blocks[j].pos.x;
            const double dy = s.blocks[i].pos.y - s.blocks[j].pos.y;
            if (std::hypot(dx, dy) > cfg_.close_threshold) return false;
        }
    return true;
}

auto Simulator::reward(const State& s) const -> double {
    if (is_terminal(s)) return kTerminalReward;
    double sum = 0.0;
    long long pairs = 0;
    for (std::size_t i = 0; i < s.blocks.size(); ++i)
        for (std::size_t j = i + 1; j < s.blocks.size(); ++j) {
            const double dx = s.blocks[i].pos.x - s.blocks[j].pos.x;
            const double dy = s.blocks[i].pos.y - s.blocks[j].pos.y;
            sum += std::hypot(dx, dy);
            ++pairs;
        }
    const double mean = sum / static_cast<double>(pairs);
    const double diag = std::hypot(s.width - 1, s.height - 1);
    return -mean / diag;
}

auto Simulator::candidate_targets(const State& s) const -> std::vector<GridPos> {
    std::set<GridPos> targets;
    for (const auto& b : s.blocks) {
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
                const GridPos p{b.pos.x + dx, b.pos.y + dy};
                if (s.in_bounds(p)) targets.insert(p);
            }
    }
    targets.insert({0, 0});
    targets.insert({s.width - 1, 0});
    targets.insert({0, s.height - 1});
    targets.insert({s.width - 1, s.height - 1});
    return {targets.begin(), targets.end()};
}

auto Simulator::candidate_actions(const State& s) const -> std::vector<AbstractAction> {
    const auto targets = candidate_targets(s);
    std::vector<AbstractAction> out;
    out.reserve(s.blocks.size() * targets.size());
    for (const auto& b : s.blocks)  // blocks already in canonical color order
        for (const auto& t : targets) out.push_back({b.color, t});
    return out;
}

auto Simulator::all_actions(const State& s) const -> std::vector<AbstractAction> {
    std::vector<AbstractAction> out;
    out.reserve(s.blocks.size() * static_cast<std::size_t>(s.width) *
                static_cast<std::size_t>(s.height));
    for (const auto& b : s.blocks)  // blocks already in canonical color order
        for (int x = 0; x < s.width; ++x)
            for (int y = 0; y < s.height; ++y) out.push_back({b.color, {x, y}});
    return out;
}

auto Simulator::oracle_affordances(const State& s) const -> std::vector<AbstractAction> {
    const auto targets = candidate_targets(s);
    std::vector<AbstractAction> out;
    for (const auto& b : s.blocks) {
        if (!s.clear_top(b)) continue;
        for (const auto& t : targets) out.push_back({b.color, t});
    }
    return out;
}

auto serialize_state_text(const State& s) -> std::string {
    State canon = s;
    canon.normalize();
    std::ostringstream out;
    out << "workspace " << canon.width << " " << canon.height << "\n";
    for (const auto& b : canon.blocks) {
        out << b.color << " block at (" << b.pos.x << ", " << b.pos.y << "), height "
            << b.level << ", ";
        const Block* above = nullptr;
        for (const auto& other : canon.blocks)
            if (other.pos == b.pos && other.level == b.level + 1) above = &other;
        if (above == nullptr)
            out << "clear";
        else
            out << "under " << above->color;
        out << "\n";
    }
    return out.str();
}

auto parse_state_text(const std::string& text) -> State {
    static const std::regex header_re(R"(^\s*workspace\s+(\d+)\s+(\d+)\s*$)");
    static const std::regex block_re(
        R"(^\s*([a-z]+)\s+block\s+at\s+\((\d+)\s*,\s*(\d+)\)\s*,\s*height\s+(\d+)\s*,\s*(?:(clear)|under\s+([a-z]+))\s*$)");

    struct Entry {
        int line_no;
        Block block;
        bool clear;
        std::string above;
    };

    State s;
    std::vector<Entry> entries;
    bool saw_header = false;
    int line_no = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::smatch m;
        if (!saw_header) {
            if (!std::regex_match(line, m, header_re))
                throw ParseError("line " + std::to_string(line_no) +
                                 ": expected 'workspace <W> <H>', got: " + line);
            s.width = std::stoi(m[1]);
            s.height = std::stoi(m[2]);
            if (s.width < 1 || s.height < 1)
                throw ParseError("line " + std::to_string(line_no) +
                                 ": workspace dimensions must be positive");
            saw_header = true;
            continue;
        }
        if (!std::regex_match(line, m, block_re))
            throw ParseError("line " + std::to_string(line_no) +
                             ": unrecognized block syntax: " + line);
        Entry e;
        e.line_no = line_no;
        e.block.color = m[1];
        e.block.pos = {std::stoi(m[2]), std::stoi(m[3])};
        e.block.level = std::stoi(m[4]);
        e.clear = m[5].matched;
        if (m[6].matched) e.above = m[6];
        if (!s.in_bounds(e.block.pos))
            throw ParseError("line " + std::to_string(line_no) + ": position (" +
                             std::to_string(e.block.pos.x) + ", " +
                             std::to_string(e.block.pos.y) + ") outside " +
                             std::to_string(s.width) + "x" + std::to_string(s.height) +
                             " workspace");
        for (const auto& prev : entries)
            if (prev.block.color == e.block.color)
                throw ParseError("line " + std::to_string(line_no) + ": duplicate color '" +
                                 e.block.color + "'");
        entries.push_back(std::move(e));
    }
    if (!saw_header) throw ParseError("empty state text: missing workspace header");
    if (entries.empty()) throw ParseError("state text contains no block lines");

    // Structural checks: unique (cell, level) slots, no floating blocks, and
    // stacking annotations consistent with the reconstructed stacks.
    for (const auto& e : entries) {
        for (const auto& other : entries) {
            if (&e == &other) continue;
            if (e.block.pos == other.block.pos && e.block.level == other.block.level)
                throw ParseError("line " + std::to_string(e.line_no) +
                                 ": overlapping blocks '" + e.block.color + "' and '" +
                                 other.block.color + "'");
        }
        if (e.block.level > 0) {
            bool supported = false;
            for (const auto& other : entries)
                if (other.block.pos == e.block.pos && other.block.level == e.block.level - 1)
                    supported = true;
            if (!supported)
                throw ParseError("line " + std::to_string(e.line_no) + ": floating block '" +
                                 e.block.color + "' at height " +
                                 std::to_string(e.block.level));
        }
        const Entry* above = nullptr;
        for (const auto& other : entries)
            if (other.block.pos == e.block.pos && other.block.level == e.block.level + 1)
                above = &other;
        if (e.clear && above != nullptr)
            throw ParseError("line " + std::to_string(e.line_no) + ": block '" +
                             e.block.color + "' marked clear but '" + above->block.color +
                             "' sits on it");
        if (!e.clear) {
            if (above == nullptr || above->block.color != e.above)
                throw ParseError("line " + std::to_string(e.line_no) + ": block '" +
                                 e.block.color + "' marked under '" + e.above +
                                 "' which does not sit on it");
        }
    }

    for (const auto& e : entries) s.blocks.push_back(e.block);
    s.normalize();
    return s;
}

auto action_to_text(const AbstractAction& a) -> std::string {
    std::ostringstream out;
    out << "move " << a.color << " block to (" << a.target.x << ", " << a.target.y << ")";
    return out.str();
}

}  // namespace apm

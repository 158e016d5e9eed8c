// File: bridge.cpp
// Description: Completion-endpoint bridge implementation.
#include "apm/bridge.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace apm {

namespace {

using ordered_json = nlohmann::ordered_json;

auto default_few_shot() -> std::vector<FewShotExample> {
    // Deterministic worked examples covering table placement, stacking, and
    // unstacking, generated from the ground-truth simulator.
    Simulator sim(TaskConfig{3, 10, 10, 2.0, 10, 0});
    std::vector<FewShotExample> shots;

    const State s0 = sim.init_state(11);
    const AbstractAction a0{s0.blocks[0].color, {4, 4}};
    shots.push_back({serialize_state_text(s0), action_to_text(a0),
                     serialize_state_text(sim.step(s0, a0).next_state)});

    const State s1 = sim.init_state(12);
    const AbstractAction a1{s1.blocks[1].color, s1.blocks[0].pos};  // stack
    const State s1b = sim.step(s1, a1).next_state;
    shots.push_back({serialize_state_text(s1), action_to_text(a1),
                     serialize_state_text(s1b)});

    const AbstractAction a2{s1b.blocks[2].color, s1b.blocks[0].pos};  // stack higher
    const State s1c = sim.step(s1b, a2).next_state;
    shots.push_back({serialize_state_text(s1b), action_to_text(a2),
                     serialize_state_text(s1c)});

    const AbstractAction a3{a2.color, {0, 0}};  // unstack back to the table
    shots.push_back({serialize_state_text(s1c), action_to_text(a3),
                     serialize_state_text(sim.step(s1c, a3).next_state)});
    return shots;
}

void append_rules_and_examples(std::ostringstream& out, const PromptTemplate& tmpl) {
    out << "You control a robot arm over a gridded workspace of colored blocks.\n";
    out << "Placement intent rules:\n";
    for (std::size_t i = 0; i < tmpl.intent_rules.size(); ++i)
        out << (i + 1) << ". " << tmpl.intent_rules[i] << "\n";
    out << "\nWorked examples of state transitions:\n";
    for (std::size_t i = 0; i < tmpl.few_shot.size(); ++i) {
        const auto& shot = tmpl.few_shot[i];
        out << "Example " << (i + 1) << ":\nState:\n"
            << shot.state_text << "Action: " << shot.action_text << "\nNext state:\n"
            << shot.next_state_text << "\n";
    }
}

auto backoff_delay(const EndpointConfig& cfg, int attempt) -> std::chrono::milliseconds {
    return std::chrono::milliseconds(cfg.retry_backoff_ms * (1 << attempt));
}

}  // namespace

auto PromptTemplate::standard() -> PromptTemplate {
    PromptTemplate tmpl;
    tmpl.intent_rules = {
        "A block is movable only if that color is present in the current state and "
        "when nothing is on top of it.",
        "A block placement on x,y coordinates which has an existing block is valid if "
        "it exactly matches the coordinates of the existing block in the current state "
        "AND if the block color is present in the current state.",
        "A block placement on x,y coordinates which has an existing block is valid if "
        "it has sufficient overlap with the coordinates of the existing block in the "
        "current state AND if the block color is present in the current state.",
        "A block placement on x,y coordinates is valid if no other block is present in "
        "those coordinates."};
    tmpl.few_shot = default_few_shot();
    return tmpl;
}

auto build_affordance_prompt(const std::string& state_text, const PromptTemplate& tmpl,
                             int max_actions) -> std::string {
    std::ostringstream out;
    append_rules_and_examples(out, tmpl);
    out << "Current state:\n" << state_text;
    out << "List up to " << max_actions
        << " actions that are available right now, one per line, each formatted "
           "exactly as:\nmove <color> block to (x, y)\nActions:\n";
    return out.str();
}

auto build_dynamics_prompt(const std::string& state_text, const std::string& action_text,
                           const PromptTemplate& tmpl) -> std::string {
    std::ostringstream out;
    append_rules_and_examples(out, tmpl);
    out << "Current state:\n" << state_text;
    out << "Action: " << action_text << "\n";
    out << "Predict the state after this action. Respond with only the next state, "
           "formatted exactly like the examples.\nNext state:\n";
    return out.str();
}

auto complete(const EndpointConfig& cfg, const std::string& prompt) -> std::string {
    if (cfg.base_url.empty()) throw BridgeConfigError("base_url is empty");
    const char* token = std::getenv(cfg.auth_token_env.c_str());
    if (token == nullptr || *token == '\0')
        throw BridgeConfigError("environment variable " + cfg.auth_token_env +
                                " is not set; refusing to contact the endpoint");

    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
    client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);

    const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + token}};
    ordered_json body;
    body["model"] = cfg.model_name;
    body["prompt"] = prompt;
    body["max_tokens"] = 512;
    const std::string payload = body.dump();

    std::string last_failure;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(backoff_delay(cfg, attempt - 1));
        auto res = client.Post(cfg.completion_path, headers, payload, "application/json");
        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
            continue;  // retryable
        }
        if (res->status >= 500) {
            last_failure = "endpoint status " + std::to_string(res->status);
            continue;  // retryable
        }
        if (res->status < 200 || res->status >= 300)
            throw EndpointError("endpoint status " + std::to_string(res->status) + ": " +
                                res->body);
        try {
            const auto parsed = nlohmann::json::parse(res->body);
            if (!parsed.contains("completion") || !parsed["completion"].is_string())
                throw EndpointError("response lacks a string 'completion' field");
            return parsed["completion"].get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw EndpointError(std::string("malformed JSON response: ") + e.what());
        }
    }
    throw TransportError("request failed after " + std::to_string(cfg.max_retries + 1) +
                         " attempts; last failure: " + last_failure);
}

auto parse_actions(const std::string& text, const State& reference) -> ParsedActions {
    static const std::regex action_re(
        R"(^\s*(?:[-*]\s*)?move\s+([a-z]+)\s+block\s+to\s+\((\d+)\s*,\s*(\d+)\)\s*\.?\s*$)");

    ParsedActions out;
    std::set<AbstractAction> seen;
    std::istringstream in(text);
    std::string line;
    bool any_match = false;
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_match(line, m, action_re)) continue;
        any_match = true;
        AbstractAction a{m[1], {std::stoi(m[2]), std::stoi(m[3])}};
        if (reference.find(a.color) == nullptr || !reference.in_bounds(a.target)) {
            ++out.dropped;
            continue;
        }
        if (!seen.insert(a).second) continue;
        out.actions.push_back(std::move(a));
    }
    out.empty_parse = !any_match;
    return out;
}

auto parse_next_state(const std::string& text, const State& fallback) -> ParsedState {
    try {
        return {parse_state_text(text), false};
    } catch (const ParseError&) {
        // Chatter before the state block is common; retry from the header.
        const auto pos = text.find("workspace ");
        if (pos != std::string::npos && pos > 0) {
            try {
                return {parse_state_text(text.substr(pos)), false};
            } catch (const ParseError&) {
            }
        }
    }
    return {fallback, true};
}

void Transcript::record(const std::string& prompt, const std::string& response) {
    entries_.emplace(prompt, response);  // first response wins
}

auto Transcript::lookup(const std::string& prompt) const -> std::optional<std::string> {
    const auto it = entries_.find(prompt);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void Transcript::save(const std::string& path) const {
    ordered_json entries = ordered_json::array();
    for (const auto& [prompt, response] : entries_) {
        ordered_json e;
        e["prompt"] = prompt;
        e["response"] = response;
        entries.push_back(std::move(e));
    }
    ordered_json doc;
    doc["version"] = 1;
    doc["entries"] = std::move(entries);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open transcript for writing: " + path);
    out << doc.dump(2) << "\n";
}

auto Transcript::load(const std::string& path) -> Transcript {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open transcript: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed transcript " + path + ": " + e.what());
    }
    Transcript t;
    for (const auto& e : doc.at("entries"))
        t.record(e.at("prompt").get<std::string>(), e.at("response").get<std::string>());
    return t;
}

BridgeSession::BridgeSession(EndpointConfig cfg, std::shared_ptr<Transcript> record)
    : cfg_(std::move(cfg)), record_(std::move(record)) {
    if (cfg_.base_url.empty()) throw BridgeConfigError("base_url is empty");
    if (cfg_.max_in_flight < 1) throw BridgeConfigError("max_in_flight must be >= 1");
    gate_ = std::make_unique<std::counting_semaphore<>>(cfg_.max_in_flight);
}

BridgeSession::BridgeSession(std::shared_ptr<const Transcript> replay)
    : replay_(std::move(replay)) {
    if (replay_ == nullptr) throw BridgeConfigError("replay transcript is null");
}

auto BridgeSession::fetch(const std::string& prompt) -> std::string {
    if (replay_ != nullptr) {
        auto hit = replay_->lookup(prompt);
        if (!hit)
            throw TransportError("prompt not found in replay transcript (" +
                                 std::to_string(replay_->size()) + " entries)");
        std::lock_guard lock(mu_);
        ++stats_.replay_hits;
        return *hit;
    }

    gate_->acquire();
    std::string response;
    try {
        response = complete(cfg_, prompt);
    } catch (...) {
        gate_->release();
        throw;
    }
    gate_->release();

    std::lock_guard lock(mu_);
    ++stats_.requests;
    if (record_ != nullptr) record_->record(prompt, response);
    return response;
}

auto BridgeSession::stats() const -> BridgeStats {
    std::lock_guard lock(mu_);
    return stats_;
}

void BridgeSession::add_parse_fallback() {
    std::lock_guard lock(mu_);
    ++stats_.parse_fallbacks;
}

void BridgeSession::add_dropped_actions(int n) {
    std::lock_guard lock(mu_);
    stats_.dropped_actions += n;
}

void BridgeSession::add_empty_parse() {
    std::lock_guard lock(mu_);
    ++stats_.empty_parses;
}

LlmWorldModel::LlmWorldModel(std::shared_ptr<BridgeSession> session, PromptTemplate tmpl)
    : session_(std::move(session)), tmpl_(std::move(tmpl)) {}

auto LlmWorldModel::do_predict(const State& s, const AbstractAction& a) -> State {
    const auto prompt = build_dynamics_prompt(serialize_state_text(s), action_to_text(a), tmpl_);
    const auto response = session_->fetch(prompt);
    auto parsed = parse_next_state(response, s);
    if (parsed.fallback_used) session_->add_parse_fallback();
    return std::move(parsed.state);
}

LlmAffordanceModel::LlmAffordanceModel(std::shared_ptr<BridgeSession> session,
                                       PromptTemplate tmpl, const Simulator& sim)
    : session_(std::move(session)), tmpl_(std::move(tmpl)), sim_(&sim) {}

auto LlmAffordanceModel::do_afforded(const State& s, int m) -> std::vector<AbstractAction> {
    const auto prompt = build_affordance_prompt(serialize_state_text(s), tmpl_, m);
    const auto response = session_->fetch(prompt);
    auto parsed = parse_actions(response, s);
    if (parsed.dropped > 0) session_->add_dropped_actions(parsed.dropped);
    if (parsed.empty_parse) session_->add_empty_parse();
    if (parsed.actions.empty()) return sim_->candidate_actions(s);  // fallback
    return std::move(parsed.actions);
}

}  // namespace apm

// File: bridge.hpp
// Description: HTTP bridge exposing a text-completion endpoint as world and
// affordance models: prompt construction, response parsing with validity
// filtering and fallbacks, retrying client, and record/replay transcripts so
// experiments are reproducible without a live endpoint.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include "apm/models.hpp"

namespace apm {

struct EndpointConfig {
    std::string base_url = "http://127.0.0.1:8080";
    std::string completion_path = "/v1/complete";
    std::string model_name = "completion-model";
    std::string auth_token_env = "APM_LLM_TOKEN";  // env var holding the bearer token
    int timeout_ms = 30000;
    int max_retries = 2;         // retries after the first attempt, 5xx/transport only
    int retry_backoff_ms = 50;   // doubled per retry
    int max_in_flight = 4;       // bound on concurrent requests per model
};

// Endpoint misconfiguration detected before any network activity.
class BridgeConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Transport-level failure (connect/timeout) after retries were exhausted.
class TransportError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Endpoint answered but unusably (non-2xx status or malformed payload).
class EndpointError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct FewShotExample {
    std::string state_text;
    std::string action_text;
    std::string next_state_text;
};

// Prompt payload: task-agnostic placement-intent rules plus worked examples.
struct PromptTemplate {
    std::vector<std::string> intent_rules;
    std::vector<FewShotExample> few_shot;

    // Default rules and four deterministic worked examples.
    static auto standard() -> PromptTemplate;
};

// Deterministic prompt builders (identical inputs yield identical strings).
auto build_affordance_prompt(const std::string& state_text, const PromptTemplate& tmpl,
                             int max_actions) -> std::string;
auto build_dynamics_prompt(const std::string& state_text, const std::string& action_text,
                           const PromptTemplate& tmpl) -> std::string;

// One blocking completion request.  Reads the bearer token from
// cfg.auth_token_env (missing variable: BridgeConfigError before any I/O),
// POSTs {model, prompt, max_tokens} as JSON, retries transport failures and
// 5xx responses, and returns the "completion" field of the JSON response.
auto complete(const EndpointConfig& cfg, const std::string& prompt) -> std::string;

struct ParsedActions {
    std::vector<AbstractAction> actions;  // valid, deduplicated, response order
    int dropped = 0;                      // parsed lines rejected as invalid
    bool empty_parse = false;             // no line matched the action grammar
};

// Extract "move <color> block to (x, y)" lines; actions naming absent colors
// or out-of-bounds targets are dropped (counted), duplicates keep the first.
auto parse_actions(const std::string& text, const State& reference) -> ParsedActions;

struct ParsedState {
    State state;
    bool fallback_used = false;
};

// Parse a predicted next state; on malformed or inconsistent text returns
// `fallback` with the flag set.
auto parse_next_state(const std::string& text, const State& fallback) -> ParsedState;

// Prompt -> response map with JSON persistence.  Recording the same prompt
// twice keeps the first response (completions are deterministic per prompt).
class Transcript {
  public:
    void record(const std::string& prompt, const std::string& response);
    auto lookup(const std::string& prompt) const -> std::optional<std::string>;
    auto size() const -> std::size_t { return entries_.size(); }
    void save(const std::string& path) const;
    static auto load(const std::string& path) -> Transcript;

  private:
    std::map<std::string, std::string> entries_;
};

struct BridgeStats {
    long long requests = 0;
    long long replay_hits = 0;
    long long parse_fallbacks = 0;   // dynamics responses replaced by fallback
    long long dropped_actions = 0;   // invalid action lines rejected
    long long empty_parses = 0;      // affordance responses with no usable action
};

// Shared bridge plumbing: live HTTP with optional recording, or pure replay.
class BridgeSession {
  public:
    // Live session; `record` (optional) captures every prompt/response pair.
    BridgeSession(EndpointConfig cfg, std::shared_ptr<Transcript> record);
    // Replay session; lookups miss -> TransportError, no network is touched.
    explicit BridgeSession(std::shared_ptr<const Transcript> replay);

    auto fetch(const std::string& prompt) -> std::string;
    auto stats() const -> BridgeStats;
    void add_parse_fallback();
    void add_dropped_actions(int n);
    void add_empty_parse();
    auto is_replay() const -> bool { return replay_ != nullptr; }
    auto config() const -> const EndpointConfig& { return cfg_; }

  private:
    EndpointConfig cfg_;
    std::shared_ptr<Transcript> record_;
    std::shared_ptr<const Transcript> replay_;
    mutable std::mutex mu_;
    BridgeStats stats_;
    std::unique_ptr<std::counting_semaphore<>> gate_;  // caps concurrent requests
};

// World model answering predict_next via the completion endpoint.
class LlmWorldModel : public WorldModel {
  public:
    LlmWorldModel(std::shared_ptr<BridgeSession> session, PromptTemplate tmpl);

  protected:
    auto do_predict(const State& s, const AbstractAction& a) -> State override;

  private:
    std::shared_ptr<BridgeSession> session_;
    PromptTemplate tmpl_;
};

// Affordance model proposing actions via the completion endpoint; unusable
// responses fall back to the full candidate set.
class LlmAffordanceModel : public AffordanceModel {
  public:
    LlmAffordanceModel(std::shared_ptr<BridgeSession> session, PromptTemplate tmpl,
                       const Simulator& sim);

  protected:
    auto do_afforded(const State& s, int m) -> std::vector<AbstractAction> override;

  private:
    std::shared_ptr<BridgeSession> session_;
    PromptTemplate tmpl_;
    const Simulator* sim_;
};

}  // namespace apm

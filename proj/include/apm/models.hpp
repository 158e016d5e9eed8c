// File: models.hpp
// Description: Pluggable world-dynamics and affordance model interfaces with
// oracle (ground-truth) and seeded-noise implementations.  Every call is
// counted so experiment harnesses can report model usage.
#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

#include "apm/blocksim.hpp"

namespace apm {

// Predicts the next state for a (state, action) pair.  Thread-safe call
// counting; implementations must be safe for concurrent const-state use.
class WorldModel {
  public:
    virtual ~WorldModel() = default;

    auto predict_next(const State& s, const AbstractAction& a) -> State {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return do_predict(s, a);
    }

    auto calls() const -> long long { return calls_.load(std::memory_order_relaxed); }
    void reset_calls() { calls_.store(0, std::memory_order_relaxed); }

  protected:
    virtual auto do_predict(const State& s, const AbstractAction& a) -> State = 0;

  private:
    std::atomic<long long> calls_{0};
};

// Proposes up to m actions believed to be available in a state.
class AffordanceModel {
  public:
    virtual ~AffordanceModel() = default;

    auto afforded(const State& s, int m) -> std::vector<AbstractAction> {
        calls_.fetch_add(1, std::memory_order_relaxed);
        auto out = do_afforded(s, m);
        if (m >= 0 && out.size() > static_cast<std::size_t>(m))
            out.resize(static_cast<std::size_t>(m));
        return out;
    }

    auto calls() const -> long long { return calls_.load(std::memory_order_relaxed); }
    void reset_calls() { calls_.store(0, std::memory_order_relaxed); }

  protected:
    virtual auto do_afforded(const State& s, int m) -> std::vector<AbstractAction> = 0;

  private:
    std::atomic<long long> calls_{0};
};

// --- Oracle implementations -------------------------------------------------

class OracleWorldModel : public WorldModel {
  public:
    explicit OracleWorldModel(const Simulator& sim) : sim_(&sim) {}

  protected:
    auto do_predict(const State& s, const AbstractAction& a) -> State override {
        return sim_->step(s, a).next_state;
    }

  private:
    const Simulator* sim_;
};

class OracleAffordanceModel : public AffordanceModel {
  public:
    explicit OracleAffordanceModel(const Simulator& sim) : sim_(&sim) {}

  protected:
    auto do_afforded(const State& s, int /*m*/) -> std::vector<AbstractAction> override {
        return sim_->oracle_affordances(s);  // truncation happens in the base
    }

  private:
    const Simulator* sim_;
};

// --- Noisy implementations --------------------------------------------------

struct NoisyWorldParams {
    double corruption_rate = 0.0;  // probability a prediction is corrupted
    std::uint64_t seed = 0;
};

// Ground truth, except that with probability corruption_rate one uncovered
// block is teleported to a uniformly chosen empty cell.  The corruption draw
// is keyed on (seed, state, action) so repeated queries agree.
class NoisyWorldModel : public WorldModel {
  public:
    NoisyWorldModel(const Simulator& sim, NoisyWorldParams params);

  protected:
    auto do_predict(const State& s, const AbstractAction& a) -> State override;

  private:
    const Simulator* sim_;
    NoisyWorldParams params_;
};

struct NoisyAffordanceParams {
    double accuracy = 1.0;       // probability of reproducing the oracle list
    double drop_rate = 1.0;      // when corrupted: P(drop) per true action
    double spurious_rate = 0.0;  // when corrupted: P(inject) per non-afforded candidate
    std::uint64_t seed = 0;
};

// With probability `accuracy` returns the oracle affordances; otherwise
// returns a corrupted list that drops true actions and injects non-afforded
// candidates.  The accuracy coin is keyed on (seed, state) only, so raising
// the accuracy never turns a previously-correct query incorrect (the noise
// realisations at different accuracy levels are pathwise coupled).
class NoisyAffordanceModel : public AffordanceModel {
  public:
    NoisyAffordanceModel(const Simulator& sim, NoisyAffordanceParams params);

  protected:
    auto do_afforded(const State& s, int m) -> std::vector<AbstractAction> override;

  private:
    const Simulator* sim_;
    NoisyAffordanceParams params_;
};

}  // namespace apm

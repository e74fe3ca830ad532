#pragma once

/// @file task.hpp
/// @brief Randomized-rotation 2D target-approach task.
///
/// A task instance fixes a rotation of the observation frame. Each trial
/// places the agent at the origin and a target at unit distance in a random
/// direction; the agent has `steps_per_trial` moves of at most
/// 1/steps_per_trial each and is rewarded 1 - d at the final step.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "rng.hpp"

namespace nmlab {

using Vec2 = std::array<double, 2>;

inline constexpr int kDefaultStepsPerTrial = 10;
inline constexpr std::size_t kObservationSize = 6;

inline double norm(const Vec2& v) noexcept { return std::hypot(v[0], v[1]); }

/// Raised when a policy emits non-finite values. Evaluation code catches this
/// and scores the rest of the instance at the worst-case reward.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TaskInstance {
    double rotation_angle = 0.0;
    // Counter-clockwise: [[c, -s], [s, c]].
    double c = 1.0;
    double s = 0.0;

    static TaskInstance with_angle(double angle) noexcept {
        TaskInstance t;
        t.rotation_angle = angle;
        t.c = std::cos(angle);
        t.s = std::sin(angle);
        return t;
    }

    Vec2 rotate(const Vec2& v) const noexcept { return {c * v[0] - s * v[1], s * v[0] + c * v[1]}; }
    Vec2 unrotate(const Vec2& v) const noexcept { return {c * v[0] + s * v[1], -s * v[0] + c * v[1]}; }
};

struct TrialState {
    Vec2 agent_pos{0.0, 0.0};
    Vec2 target_pos{1.0, 0.0};
    int t = 0;
    int steps_per_trial = kDefaultStepsPerTrial;

    bool finished() const noexcept { return t >= steps_per_trial; }
    Vec2 world_relative() const noexcept {
        return {target_pos[0] - agent_pos[0], target_pos[1] - agent_pos[1]};
    }
};

/// Network input: (current_rel, prev_rel, prev_action), six scalars in that order.
struct Observation {
    Vec2 current_rel{};
    Vec2 prev_rel{};
    Vec2 prev_action{};

    std::array<double, kObservationSize> flatten() const noexcept {
        return {current_rel[0], current_rel[1], prev_rel[0], prev_rel[1], prev_action[0], prev_action[1]};
    }
};

inline TaskInstance create_instance(Stream& rng) noexcept {
    return TaskInstance::with_angle(rng.uniform(0.0, 2.0 * std::numbers::pi));
}

inline TrialState begin_trial(const TaskInstance& /*instance*/, Stream& rng,
                              int steps_per_trial = kDefaultStepsPerTrial) noexcept {
    TrialState st;
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    Vec2 t{std::cos(phi), std::sin(phi)};
    // Nudge the larger component until the target sits at distance 1 exactly.
    for (int k = 0; k < 8 && norm(t) != 1.0; ++k) {
        double& big = std::abs(t[0]) >= std::abs(t[1]) ? t[0] : t[1];
        big = std::nextafter(big, norm(t) > 1.0 ? 0.0 : std::copysign(2.0, big));
    }
    st.target_pos = t;
    st.steps_per_trial = steps_per_trial;
    return st;
}

inline Observation observe(const TrialState& trial, const TaskInstance& instance,
                           const Vec2& prev_obs, const Vec2& prev_action) noexcept {
    return Observation{instance.rotate(trial.world_relative()), prev_obs, prev_action};
}

/// Unit-circle rescale: a if |a| <= 1, else a / |a|.
inline Vec2 clip_to_unit_circle(const Vec2& a) noexcept {
    const double n = norm(a);
    if (n <= 1.0) return a;
    return {a[0] / n, a[1] / n};
}

/// Advance one step. Actions act in the world frame.
inline TrialState apply_action(TrialState trial, const Vec2& raw_action) {
    if (!std::isfinite(raw_action[0]) || !std::isfinite(raw_action[1])) {
        throw DivergenceError("non-finite action component");
    }
    if (trial.finished()) throw std::logic_error("apply_action on a finished trial");
    const Vec2 a = clip_to_unit_circle(raw_action);
    const double inv_t = 1.0 / trial.steps_per_trial;
    trial.agent_pos[0] += a[0] * inv_t;
    trial.agent_pos[1] += a[1] * inv_t;
    ++trial.t;
    return trial;
}

/// Terminal reward 1 - d. Zero before the final step.
inline double trial_reward(const TrialState& trial) noexcept {
    if (!trial.finished()) return 0.0;
    return 1.0 - norm(trial.world_relative());
}

} // namespace nmlab

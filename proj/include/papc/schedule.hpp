#pragma once

#include "papc/core.hpp"

#include <functional>
#include <string>

namespace papc {

/// Real sequence n -> a_n with its asymptotics: a_n -> limit, and when the limit is
/// zero a_n = O(n^{-decay}).
template <typename Scalar>
class Sequence {
 public:
  Sequence() : Sequence(constant(Scalar(1))) {}

  static Sequence constant(Scalar c) {
    return Sequence([c](Index) { return c; }, c, Scalar(0), "constant");
  }

  /// a_n = limit + (start - limit) / (n + 1)^power
  static Sequence polynomial(Scalar start, Scalar limit, Scalar power) {
    return Sequence(
        [start, limit, power](Index n) {
          return limit + (start - limit) / std::pow(Scalar(n + 1), power);
        },
        limit, power, "polynomial");
  }

  static Sequence custom(std::function<Scalar(Index)> fn, Scalar limit, Scalar decay) {
    return Sequence(std::move(fn), limit, decay, "custom");
  }

  Scalar operator()(Index n) const { return fn_(n); }
  Scalar limit() const { return limit_; }
  Scalar decay() const { return decay_; }
  const std::string& kind() const { return kind_; }

 private:
  Sequence(std::function<Scalar(Index)> fn, Scalar limit, Scalar decay, std::string kind)
      : fn_(std::move(fn)), limit_(limit), decay_(decay), kind_(std::move(kind)) {}

  std::function<Scalar(Index)> fn_;
  Scalar limit_;
  Scalar decay_;
  std::string kind_;
};

/// Step sizes gamma_n (primal), dual scalings tau_n with cap tau, and the
/// cocoercivity constant beta they are measured against.
template <typename Scalar>
struct Schedules {
  Sequence<Scalar> gamma;
  Sequence<Scalar> tau;
  Scalar tau_cap = 1;
  Scalar beta = 1;
};

enum class Regime { almost_sure, ergodic };

inline const char* to_string(Regime r) {
  return r == Regime::almost_sure ? "almost-sure" : "ergodic";
}

}  // namespace papc

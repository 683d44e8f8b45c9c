#pragma once

#include <array>
#include <string>

#include "gesture/common.hpp"

namespace gesture {

enum class StrokeSource { Hand, Automatic };

/// One labelled stroke phase.
struct StrokeRecord {
  std::string stroke_id;
  std::string clip_id;
  std::string dataset_id;
  double start_s = 0.0;
  double end_s = 0.0;
  StrokeSource source = StrokeSource::Hand;

  double duration() const { return end_s - start_s; }
  bool operator==(const StrokeRecord&) const = default;
};

/// The six parameters for one hand, SI units (swivel in degrees).
struct HandParams {
  double max_velocity = 0.0;          // m/s
  double initial_acceleration = 0.0;  // m/s^2
  double path_length = 0.0;           // m
  double major_axis_length = 0.0;     // m
  double arm_swivel = 0.0;            // degrees
  double hand_opening = 0.0;          // m

  double get(ParamKind p) const;
  void set(ParamKind p, double v);
  bool operator==(const HandParams&) const = default;
};

struct GestureParams {
  std::string stroke_id;
  std::array<HandParams, 2> hands;

  const HandParams& hand(Hand h) const { return hands[index(h)]; }
  HandParams& hand(Hand h) { return hands[index(h)]; }
  double value(ParamKind p, Hand h) const { return hand(h).get(p); }
  bool operator==(const GestureParams&) const = default;
};

}  // namespace gesture

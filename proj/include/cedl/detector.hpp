#pragma once

#include <string_view>

#include "cedl/encoder.hpp"
#include "cedl/objective.hpp"

namespace cedl {

enum class ObjectiveKind { Cedl, Bce, Svdd, Sad };

std::string_view to_string(ObjectiveKind kind) noexcept;
ObjectiveKind parse_objective_kind(std::string_view name);

/// Objectives that need labelled samples of both classes.
inline bool needs_both_classes(ObjectiveKind kind) noexcept { return kind != ObjectiveKind::Svdd; }

/// A trained encoder plus everything needed to score with it: distance-based
/// objectives score by distance to `objective.centre`, the BCE baseline by
/// its linear head.
struct Detector {
  EncoderModel encoder;
  ObjectiveKind kind = ObjectiveKind::Cedl;
  ObjectiveConfig objective;
  LinearHead head;  // used by ObjectiveKind::Bce only
};

}  // namespace cedl

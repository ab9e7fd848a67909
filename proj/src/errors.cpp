#include "latent_embed/errors.hpp"

namespace latent_embed {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::InvalidHyperparameter: return "invalid hyperparameter";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::InvariantViolation: return "invariant violation";
    case ErrorKind::Index: return "index error";
    case ErrorKind::Consistency: return "consistency error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::EmptyDataset: return "empty dataset";
    case ErrorKind::NonFiniteLoss: return "non-finite loss";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

ShapeError::ShapeError(std::string_view what, std::ptrdiff_t expected, std::ptrdiff_t actual)
    : Error(ErrorKind::Shape, std::string(what) + " (expected " + std::to_string(expected) +
                                  ", got " + std::to_string(actual) + ")"),
      expected_(expected),
      actual_(actual) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + message), line_(line) {}

NonFiniteLossError::NonFiniteLossError(long step, long long scene_id)
    : Error(ErrorKind::NonFiniteLoss,
            "at step " + std::to_string(step) + ", scene " + std::to_string(scene_id)),
      step_(step),
      scene_id_(scene_id) {}

}  // namespace latent_embed

#ifndef LATENT_EMBED_ERRORS_HPP
#define LATENT_EMBED_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace latent_embed {

/// Broad error categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  Shape,
  InvalidHyperparameter,
  Lookup,
  InvariantViolation,
  Index,
  Consistency,
  Parse,
  Schema,
  EmptyDataset,
  NonFiniteLoss,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Dimension mismatch; carries the expected and actual sizes.
class ShapeError : public Error {
public:
  ShapeError(std::string_view what, std::ptrdiff_t expected, std::ptrdiff_t actual);
  std::ptrdiff_t expected() const noexcept { return expected_; }
  std::ptrdiff_t actual() const noexcept { return actual_; }

private:
  std::ptrdiff_t expected_;
  std::ptrdiff_t actual_;
};

class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class NonFiniteLossError : public Error {
public:
  NonFiniteLossError(long step, long long scene_id);
  long step() const noexcept { return step_; }
  long long scene_id() const noexcept { return scene_id_; }

private:
  long step_;
  long long scene_id_;
};

}  // namespace latent_embed

#endif  // LATENT_EMBED_ERRORS_HPP

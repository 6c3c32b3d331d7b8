#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <utility>

#include "reviewkit/error.hpp"

namespace reviewkit {

/// Text-in/text-out generation engine. Implementations signal transport
/// failures with BackendError; a well-formed but unusable answer is returned
/// as-is and judged by the caller.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  /// `attempt` counts regenerations of the same request (0 on first call) so
  /// deterministic backends can vary their output on retry.
  virtual std::string complete(const std::string& prompt, int attempt) = 0;

  virtual std::string_view kind() const = 0;
};

/// Adapts a callable; used for mocks and ad-hoc integrations.
class FunctionBackend final : public GenerationBackend {
 public:
  using Fn = std::function<std::string(const std::string& prompt, int attempt)>;

  explicit FunctionBackend(Fn fn, std::string kind = "function")
      : fn_(std::move(fn)), kind_(std::move(kind)) {}

  std::string complete(const std::string& prompt, int attempt) override { return fn_(prompt, attempt); }
  std::string_view kind() const override { return kind_; }

 private:
  Fn fn_;
  std::string kind_;
};

}  // namespace reviewkit

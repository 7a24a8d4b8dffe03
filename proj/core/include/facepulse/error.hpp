#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fp {

enum class Errc {
  invalid_input,
  invalid_band,
  degenerate_face,
  empty_stack,
  undefined_kfd,
  degenerate_trace,
  empty_series,
  no_alignment,
  insufficient_data,
  format,
  config,
  data,
};

std::string_view to_string(Errc code) noexcept;

/// Library-wide exception. Every failure carries a machine-checkable code so
/// callers (tests, the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& message);

/// Prefixes an in-flight fp::Error with a stage label, keeping its code.
[[noreturn]] void rethrow_in_stage(const Error& e, std::string_view stage);

}  // namespace fp

#include "facepulse/error.hpp"

namespace fp {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_input: return "invalid-input";
    case Errc::invalid_band: return "invalid-band";
    case Errc::degenerate_face: return "degenerate-face";
    case Errc::empty_stack: return "empty-stack";
    case Errc::undefined_kfd: return "undefined-kfd";
    case Errc::degenerate_trace: return "degenerate-trace";
    case Errc::empty_series: return "empty-series";
    case Errc::no_alignment: return "no-alignment";
    case Errc::insufficient_data: return "insufficient-data";
    case Errc::format: return "format";
    case Errc::config: return "config";
    case Errc::data: return "data";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

void rethrow_in_stage(const Error& e, std::string_view stage) {
  std::string what = e.what();
  throw Error(e.code(), std::string(stage) + " stage: " + what.substr(what.find(": ") + 2));
}

}  // namespace fp

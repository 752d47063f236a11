#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace hopc {

enum class Errc {
  EmptySupport,
  NotSymmetric,
  NotPositiveSemidefinite,
  NotUnit,
  InvalidBasis,
  TooFewKeypoints,
  EmptySequence,
  BadSigma,
  TooFewSamples,
  DegenerateClass,
  DegenerateTraining,
  LengthMismatch,
  InvalidArgument,
  Parse,
  Io,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Raised by the binary readers. `offset` is the byte position where decoding
// failed; `frame` is set when the failure happened inside a frame record.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset,
             std::optional<std::size_t> frame = std::nullopt);

  std::uint64_t offset() const noexcept { return offset_; }
  std::optional<std::size_t> frame() const noexcept { return frame_; }

 private:
  std::uint64_t offset_;
  std::optional<std::size_t> frame_;
};

}  // namespace hopc

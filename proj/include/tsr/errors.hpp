#pragma once

#include <stdexcept>
#include <string>

namespace tsr {

// Base for every error raised by the library. The exit code is what the
// command-line tool returns when the error escapes a command.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what, int exit_code = 1)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

private:
  int exit_code_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error(what, 1) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what, 1) {}
};

struct SectorMismatch : Error {
  explicit SectorMismatch(const std::string& what) : Error(what, 1) {}
};

struct ResourceLimit : Error {
  explicit ResourceLimit(const std::string& what) : Error(what, 2) {}
};

struct NumericalFailure : Error {
  explicit NumericalFailure(const std::string& what) : Error(what, 2) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(what, 3) {}
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int numerical = 2;
inline constexpr int io = 3;
}  // namespace exit_code

}  // namespace tsr

#pragma once

#include <stdexcept>
#include <string>

namespace gcm {

// Base for every error the library raises. `kind()` is a stable one-word
// category used by the CLI in its single-line failure message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& w) : Error("dimension", w) {}
};
struct DataError : Error {
  explicit DataError(const std::string& w) : Error("data", w) {}
};
struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error("usage", w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io", w) {}
};
struct InternalError : Error {
  explicit InternalError(const std::string& w) : Error("internal", w) {}
};
struct TrainingError : Error {
  explicit TrainingError(const std::string& w) : Error("training", w) {}
};

}  // namespace gcm

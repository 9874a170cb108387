// Copyright 2026 The sepasr Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef SEPASR_COMMON_HPP
#define SEPASR_COMMON_HPP

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sepasr {

/// Error taxonomy shared by the whole toolkit. Every throw carries a kind so
/// the CLI can emit a structured one-line diagnostic and a matching exit code.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    Shape,       // tensor/model dimension mismatch
    Config,      // bad or unknown configuration key/value
    Io,          // file system / encoding problems
    Data,        // dataset contents violate a contract
    Graph,       // autodiff graph misuse
    Alignment,   // CTC label/frames infeasibility
    Checkpoint,  // serialized model problems
    Usage,       // bad call arguments
  };

  Error(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}

  Kind kind() const { return kind_; }

  const char* kind_name() const {
    switch (kind_) {
      case Kind::Shape: return "shape-error";
      case Kind::Config: return "config-error";
      case Kind::Io: return "io-error";
      case Kind::Data: return "data-error";
      case Kind::Graph: return "graph-error";
      case Kind::Alignment: return "alignment-error";
      case Kind::Checkpoint: return "checkpoint-error";
      case Kind::Usage: return "usage-error";
    }
    return "error";
  }

 private:
  Kind kind_;
};

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

template <typename... Args>
[[noreturn]] void fail(Error::Kind kind, Args&&... args) {
  throw Error(kind, cat(std::forward<Args>(args)...));
}

}  // namespace sepasr

#endif  // SEPASR_COMMON_HPP

// error.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MTLM_ERROR_HPP_
#define MTLM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mtlm {

// Error categories map onto CLI exit codes so callers can tell a bad
// config from bad data without parsing messages.
enum class ErrorKind {
  kConfig = 2,   // malformed or inconsistent run configuration
  kData = 3,     // unreadable or ill-formed input files
  kModel = 4,    // model training/loading failures
  kInternal = 5  // invariant violations; always a bug
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void ThrowConfig(const std::string& msg) {
  throw Error(ErrorKind::kConfig, msg);
}
[[noreturn]] inline void ThrowData(const std::string& msg) {
  throw Error(ErrorKind::kData, msg);
}
[[noreturn]] inline void ThrowModel(const std::string& msg) {
  throw Error(ErrorKind::kModel, msg);
}
[[noreturn]] inline void ThrowInternal(const std::string& msg) {
  throw Error(ErrorKind::kInternal, msg);
}

}  // namespace mtlm

#endif  // MTLM_ERROR_HPP_

// Copyright 2026 The Decontext Authors.
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

// Command-line front end. run_cli() is the whole program minus process
// setup, so tests can drive it with injected streams, environment and
// transport.

#ifndef DECONTEXT_CLI_HPP_
#define DECONTEXT_CLI_HPP_

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "decontext/gateway.hpp"

namespace decontext {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInput = 2,
  kExitBackend = 3,
};

struct CliEnvironment {
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  // Builds the transport for live and cached backends; also handed to the
  // mock backend, which never touches it.
  std::function<std::shared_ptr<Transport>()> transport;
  std::function<std::optional<std::string>(const std::string&)> getenv;

  // std::cout / std::cerr, HTTPS transport and the process environment.
  static CliEnvironment Process();
};

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, CliEnvironment& env);

}  // namespace decontext

#endif  // DECONTEXT_CLI_HPP_

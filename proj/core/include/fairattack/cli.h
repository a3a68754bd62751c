/*
 * Copyright 2026 The FairAttack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end:
//
//   fairattack run    --config FILE [--overrides k=v ...] [--output-dir DIR] [--seed S]
//   fairattack grid   --config FILE [--overrides k=v ...] [--output-dir DIR] [--seed S]
//   fairattack verify [--seed S]
//   fairattack report --input FILE_OR_DIR
//
// Exit status: 0 on success, 2 on a configuration or usage error, 1 on any
// other failure.

#ifndef FAIRATTACK_CLI_H_
#define FAIRATTACK_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace fairattack {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitConfigError = 2;

// `args` excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fairattack

#endif  // FAIRATTACK_CLI_H_

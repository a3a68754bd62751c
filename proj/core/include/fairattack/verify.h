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

// Self-check suite behind `fairattack verify`: compares the library against
// independent brute-force oracles on random small instances.

#ifndef FAIRATTACK_VERIFY_H_
#define FAIRATTACK_VERIFY_H_

#include <cstdint>
#include <string>
#include <vector>

namespace fairattack {

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<VerifyCheck> RunVerification(std::uint64_t seed = 7);

}  // namespace fairattack

#endif  // FAIRATTACK_VERIFY_H_

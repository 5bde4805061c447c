/* Copyright 2026 The HatCL Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HATCL_ERRORS_HPP_
#define HATCL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace hatcl {

// Shapes that do not conform for the requested operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// API misuse: unknown handles, missing task ids, mismatched payloads.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Operation not permitted in the current lifecycle state.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input values outside their documented domain (labels, config fields).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hatcl

#endif  // HATCL_ERRORS_HPP_

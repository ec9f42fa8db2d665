/*
 * Copyright 2026 The LabelDenoise Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LDN_ERROR_HPP_
#define LDN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace ldn {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes (input 2, format 3, numeric 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something that violates a precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

// A file or text record could not be decoded.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A computation produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

#define LDN_REQUIRE(cond, msg)                 \
  do {                                         \
    if (!(cond)) throw ::ldn::InputError(msg); \
  } while (false)

}  // namespace ldn

#endif  // LDN_ERROR_HPP_

// speechfeat/error.hpp

// Copyright 2026  speechfeat authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace speechfeat {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or an options struct does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Reading or writing a file failed at the operating-system level.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file exists but its content does not follow the expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A Features value (built in memory or loaded from disk) breaks its invariants.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure cannot proceed (unstable recursion, degenerate data).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Errors raised while decoding a WAV file; code() tells them apart.
class AudioError : public Error {
 public:
  enum class Code { kMissingFile, kMalformedHeader, kMultiChannel, kUnsupportedEncoding };

  AudioError(Code code, const std::string& what) : Error(what), code_(code) {}

  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

}  // namespace speechfeat

#pragma once

#include <stdexcept>
#include <string>

namespace duet {

// Base for every error raised by the library. Protocol code never swallows
// these; a session that sees one is aborted by its driver.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ModulusError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// One-time material (triples, masks, keys) consumed a second time.
class ReuseError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// A multi-party sub-protocol detected inconsistent shares or transcripts.
class ProtocolAbort : public Error {
 public:
  using Error::Error;
};

}  // namespace duet

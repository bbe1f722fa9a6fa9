#pragma once

#include <stdexcept>
#include <string>

namespace lpvh2 {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pitch too close to +-pi/2 for the Euler-rate map to be inverted.
class SingularAttitude : public Error {
 public:
  using Error::Error;
};

class NonSpdInertia : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ParameterOutOfRegion : public Error {
 public:
  using Error::Error;
};

/// A matrix required to be Hurwitz is not.
class UnstableMatrix : public Error {
 public:
  using Error::Error;
};

class IllConditioned : public Error {
 public:
  using Error::Error;
};

/// D != 0, so the H2 norm of the closed loop is unbounded.
class NonzeroFeedthrough : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The synthesis LMIs have no solution (certified by the SDP backend).
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// The SDP backend stopped without a certified answer.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// The Riccati oracle's regularity assumptions do not hold.
class RegularityViolated : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when unknown.
class FileFormatError : public Error {
 public:
  FileFormatError(std::string path, int line, const std::string& what)
      : Error(path + (line > 0 ? ":" + std::to_string(line) : std::string()) +
              ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

}  // namespace lpvh2

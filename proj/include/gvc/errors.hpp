#pragma once

#include <stdexcept>
#include <string>

namespace gvc {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// e fell below the guard threshold where a 1/e factor is needed.
class EccentricitySingularity : public Error {
public:
  using Error::Error;
};

/// |sin i| fell below the guard threshold (RAAN / argp rows divide by sin i).
class InclinationSingularity : public Error {
public:
  using Error::Error;
};

class IntegrationFailure : public Error {
public:
  using Error::Error;
};

class ResetNotPermitted : public Error {
public:
  using Error::Error;
};

class InfeasibleTerminalSet : public Error {
public:
  using Error::Error;
};

class InfeasibleInitialState : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace gvc

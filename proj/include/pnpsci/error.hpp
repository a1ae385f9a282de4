#pragma once

#include <stdexcept>
#include <string>

namespace pnpsci {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands disagree, or a buffer length does not match its dims.
class DimensionError : public Error
{
public:
  using Error::Error;
};

/// Some pixel has an all-zero mask column, so HH^T is singular.
class AssumptionViolation : public Error
{
public:
  using Error::Error;
};

class FormatError : public Error
{
public:
  using Error::Error;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

class PluginError : public Error
{
public:
  using Error::Error;
};

/// Failure inside a solver loop, tagged with the 1-based iteration it happened in.
class SolverError : public Error
{
public:
  SolverError(int iteration, const std::string& what)
    : Error("iteration " + std::to_string(iteration) + ": " + what), iteration_(iteration)
  {
  }

  int iteration() const noexcept { return iteration_; }

private:
  int iteration_;
};

} // namespace pnpsci

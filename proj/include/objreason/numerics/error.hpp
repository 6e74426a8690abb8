#pragma once

#include <stdexcept>
#include <string>

namespace objreason {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised while building a graph when operand extents disagree. Carries the
// op name and node index so the offending step can be located.
class ShapeError : public Error {
 public:
  ShapeError(std::string op, int node, const std::string& what)
      : Error(op + " (node " + std::to_string(node) + "): " + what),
        op_(std::move(op)),
        node_(node) {}

  const std::string& op() const { return op_; }
  int node() const { return node_; }

 private:
  std::string op_;
  int node_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace objreason

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tresca {

// Linear system lost positive definiteness or could not be solved accurately.
struct singular_system_error : std::runtime_error {
  int iteration;
  singular_system_error(const std::string& what, int it)
      : std::runtime_error(what), iteration(it) {}
};

// Contact iteration exhausted its solve budget; carries the increment history.
struct nonconvergence_error : std::runtime_error {
  std::vector<double> history;
  nonconvergence_error(const std::string& what, std::vector<double> h)
      : std::runtime_error(what), history(std::move(h)) {}
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tresca

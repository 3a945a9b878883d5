#include "fedhumor/errors.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace fedhumor {

ParseError::ParseError(std::size_t row, const std::string& message)
    : Error("row " + std::to_string(row) + ": " + message), row_(row), detail_(message) {}

DegeneratePriorError::DegeneratePriorError(std::size_t positives, std::size_t negatives,
                                           int client_id)
    : DomainError((client_id >= 0 ? "client " + std::to_string(client_id) + ": " : std::string{}) +
                  "degenerate class priors (positives=" + std::to_string(positives) +
                  ", negatives=" + std::to_string(negatives) + ")"),
      positives_(positives),
      negatives_(negatives),
      client_id_(client_id) {}

namespace {

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

bool quiet() {
  static const bool q = [] {
    const char* v = std::getenv("FEDHUMOR_QUIET");
    return v != nullptr && *v != '\0' && *v != '0';
  }();
  return q;
}

}  // namespace

void log_warning(const std::string& message) {
  if (quiet()) return;
  std::lock_guard lock(log_mutex());
  std::cerr << "[fedhumor] warning: " << message << '\n';
}

void log_info(const std::string& message) {
  if (quiet()) return;
  std::lock_guard lock(log_mutex());
  std::cerr << "[fedhumor] " << message << '\n';
}

}  // namespace fedhumor

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedhumor {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input. `row()` is the 1-based CSV record number (the header is row 1).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& message);
  std::size_t row() const noexcept { return row_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t row_;
  std::string detail_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// A client's labels contain a single class, so its empirical priors would hit 0 or 1.
class DegeneratePriorError : public DomainError {
 public:
  DegeneratePriorError(std::size_t positives, std::size_t negatives, int client_id = -1);

  std::size_t positives() const noexcept { return positives_; }
  std::size_t negatives() const noexcept { return negatives_; }
  int client_id() const noexcept { return client_id_; }

 private:
  std::size_t positives_;
  std::size_t negatives_;
  int client_id_;
};

void log_warning(const std::string& message);
void log_info(const std::string& message);

}  // namespace fedhumor

#ifndef CORPUSGEN_ERRORS_HPP
#define CORPUSGEN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace corpusgen {

// Base for all toolkit errors. CLI maps subtypes to exit codes:
// parse/validation -> 3, I/O -> 4, non-convergence -> 2.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Malformed input text (lexicon, template DSL, corpus records, config).
class ParseError : public Error {
public:
  ParseError(const std::string &msg, int line = -1)
      : Error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

// Contract violations: bad dimensions, unknown categories, empty inputs.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string &msg) : Error(msg) {}
};

class DimensionError : public ValidationError {
public:
  explicit DimensionError(const std::string &msg) : ValidationError(msg) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string &msg) : Error(msg) {}
};

// Training produced a non-finite loss (exploding gradients).
class TrainingDiverged : public Error {
public:
  explicit TrainingDiverged(const std::string &msg) : Error(msg) {}
};

// A bounded pipeline loop ran out of budget before its quality gate
// held. Artifacts of the last attempt are still persisted.
class NotConverged : public Error {
public:
  explicit NotConverged(const std::string &msg) : Error(msg) {}
};

} // namespace corpusgen

#endif

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbmc {

// Base for every error raised by the library. The CLI maps the concrete
// types onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// A test function or integrand produced a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t atom_index, double atom)
      : Error(what), atom_index_(atom_index), atom_(atom) {}
  std::size_t atom_index() const { return atom_index_; }
  double atom() const { return atom_; }

 private:
  std::size_t atom_index_;
  double atom_;
};

class InvalidLaw : public Error {
 public:
  using Error::Error;
};

// kappa has no zero on the scanned domain. Carries the smallest moment seen so
// callers can report how far from criticality the law is.
class NoMalthusianExponent : public Error {
 public:
  NoMalthusianExponent(const std::string& what, double min_moment, double argmin)
      : Error(what), min_moment_(min_moment), argmin_(argmin) {}
  double min_moment() const { return min_moment_; }
  double argmin() const { return argmin_; }

 private:
  double min_moment_;
  double argmin_;
};

class AmbiguousBracket : public Error {
 public:
  using Error::Error;
};

// The tilted step law does not integrate to one, i.e. the supplied p0 is not a
// root of kappa.
class InconsistentExponent : public Error {
 public:
  using Error::Error;
};

class CapExceeded : public Error {
 public:
  CapExceeded(const std::string& what, std::size_t nodes, double time_reached,
              std::size_t generation_reached)
      : Error(what),
        nodes_(nodes),
        time_reached_(time_reached),
        generation_reached_(generation_reached) {}
  std::size_t nodes() const { return nodes_; }
  double time_reached() const { return time_reached_; }
  std::size_t generation_reached() const { return generation_reached_; }

 private:
  std::size_t nodes_;
  double time_reached_;
  std::size_t generation_reached_;
};

class NotGrown : public Error {
 public:
  using Error::Error;
};

class InvalidLine : public Error {
 public:
  using Error::Error;
};

class UnsupportedRegime : public Error {
 public:
  using Error::Error;
};

class PathTooShort : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sbmc

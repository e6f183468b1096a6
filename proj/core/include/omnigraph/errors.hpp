#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace omnigraph {

/// Base class for all engine errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input document (JSON syntax, wrong field types). Carries a locus
/// such as "edges[3].retry_budget" or a byte offset for syntax errors.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::string locus)
      : Error(what + " (at " + locus + ")"), locus_(std::move(locus)) {}
  const std::string& locus() const { return locus_; }

private:
  std::string locus_;
};

/// Lookup of an unknown agent, edge, tool or reasoning function.
class LookupError : public Error {
public:
  using Error::Error;
};

/// Graph construction failure (e.g. a cycle in the primary flow).
class BuildError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent data rows (ratings CSV, ragged matrices).
/// `row` is 1-based including the header, 0 when not applicable.
class DataError : public Error {
public:
  explicit DataError(const std::string& what, std::size_t row = 0)
      : Error(row ? what + " (row " + std::to_string(row) + ")" : what), row_(row) {}
  std::size_t row() const { return row_; }

private:
  std::size_t row_;
};

/// Trace file corruption: sequence gaps, duplicates, or replay mismatches.
class TraceCorruption : public Error {
public:
  TraceCorruption(const std::string& what, std::uint64_t seq)
      : Error(what + " (seq " + std::to_string(seq) + ")"), seq_(seq) {}
  std::uint64_t seq() const { return seq_; }

private:
  std::uint64_t seq_;
};

/// Agent attempted to use a tool outside its authorized set.
class AuthorizationError : public Error {
public:
  using Error::Error;
};

/// Reasoning function returned a response that violates the protocol
/// (wrong producer, directives to non-successors, ...).
class ProtocolError : public Error {
public:
  using Error::Error;
};

/// Backend transport failure. Kinds are distinguishable so callers can tell
/// an unreachable endpoint from a timeout, a non-2xx status or bad framing.
class TransportError : public Error {
public:
  enum class Kind { unreachable, timeout, http_status, protocol };

  TransportError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

}  // namespace omnigraph

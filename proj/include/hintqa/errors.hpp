#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hintqa {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// corpus

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line_no, std::string reason)
      : Error("line " + std::to_string(line_no) + ": " + reason),
        line_no_(line_no),
        reason_(std::move(reason)) {}

  std::size_t line_no() const noexcept { return line_no_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_no_;
  std::string reason_;
};

class DuplicateId : public Error {
 public:
  explicit DuplicateId(std::string id)
      : Error("duplicate question id: " + id), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

// gateway

class GatewayError : public Error {
 public:
  using Error::Error;
};

/// Network failure or timeout after the retry budget is spent.
class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

/// Non-2xx answer from a provider.
class ProviderError : public GatewayError {
 public:
  ProviderError(int status, std::string body)
      : GatewayError("provider returned HTTP " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class CacheCorrupt : public GatewayError {
 public:
  explicit CacheCorrupt(std::string key)
      : GatewayError("corrupt cache entry: " + key), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Raised by the scripted provider when no matcher accepts a request.
/// what() carries the full rendered request.
class ScriptMiss : public GatewayError {
 public:
  explicit ScriptMiss(std::string rendered)
      : GatewayError("no scripted response matches request:\n" + rendered),
        rendered_(std::move(rendered)) {}
  const std::string& rendered() const noexcept { return rendered_; }

 private:
  std::string rendered_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// convergence

class EmptyCandidates : public Error {
 public:
  EmptyCandidates() : Error("no parseable candidates and gold append disabled") {}
};

// similarity

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ZeroVector : public Error {
 public:
  ZeroVector() : Error("cosine of a zero vector is undefined") {}
};

// subsets

class InsufficientHints : public Error {
 public:
  InsufficientHints(std::size_t n_hints, std::size_t needed)
      : Error("need at least " + std::to_string(needed) + " hints, have " +
              std::to_string(n_hints)) {}
};

class MissingScore : public Error {
 public:
  explicit MissingScore(std::size_t hint_index)
      : Error("missing score for hint " + std::to_string(hint_index)),
        hint_index_(hint_index) {}
  std::size_t hint_index() const noexcept { return hint_index_; }

 private:
  std::size_t hint_index_;
};

class TooFewSubsets : public Error {
 public:
  TooFewSubsets(std::size_t have, std::size_t need)
      : Error("need " + std::to_string(need) + " scored subsets, have " + std::to_string(have)),
        have_(have),
        need_(need) {}
  std::size_t have() const noexcept { return have_; }
  std::size_t need() const noexcept { return need_; }

 private:
  std::size_t have_;
  std::size_t need_;
};

// metrics

class UnknownQuestion : public Error {
 public:
  explicit UnknownQuestion(std::string id)
      : Error("unknown question id: " + id), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

// testworld

class UnknownEntity : public Error {
 public:
  explicit UnknownEntity(const std::string& name) : Error("unknown entity: " + name) {}
};

}  // namespace hintqa

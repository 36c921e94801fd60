#pragma once

#include <stdexcept>
#include <string>

namespace boundcue {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed document; `field()` is a path such as "contours[2].points".
class SchemaError : public Error {
  public:
    SchemaError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

/// A polyline leaves the image.
class BoundsError : public Error {
  public:
    BoundsError(std::size_t polyline_index, const std::string& what)
        : Error("contours[" + std::to_string(polyline_index) + "]: " + what),
          index_(polyline_index) {}
    std::size_t polyline_index() const { return index_; }

  private:
    std::size_t index_;
};

/// Structurally valid document violating a semantic rule.
class ValidationError : public SchemaError {
  public:
    using SchemaError::SchemaError;
};

}  // namespace boundcue

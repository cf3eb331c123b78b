#include "mfilgn/errors.hpp"

#include <utility>

namespace mfilgn {

ParseError::ParseError(std::string field, const std::string& what)
    : ValidationError(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

}  // namespace mfilgn

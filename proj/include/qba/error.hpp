#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qba {

enum class ErrorCode {
    invalid_argument,
    zero_cell,
    non_positive_input,
    grid_too_large,
    no_feasible_table,
    too_few_valid_cells,
    empty_class,
    parse_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Raised for precondition violations. Invalid corrections are not errors;
/// they come back as data in CorrectionResult.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace qba

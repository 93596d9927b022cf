#include "qba/error.hpp"

namespace qba {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::zero_cell: return "zero_cell";
    case ErrorCode::non_positive_input: return "non_positive_input";
    case ErrorCode::grid_too_large: return "grid_too_large";
    case ErrorCode::no_feasible_table: return "no_feasible_table";
    case ErrorCode::too_few_valid_cells: return "too_few_valid_cells";
    case ErrorCode::empty_class: return "empty_class";
    case ErrorCode::parse_error: return "parse_error";
    }
    return "unknown";
}

}  // namespace qba

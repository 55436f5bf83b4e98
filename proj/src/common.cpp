#include "msface/error.hpp"
#include "msface/matrix.hpp"

#include <string>

namespace msface {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedCode: return "MalformedCode";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::InvalidSplit: return "InvalidSplit";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::RaggedRows: return "RaggedRows";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::BadFraction: return "BadFraction";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyTraining: return "EmptyTraining";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadExponent: return "BadExponent";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::WeightCountMismatch: return "WeightCountMismatch";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Matrix::Matrix(std::size_t width, std::size_t height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != width_ * height_) {
    fail(ErrorCode::ShapeMismatch,
         "matrix data has " + std::to_string(data_.size()) + " values, expected " +
             std::to_string(width_ * height_));
  }
}

}  // namespace msface

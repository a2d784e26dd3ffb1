// SPDX-License-Identifier: Apache-2.0

#include "moee/error.hpp"

namespace moee {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::EmptyInput: return "empty-input error";
    case ErrorKind::Vocab: return "vocab error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Corruption: return "corruption error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Consistency: return "consistency error";
    case ErrorKind::Strategy: return "strategy error";
    case ErrorKind::Pairing: return "pairing error";
    case ErrorKind::DegenerateInput: return "degenerate-input error";
    case ErrorKind::Template: return "template error";
    case ErrorKind::UndefinedCorrelation: return "undefined-correlation error";
    case ErrorKind::UndefinedMetric: return "undefined-metric error";
    case ErrorKind::UndefinedRanking: return "undefined-ranking error";
    case ErrorKind::Size: return "size error";
    case ErrorKind::DegenerateTask: return "degenerate-task error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Coverage: return "coverage error";
    case ErrorKind::Spec: return "spec error";
    case ErrorKind::InsufficientData: return "insufficient-data error";
  }
  return "error";
}

}  // namespace moee

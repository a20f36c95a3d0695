#pragma once

#include <stdexcept>
#include <string>

namespace tpr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define TPR_DEFINE_ERROR(Name)          \
  struct Name : Error {                 \
    using Error::Error;                 \
  }

TPR_DEFINE_ERROR(IllegalMove);
TPR_DEFINE_ERROR(NoValidTarget);
TPR_DEFINE_ERROR(FormatError);
TPR_DEFINE_ERROR(DimensionMismatch);
TPR_DEFINE_ERROR(ZeroVector);
TPR_DEFINE_ERROR(ZeroDirection);
TPR_DEFINE_ERROR(ZeroRow);
TPR_DEFINE_ERROR(DegenerateVariance);
TPR_DEFINE_ERROR(DisconnectedGraph);
TPR_DEFINE_ERROR(InsufficientDimension);

#undef TPR_DEFINE_ERROR

}  // namespace tpr

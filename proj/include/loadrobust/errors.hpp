#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loadrobust {

// Coarse classification used by the CLI to pick an exit code.
enum class ErrorCategory {
  kConfig,     // bad parameters or misuse of the API (exit 2)
  kData,       // malformed or insufficient input data (exit 3)
  kNumerical,  // non-finite loss, weights or predictions (exit 4)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define LOADROBUST_DEFINE_ERROR(Name, Category)                 \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what)                      \
        : Error(ErrorCategory::Category, #Name ": " + what) {}  \
  };

LOADROBUST_DEFINE_ERROR(ConfigError, kConfig)
LOADROBUST_DEFINE_ERROR(EmptySpecError, kConfig)
LOADROBUST_DEFINE_ERROR(ShapeError, kConfig)
LOADROBUST_DEFINE_ERROR(CacheError, kConfig)
LOADROBUST_DEFINE_ERROR(ParseError, kData)
LOADROBUST_DEFINE_ERROR(FormatError, kData)
LOADROBUST_DEFINE_ERROR(DegenerateScaleError, kData)
LOADROBUST_DEFINE_ERROR(ZeroSignalError, kData)
LOADROBUST_DEFINE_ERROR(InfiniteSnrError, kData)
LOADROBUST_DEFINE_ERROR(EmptyInputError, kData)
LOADROBUST_DEFINE_ERROR(EndOfDataError, kData)
LOADROBUST_DEFINE_ERROR(InputError, kData)
LOADROBUST_DEFINE_ERROR(NumericalError, kNumerical)

#undef LOADROBUST_DEFINE_ERROR

// Timestamps in a CSV file are not on the fixed 300 s grid.
class SpacingError : public Error {
 public:
  explicit SpacingError(std::size_t row)
      : Error(ErrorCategory::kData,
              "SpacingError: non-uniform timestamp spacing at row " +
                  std::to_string(row)),
        row_(row) {}

  // Zero-based data row (header excluded).
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class InsufficientDataError : public Error {
 public:
  InsufficientDataError(std::size_t needed, std::size_t got)
      : Error(ErrorCategory::kData,
              "InsufficientDataError: needed " + std::to_string(needed) +
                  " samples, got " + std::to_string(got)),
        needed_(needed),
        got_(got) {}

  std::size_t needed() const noexcept { return needed_; }
  std::size_t got() const noexcept { return got_; }

 private:
  std::size_t needed_;
  std::size_t got_;
};

}  // namespace loadrobust

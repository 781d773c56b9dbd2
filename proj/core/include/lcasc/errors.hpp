#pragma once

#include <stdexcept>
#include <string>

namespace lcasc {

/* Base type for everything thrown by this library. */
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* Malformed external input: files, manifests, serialized models. */
struct DataError : Error {
  using Error::Error;
};

/* Invalid configuration or arguments supplied by the caller. */
struct UsageError : Error {
  using Error::Error;
};

/* A model ensemble exceeds the size budget. */
struct BudgetError : Error {
  using Error::Error;
};

}  // namespace lcasc

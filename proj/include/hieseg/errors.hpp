#pragma once

#include <stdexcept>
#include <string>

namespace hieseg {

// Error categories map 1:1 onto CLI exit codes (see tools/hieseg_main.cpp):
// io 2, geometry/validation 3, pairing 4, config 5.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct geometry_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct pairing_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hieseg

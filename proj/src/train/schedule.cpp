#include "advseg/train/schedule.hpp"

#include <cmath>
#include <string>

#include "advseg/core/error.hpp"

namespace advseg {

double poly_lr(double lr0, std::int64_t iter, std::int64_t max_iter, double power) {
  if (max_iter <= 0) throw Error(ErrorKind::Schedule, "max_iter must be positive");
  if (iter < 0 || iter > max_iter) {
    throw Error(ErrorKind::Schedule, "iteration " + std::to_string(iter) + " outside [0, " +
                                         std::to_string(max_iter) + "]");
  }
  return lr0 * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

}  // namespace advseg

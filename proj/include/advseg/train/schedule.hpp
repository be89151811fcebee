#pragma once

#include <cstdint>

namespace advseg {

/// lr0 * (1 - iter / max_iter)^power. Throws Schedule when iter is outside
/// [0, max_iter].
double poly_lr(double lr0, std::int64_t iter, std::int64_t max_iter, double power);

}  // namespace advseg

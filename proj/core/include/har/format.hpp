#pragma once

#include <string>

namespace har {

/// Shortest decimal representation that round-trips to the same double.
/// Every CSV writer uses this so reruns are byte-identical.
std::string format_double(double value);

}  // namespace har

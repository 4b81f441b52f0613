#pragma once

// pchip.hpp in Boost 1.74 calls isnan unqualified and needs fpclassify declared first.
#include <boost/math/special_functions/fpclassify.hpp>
namespace boost::math::interpolators {
using boost::math::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

namespace symbranch {

using MonotoneCubic = boost::math::interpolators::pchip<std::vector<double>>;

}  // namespace symbranch

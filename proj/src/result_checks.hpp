#pragma once

#include <cmath>
#include <sstream>

#include "lsabr/errors.hpp"
#include "lsabr/pricer.hpp"

namespace lsabr::detail {

// Small negative truncation noise is clamped; anything larger is a failure.
inline void finalize_price(PriceResult& r, double forward) {
    if (!std::isfinite(r.price)) throw NumericalFailure("price is not finite");
    if (r.price < 0.0) {
        std::ostringstream os;
        if (r.price < -1e-6 * forward) {
            os << "price " << r.price << " is materially negative";
            throw NumericalFailure(os.str());
        }
        os << "clamped small negative price " << r.price << " to 0";
        r.warnings.push_back(os.str());
        r.price = 0.0;
    }
    if (r.price > forward) r.warnings.push_back("price exceeds the forward bound");
}

}  // namespace lsabr::detail

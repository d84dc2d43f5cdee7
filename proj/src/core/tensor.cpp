#include "core/tensor.hpp"

#include <cmath>

namespace dcn {

bool Tensor::all_finite() const {
    for (const float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace dcn

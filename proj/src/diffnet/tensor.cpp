#include "facemimic/diffnet/tensor.hpp"

namespace facemimic::diffnet {

std::string to_string(const Shape& s) {
    return std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

}  // namespace facemimic::diffnet

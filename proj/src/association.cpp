#include "sdvec/association.hpp"

#include <stdexcept>

namespace sdvec {

double hamming_accuracy(const AssociationVector& a, const AssociationVector& b)
{
    if (a.bits.size() != b.bits.size()) {
        throw std::invalid_argument("hamming_accuracy: length mismatch");
    }
    if (a.bits.empty()) {
        return 1.0;
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        same += (a.bits[i] != 0) == (b.bits[i] != 0);
    }
    return static_cast<double>(same) / static_cast<double>(a.bits.size());
}

} // namespace sdvec

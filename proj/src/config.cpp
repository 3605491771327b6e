#include "ocfer/config.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ocfer {

void TrainConfig::validate() const {
    if (!(lr0 > 0.0)) throw std::invalid_argument("lr0 must be positive");
    if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
    if (decay_every < 1) throw std::invalid_argument("decay interval must be at least 1");
    if (!(decay_factor > 0.0)) throw std::invalid_argument("decay factor must be positive");
}

std::string TrainConfig::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "model=" << model << ";lr0=" << lr0 << ";batch=" << batch_size << ";epochs=" << epochs
       << ";decay_factor=" << decay_factor << ";decay_every=" << decay_every << ";lambda=" << lambda
       << ";seed=" << seed << ";ortho_policy=" << ortho_policy;
    return os.str();
}

std::string TrainConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : describe()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ocfer

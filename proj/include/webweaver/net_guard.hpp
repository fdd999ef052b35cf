#pragma once

#include <atomic>

#include "webweaver/errors.hpp"

namespace webweaver::net {

// Process-wide switch that makes every live network entry point fail fast.
// Offline test harnesses flip this on so that any attempted network call is
// an immediate, attributable failure instead of a silent dependency.

inline std::atomic<bool>& refusal_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

inline std::atomic<long>& performed_calls() {
    static std::atomic<long> count{0};
    return count;
}

inline void refuse_network(bool refuse) { refusal_flag().store(refuse); }

inline bool network_refused() { return refusal_flag().load(); }

/// Called by every live transport immediately before touching the network.
inline void check_network_allowed(const char* what) {
    if (refusal_flag().load()) {
        throw Error(ErrorKind::NetworkRefused, what);
    }
    performed_calls().fetch_add(1);
}

inline long network_calls_performed() { return performed_calls().load(); }

}  // namespace webweaver::net

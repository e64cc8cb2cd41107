#include "msv2/runtime.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace msv2 {

int max_threads() {
    static const int cached = [] {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n < 1) n = 1;
        if (const char* env = std::getenv("MSV2_THREADS")) {
            const int requested = std::atoi(env);
            if (requested >= 1) n = requested;
        }
        return n;
    }();
    return cached;
}

} // namespace msv2

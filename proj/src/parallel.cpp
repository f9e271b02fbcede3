#include "icut/parallel.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace icut {

int configure_threads_from_env() {
    if (const char* env = std::getenv("ICUT_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) omp_set_num_threads(n);
        } catch (const std::exception&) {
            // ignore malformed values
        }
    }
    return omp_get_max_threads();
}

void set_threads(int n) {
    if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace icut

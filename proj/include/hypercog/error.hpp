#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hypercog {

/// Fatal input or configuration error. Recoverable conditions are reported
/// through Diagnostics or returned as empty optionals instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Collects non-fatal warnings emitted while a run progresses.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
    bool empty() const { return warnings.empty(); }
};

inline void warn(Diagnostics* diag, std::string message) {
    if (diag != nullptr) diag->warn(std::move(message));
}

}  // namespace hypercog

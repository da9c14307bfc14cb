#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hd {

// Thrown when fixed-point iterates pin some lambda_busy against its service
// rate, i.e. the policy cannot stabilize the system at the given load.
class InstabilityDetected : public std::runtime_error {
public:
    InstabilityDetected(int class_index, const std::string& what)
        : std::runtime_error(what), class_index_(class_index) {}
    int class_index() const { return class_index_; }  // 0-based

private:
    int class_index_;
};

// Thrown by the optimizer when a family has no stable member at the given load.
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace hd

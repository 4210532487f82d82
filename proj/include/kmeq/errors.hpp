#pragma once

#include <stdexcept>
#include <string>

namespace kmeq {

// Iterative kernel failed to converge (e.g. the Jacobi SVD sweep cap).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kmeq

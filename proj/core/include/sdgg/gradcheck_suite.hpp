#pragma once

#include <string>
#include <vector>

#include "sdgg/tensor.hpp"

namespace sdgg {

struct GradCheckCase {
    std::string name;
    GradCheckReport report;
};

// Finite-difference verification of every differentiable primitive, every
// network block, and the full training losses of all three methods, evaluated
// on small fixed inputs with frozen sampling noise.
std::vector<GradCheckCase> run_gradcheck_suite(double step = 1e-5,
                                               double tol = 1e-4);

}  // namespace sdgg

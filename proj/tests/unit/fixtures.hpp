#pragma once

#include <memory>

#include "contact_hj/hamiltonian.hpp"
#include "contact_hj/solver.hpp"

namespace contact_hj::testing {

// f = 1 - exp(-x^2), phi = 1: critical value 0, Aubry set {0}.
inline HamiltonianModel QuadraticLinear() {
  return HamiltonianModel(1, QuadraticKinetic{}, Expr::Parse("1 - exp(-x^2)"),
                          LinearCoupling{Expr::Constant(1.0)}, {0.5, 1.0});
}

inline HamiltonianModel Arctan() {
  return HamiltonianModel(1, QuadraticKinetic{}, Expr::Parse("1 - exp(-x^2)"), ArctanCoupling{});
}

// Coarse 1D setup: [-4, 4] with 81 nodes, dt 0.05, controls |a| <= 4 step 0.2.
inline Discretization Coarse1D() {
  Discretization d;
  d.box = std::make_shared<const UniformGrid>(MakeBox(1, -4.0, 4.0), std::array<int, 2>{81, 1});
  d.controls = ControlSet::Make(1, 4.0, 0.2);
  d.evaluator = LagrangianEvaluator::ClosedForm();
  d.params.dt = 0.05;
  d.params.tol = 1e-9;
  return d;
}

}  // namespace contact_hj::testing

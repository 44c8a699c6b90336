#pragma once

#include <stdexcept>
#include <string>

namespace shapereg {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateCurve : std::runtime_error {
  explicit DegenerateCurve(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateSurface : std::runtime_error {
  explicit DegenerateSurface(const std::string& msg) : std::runtime_error(msg) {}
};

struct GridMismatch : std::runtime_error {
  explicit GridMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a convex combination of q-maps vanishes at a node and the
// inverse transform of the combination stops being well defined.
struct VanishingCombination : std::runtime_error {
  double tau;
  int node;
  VanishingCombination(double tau_, int node_, const std::string& msg)
      : std::runtime_error(msg), tau(tau_), node(node_) {}
};

struct InfeasibleLayer : std::runtime_error {
  explicit InfeasibleLayer(const std::string& msg) : std::runtime_error(msg) {}
};

struct NearSingularDerivative : std::runtime_error {
  explicit NearSingularDerivative(const std::string& msg) : std::runtime_error(msg) {}
};

struct StagnatedStep : std::runtime_error {
  explicit StagnatedStep(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace shapereg

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "crn/errors.hpp"

namespace crn {

// Copy-number vector, one entry per species, all entries >= 0.
using State = Eigen::VectorXi;
// Integer state-change vector added to the state when a channel fires.
using StateChange = Eigen::VectorXi;

void validate_state(const State& x);

enum class ReactionKind {
  Source,       // 0 -> products,          a = kappa * V
  Unary,        // S_i -> products,        a = kappa * x_i
  BinarySame,   // 2 S_i -> products,      a = kappa / V * x_i (x_i - 1)
  BinaryMixed,  // S_i + S_j -> products,  a = kappa / V * x_i x_j
};

const char* reaction_kind_name(ReactionKind kind);

struct Reaction {
  ReactionKind kind = ReactionKind::Source;
  int species_a = -1;  // 0-based; used by Unary, BinarySame, BinaryMixed
  int species_b = -1;  // 0-based; used by BinaryMixed only
  double rate_constant = 0.0;
  double volume = 1.0;
  StateChange state_change;

  void validate(int n_species) const;
};

struct ReactionNetwork {
  int n_species = 0;
  std::vector<Reaction> reactions;
  std::vector<std::string> species_names;  // optional, cosmetic

  void validate() const;
};

// Mass-action propensity of a single reaction at state x.
double mass_action_propensity(const Reaction& r, const State& x);

}  // namespace crn

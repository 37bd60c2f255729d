#include "crn/model.hpp"

#include <cmath>
#include <sstream>

namespace crn {

void validate_state(const State& x) {
  for (int i = 0; i < x.size(); ++i)
    if (x[i] < 0) throw InvalidInputError("state has a negative copy-number");
}

const char* reaction_kind_name(ReactionKind kind) {
  switch (kind) {
    case ReactionKind::Source: return "source";
    case ReactionKind::Unary: return "unary";
    case ReactionKind::BinarySame: return "binary_same";
    case ReactionKind::BinaryMixed: return "binary_mixed";
  }
  return "?";
}

void Reaction::validate(int n_species) const {
  // Zero rate constants are accepted: a kappa = 0 reaction never fires but is
  // a legitimate degenerate network (and a boundary case for the estimators).
  if (!(rate_constant >= 0.0) || !std::isfinite(rate_constant))
    throw InvalidInputError("reaction rate constant must be finite and >= 0");
  if (!(volume > 0.0) || !std::isfinite(volume))
    throw InvalidInputError("reaction volume must be finite and > 0");
  if (state_change.size() != n_species)
    throw InvalidInputError("state-change vector length does not match species count");
  if (state_change.isZero())
    throw InvalidInputError("state-change vector must not be all zero");

  auto check_species = [n_species](int s) {
    if (s < 0 || s >= n_species)
      throw InvalidInputError("reaction species index out of range");
  };
  switch (kind) {
    case ReactionKind::Source:
      break;
    case ReactionKind::Unary:
    case ReactionKind::BinarySame:
      check_species(species_a);
      break;
    case ReactionKind::BinaryMixed:
      check_species(species_a);
      check_species(species_b);
      if (species_a == species_b)
        throw InvalidInputError("binary_mixed requires two distinct species");
      break;
  }
}

void ReactionNetwork::validate() const {
  if (n_species < 1) throw InvalidInputError("network needs at least one species");
  if (reactions.empty()) throw InvalidInputError("network needs at least one reaction");
  for (const Reaction& r : reactions) r.validate(n_species);
  if (!species_names.empty() && static_cast<int>(species_names.size()) != n_species)
    throw InvalidInputError("species name list does not match species count");
}

double mass_action_propensity(const Reaction& r, const State& x) {
  if (x.size() != r.state_change.size())
    throw InvalidInputError("state dimension does not match reaction");
  switch (r.kind) {
    case ReactionKind::Source:
      return r.rate_constant * r.volume;
    case ReactionKind::Unary:
      return r.rate_constant * x[r.species_a];
    case ReactionKind::BinarySame: {
      const double c = x[r.species_a];
      return r.rate_constant / r.volume * c * (c - 1.0);
    }
    case ReactionKind::BinaryMixed:
      return r.rate_constant / r.volume * static_cast<double>(x[r.species_a]) *
             static_cast<double>(x[r.species_b]);
  }
  return 0.0;
}

}  // namespace crn

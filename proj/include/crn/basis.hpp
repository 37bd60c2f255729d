#pragma once

#include <string>
#include <vector>

#include "crn/model.hpp"

namespace crn {

// PairSelf is the mass-action shape x_i(x_i - 1); it backs known-structure
// estimation and is never part of the canonical polynomial library.
enum class BasisKind { Constant, Linear, Square, Cross, PairSelf };

// Basis function of degree <= 2 in the copy-numbers:
// 1, x_i, x_i^2, x_i x_j with i < j, or x_i (x_i - 1).
struct BasisFunction {
  BasisKind kind = BasisKind::Constant;
  int i = -1;  // 0-based species index
  int j = -1;  // second species for Cross, i < j

  static BasisFunction constant() { return {BasisKind::Constant, -1, -1}; }
  static BasisFunction linear(int i) { return {BasisKind::Linear, i, -1}; }
  static BasisFunction square(int i) { return {BasisKind::Square, i, -1}; }
  static BasisFunction pair_self(int i) { return {BasisKind::PairSelf, i, -1}; }
  static BasisFunction cross(int i, int j);

  void validate(int n_species) const;
  bool operator==(const BasisFunction& o) const = default;

  // "1", "x1", "x1^2", "x1*x2" (species printed 1-based)
  std::string descriptor() const;
  static BasisFunction parse(const std::string& text);
};

double eval_basis(const BasisFunction& b, const State& x);

// For a reaction with known structure: the polynomial phi with
// a*(x) = kappa * phi(x) (the volume factor is folded into phi).
BasisFunction basis_of_reaction(const Reaction& r);
double reaction_basis_scale(const Reaction& r);  // V for Source, 1/V for binaries

// Ordered list phi_1..phi_N plus K disjoint contiguous index ranges,
// one per channel, covering all of 1..N.
struct BasisLibrary {
  std::vector<BasisFunction> functions;           // length N, concatenated per channel
  std::vector<std::pair<int, int>> channel_ranges;  // per channel: [begin, end) into functions

  int dimension() const { return static_cast<int>(functions.size()); }
  int num_channels() const { return static_cast<int>(channel_ranges.size()); }
  int channel_size(int channel) const {
    return channel_ranges[channel].second - channel_ranges[channel].first;
  }

  void validate(int n_species) const;

  // The same local library for each of K channels (phi_j = local[(j-1) mod L]).
  static BasisLibrary replicated(const std::vector<BasisFunction>& local, int K);
};

// Canonical degree-2 polynomial library: 1, x1..xn, then for each i
// ascending xi^2 followed by xi*xj for j > i.
std::vector<BasisFunction> polynomial_basis(int n_species);

}  // namespace crn

#include "crn/basis.hpp"

#include <algorithm>
#include <cstdio>

namespace crn {

BasisFunction BasisFunction::cross(int i, int j) {
  if (i > j) std::swap(i, j);
  return {BasisKind::Cross, i, j};
}

void BasisFunction::validate(int n_species) const {
  auto check = [n_species](int s) {
    if (s < 0 || s >= n_species) throw InvalidInputError("basis species index out of range");
  };
  switch (kind) {
    case BasisKind::Constant:
      break;
    case BasisKind::Linear:
    case BasisKind::Square:
    case BasisKind::PairSelf:
      check(i);
      break;
    case BasisKind::Cross:
      check(i);
      check(j);
      if (!(i < j)) throw InvalidInputError("cross basis indices must satisfy i < j");
      break;
  }
}

std::string BasisFunction::descriptor() const {
  char buf[32];
  switch (kind) {
    case BasisKind::Constant:
      return "1";
    case BasisKind::Linear:
      std::snprintf(buf, sizeof(buf), "x%d", i + 1);
      return buf;
    case BasisKind::Square:
      std::snprintf(buf, sizeof(buf), "x%d^2", i + 1);
      return buf;
    case BasisKind::PairSelf:
      std::snprintf(buf, sizeof(buf), "x%d(x%d-1)", i + 1, i + 1);
      return buf;
    case BasisKind::Cross:
      std::snprintf(buf, sizeof(buf), "x%d*x%d", i + 1, j + 1);
      return buf;
  }
  return "?";
}

BasisFunction BasisFunction::parse(const std::string& text) {
  if (text == "1") return constant();
  int a = 0, b = 0;
  if (std::sscanf(text.c_str(), "x%d(x%d-1)", &a, &b) == 2 && text.find('(') != std::string::npos) {
    if (a < 1 || a != b) throw InvalidInputError("bad pair basis descriptor: " + text);
    return pair_self(a - 1);
  }
  if (std::sscanf(text.c_str(), "x%d*x%d", &a, &b) == 2) {
    if (a < 1 || b < 1 || a >= b) throw InvalidInputError("bad cross basis descriptor: " + text);
    return cross(a - 1, b - 1);
  }
  if (std::sscanf(text.c_str(), "x%d^2", &a) == 1 && text.find('^') != std::string::npos) {
    if (a < 1) throw InvalidInputError("bad square basis descriptor: " + text);
    return square(a - 1);
  }
  if (std::sscanf(text.c_str(), "x%d", &a) == 1 && text.find('*') == std::string::npos &&
      text.find('^') == std::string::npos) {
    if (a < 1) throw InvalidInputError("bad linear basis descriptor: " + text);
    return linear(a - 1);
  }
  throw InvalidInputError("unrecognized basis descriptor: " + text);
}

double eval_basis(const BasisFunction& b, const State& x) {
  switch (b.kind) {
    case BasisKind::Constant:
      return 1.0;
    case BasisKind::Linear:
      return x[b.i];
    case BasisKind::Square: {
      const double c = x[b.i];
      return c * c;
    }
    case BasisKind::PairSelf: {
      const double c = x[b.i];
      return c * (c - 1.0);
    }
    case BasisKind::Cross:
      return static_cast<double>(x[b.i]) * static_cast<double>(x[b.j]);
  }
  return 0.0;
}

BasisFunction basis_of_reaction(const Reaction& r) {
  switch (r.kind) {
    case ReactionKind::Source:
      return BasisFunction::constant();
    case ReactionKind::Unary:
      return BasisFunction::linear(r.species_a);
    case ReactionKind::BinarySame:
      return BasisFunction::pair_self(r.species_a);
    case ReactionKind::BinaryMixed:
      return BasisFunction::cross(r.species_a, r.species_b);
  }
  return BasisFunction::constant();
}

double reaction_basis_scale(const Reaction& r) {
  switch (r.kind) {
    case ReactionKind::Source:
      return r.volume;
    case ReactionKind::Unary:
      return 1.0;
    case ReactionKind::BinarySame:
    case ReactionKind::BinaryMixed:
      return 1.0 / r.volume;
  }
  return 1.0;
}

void BasisLibrary::validate(int n_species) const {
  for (const BasisFunction& f : functions) f.validate(n_species);
  int expected_begin = 0;
  for (const auto& [begin, end] : channel_ranges) {
    if (begin != expected_begin || end <= begin)
      throw InvalidInputError("channel index sets must be disjoint contiguous ranges covering 1..N");
    expected_begin = end;
  }
  if (expected_begin != dimension())
    throw InvalidInputError("channel index sets must cover all basis functions");
}

BasisLibrary BasisLibrary::replicated(const std::vector<BasisFunction>& local, int K) {
  if (K < 1) throw InvalidInputError("need at least one channel");
  if (local.empty()) throw InvalidInputError("need at least one basis function");
  BasisLibrary lib;
  const int L = static_cast<int>(local.size());
  lib.functions.reserve(static_cast<std::size_t>(L) * K);
  for (int i = 0; i < K; ++i) {
    lib.functions.insert(lib.functions.end(), local.begin(), local.end());
    lib.channel_ranges.emplace_back(i * L, (i + 1) * L);
  }
  return lib;
}

std::vector<BasisFunction> polynomial_basis(int n_species) {
  if (n_species < 1) throw InvalidInputError("need at least one species");
  std::vector<BasisFunction> out;
  out.push_back(BasisFunction::constant());
  for (int i = 0; i < n_species; ++i) out.push_back(BasisFunction::linear(i));
  for (int i = 0; i < n_species; ++i) {
    out.push_back(BasisFunction::square(i));
    for (int j = i + 1; j < n_species; ++j) out.push_back(BasisFunction::cross(i, j));
  }
  return out;
}

}  // namespace crn

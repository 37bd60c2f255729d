#pragma once

#include <iosfwd>
#include <string>

#include "crn/diagnostics.hpp"

namespace crn {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(const std::string& text);

ReactionNetwork read_network(const std::string& path);
void write_network(const std::string& path, const ReactionNetwork& network);

// Line-oriented trajectory container: header with species count, horizon,
// trajectory count, seed and the channel table, then one block per
// trajectory with `l holding_time new_state...` event lines. Holding times
// survive a write/read round trip bit-exactly.
void write_dataset(const std::string& path, const TrajectorySet& ts, const ChannelSummary& cs);
TrajectorySet read_dataset(const std::string& path);

// Rate-estimation output (text table plus machine-readable JSON).
void write_rates(const std::string& path_base, const ReactionNetwork& network,
                 const std::vector<RateEstimate>& estimates);

// Sparse-learning output: per channel, basis descriptor, raw and rescaled
// coefficients, weights, and solver metadata.
void write_coefficients(const std::string& path_base, const BasisLibrary& lib,
                        const ChannelSummary& cs, const SparseLearnResult& result,
                        SmoothingParam eps);
void print_coefficient_table(std::ostream& out, const BasisLibrary& lib,
                             const SparseLearnResult& result);

void print_channel_table(std::ostream& out, const ChannelSummary& cs);

std::string format_matrix(const Eigen::MatrixXd& m);  // row-major, 8 significant digits

}  // namespace crn

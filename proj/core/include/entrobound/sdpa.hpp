#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

namespace entrobound::sdpa {

/// Sparse SDPA problem data: min c^T y subject to sum_i y_i F_i - F0 >= 0
/// (block diagonal). Entries are stored upper-triangle with 1-based indices,
/// exactly as they appear in a .dat-s file.
struct SdpaProblem {
    int num_vars = 0;
    std::vector<int> block_sizes;
    Eigen::VectorXd objective;  // c, length num_vars
    // key: (matrix number 0..m, block number 1-based); value: (i, j, v) with i <= j
    std::map<std::pair<int, int>, std::vector<std::tuple<int, int, double>>> entries;

    bool operator==(const SdpaProblem& other) const;
};

/// Writes sparse SDPA (.dat-s). Comment lines (without the leading '*') are
/// emitted first for audit.
void write_sdpa(const SdpaProblem& p, std::ostream& os,
                const std::vector<std::string>& comments = {});

/// Parses sparse SDPA text as written by write_sdpa (comments skipped).
SdpaProblem read_sdpa(std::istream& is);

}  // namespace entrobound::sdpa

#include "entrobound/sdpa.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace entrobound::sdpa {

namespace {

// Shortest decimal representation that round-trips the double exactly.
std::string fmt(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("fmt: to_chars failed");
    return std::string(buf, ptr);
}

}  // namespace

bool SdpaProblem::operator==(const SdpaProblem& other) const {
    return num_vars == other.num_vars && block_sizes == other.block_sizes &&
           objective == other.objective && entries == other.entries;
}

void write_sdpa(const SdpaProblem& p, std::ostream& os,
                const std::vector<std::string>& comments) {
    for (const auto& c : comments) os << "* " << c << "\n";
    os << p.num_vars << "\n";
    os << p.block_sizes.size() << "\n";
    for (size_t i = 0; i < p.block_sizes.size(); ++i) {
        os << (i ? " " : "") << p.block_sizes[i];
    }
    os << "\n";
    for (int i = 0; i < p.objective.size(); ++i) {
        os << (i ? " " : "") << fmt(p.objective(i));
    }
    os << "\n";
    for (const auto& [key, list] : p.entries) {
        for (const auto& [i, j, v] : list) {
            if (v == 0.0) continue;
            os << key.first << " " << key.second << " " << i << " " << j << " "
               << fmt(v) << "\n";
        }
    }
}

SdpaProblem read_sdpa(std::istream& is) {
    SdpaProblem p;
    std::string line;
    int stage = 0;  // 0: m, 1: nblocks, 2: sizes, 3: objective, 4: entries
    int nblocks = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '*' || line[0] == '"') continue;
        std::istringstream ss(line);
        switch (stage) {
            case 0:
                ss >> p.num_vars;
                stage = 1;
                break;
            case 1:
                ss >> nblocks;
                stage = 2;
                break;
            case 2: {
                p.block_sizes.resize(nblocks);
                for (int i = 0; i < nblocks; ++i) ss >> p.block_sizes[i];
                stage = 3;
                break;
            }
            case 3: {
                p.objective.resize(p.num_vars);
                for (int i = 0; i < p.num_vars; ++i) ss >> p.objective(i);
                stage = 4;
                break;
            }
            case 4: {
                int mat, blk, i, j;
                double v;
                if (ss >> mat >> blk >> i >> j >> v) {
                    p.entries[{mat, blk}].emplace_back(i, j, v);
                }
                break;
            }
        }
        if (!ss && stage != 4) throw std::runtime_error("read_sdpa: malformed header");
    }
    if (stage < 4) throw std::runtime_error("read_sdpa: truncated file");
    return p;
}

}  // namespace entrobound::sdpa

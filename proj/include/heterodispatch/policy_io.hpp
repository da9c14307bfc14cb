#pragma once

#include <string>

#include "heterodispatch/optimizer.hpp"

namespace hd {

// On-disk policy document: system parameters, the querying rule in its native
// parameterization, and the sparse assignment table keyed by canonical-mix
// triples. Class indices are 1-based in the file (j == s+1 means "all busy").
struct PolicyDocument {
    SystemParams params;
    QueryingRule rule;
    CidAssignment assign;
    std::uint64_t rng_seed = 0;
    std::string tool_version;
};

std::string policy_to_json(const PolicyDocument& doc);
PolicyDocument policy_from_json(const std::string& text);

void save_policy(const PolicyDocument& doc, const std::string& path);
PolicyDocument load_policy(const std::string& path);

}  // namespace hd

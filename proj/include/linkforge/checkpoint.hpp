#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "linkforge/params.hpp"

namespace linkforge {

// Versioned binary container for trained parameters: a JSON metadata block,
// the RNG seed the run started from, and named double matrices. The file
// carries a trailing FNV-1a hash; loading verifies it.
struct Checkpoint {
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, Eigen::MatrixXd>> arrays;

    const Eigen::MatrixXd* find(const std::string& name) const {
        for (const auto& a : arrays)
            if (a.first == name) return &a.second;
        return nullptr;
    }
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);  // CheckpointMismatchError / IoError

// Hash of the entire serialized file; an embedding index remembers it so a
// query session can prove it is pairing the index with the right weights.
std::uint64_t checkpoint_fingerprint(const std::string& path);

// Copies a ParamSet into / out of the array list under "<prefix>.<name>".
// take_params requires every destination entry to exist with its exact shape.
void put_params(Checkpoint& ck, const std::string& prefix, const ParamSet& ps);
void take_params(const Checkpoint& ck, const std::string& prefix, ParamSet& ps);

} // namespace linkforge

#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "linkforge/errors.hpp"
#include "linkforge/rng.hpp"

namespace linkforge {

// Named parameter matrices in a fixed insertion order. The order defines the
// optimizer-state alignment and the checkpoint layout, so construction must
// be deterministic.
class ParamSet {
public:
    Eigen::MatrixXd& add(const std::string& name, int rows, int cols) {
        if (has(name))
            throw ShapeMismatchError("duplicate parameter: " + name);
        items_.emplace_back(name, Eigen::MatrixXd::Zero(rows, cols));
        return items_.back().second;
    }
    bool has(const std::string& name) const {
        for (const auto& it : items_)
            if (it.first == name) return true;
        return false;
    }
    Eigen::MatrixXd& at(const std::string& name) {
        for (auto& it : items_)
            if (it.first == name) return it.second;
        throw ShapeMismatchError("unknown parameter: " + name);
    }
    const Eigen::MatrixXd& at(const std::string& name) const {
        return const_cast<ParamSet*>(this)->at(name);
    }
    std::size_t size() const { return items_.size(); }
    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }
    std::pair<std::string, Eigen::MatrixXd>& operator[](std::size_t i) { return items_[i]; }
    const std::pair<std::string, Eigen::MatrixXd>& operator[](std::size_t i) const {
        return items_[i];
    }

private:
    std::vector<std::pair<std::string, Eigen::MatrixXd>> items_;
};

// Uniform Glorot initialization over (-lim, lim), lim = sqrt(6 / (fan_in +
// fan_out)) with fan counts taken from the matrix dims.
inline void glorot_init(Eigen::MatrixXd& w, Rng& rng) {
    const double lim = std::sqrt(6.0 / double(w.rows() + w.cols()));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-lim, lim);
}

} // namespace linkforge

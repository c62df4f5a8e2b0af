#include "supplycast/parameters.hpp"

#include <cmath>

namespace supplycast {

std::size_t ParameterSet::add(std::string name, ad::Tensor value) {
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return values_.size() - 1;
}

std::size_t ParameterSet::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

std::vector<ad::Var> ParameterSet::bind(ad::Tape& tape, bool trainable) const {
    std::vector<ad::Var> out;
    out.reserve(values_.size());
    for (const auto& v : values_) out.push_back(trainable ? tape.variable(v) : tape.constant(v));
    return out;
}

ad::Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    ad::Tensor out(fan_in, fan_out, 0.0);
    for (auto& x : out.values()) x = dist(rng);
    return out;
}

}  // namespace supplycast

#include "kmax/isotonic.hpp"

#include <stdexcept>

namespace kmax {

std::vector<double> isotonic_regression(std::span<const double> y, std::span<const double> w) {
    if (y.size() != w.size()) throw std::invalid_argument("isotonic_regression: size mismatch");
    const std::size_t n = y.size();

    struct Level {
        double mean;
        double weight;
        std::size_t count;
    };
    std::vector<Level> stack;
    stack.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        if (w[i] <= 0.0) throw std::invalid_argument("isotonic_regression: weights must be positive");
        Level cur{y[i], w[i], 1};
        while (!stack.empty() && stack.back().mean >= cur.mean) {
            const Level& prev = stack.back();
            const double tw = prev.weight + cur.weight;
            cur.mean = (prev.mean * prev.weight + cur.mean * cur.weight) / tw;
            cur.weight = tw;
            cur.count += prev.count;
            stack.pop_back();
        }
        stack.push_back(cur);
    }

    std::vector<double> fit;
    fit.reserve(n);
    for (const Level& level : stack) {
        fit.insert(fit.end(), level.count, level.mean);
    }
    return fit;
}

}  // namespace kmax

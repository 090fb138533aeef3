#pragma once

#include "recon_net/error.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace recon_net {

/// Per-node interbank assets and liabilities, in currency units.
struct FitnessData {
    std::vector<double> assets;
    std::vector<double> liabilities;
    std::vector<std::string> labels;  // optional; empty or one per node

    std::size_t size() const noexcept { return assets.size(); }

    void validate() const {
        if (assets.size() != liabilities.size())
            fail(ErrorKind::validation, "assets and liabilities have different lengths");
        if (!labels.empty() && labels.size() != assets.size())
            fail(ErrorKind::validation, "fitness labels do not match node count");
        bool any_a = false, any_l = false;
        for (std::size_t i = 0; i < assets.size(); ++i) {
            if (!std::isfinite(assets[i]) || assets[i] < 0.0 || !std::isfinite(liabilities[i]) ||
                liabilities[i] < 0.0)
                fail(ErrorKind::validation, "fitness values must be finite and nonnegative (node " +
                                                std::to_string(i) + ")");
            any_a = any_a || assets[i] > 0.0;
            any_l = any_l || liabilities[i] > 0.0;
        }
        if (!any_a || !any_l)
            fail(ErrorKind::validation, "fitness needs at least one positive asset and one positive liability");
    }
};

}  // namespace recon_net

#pragma once

#include "recon_net/error.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace recon_net {

/// Largest node count accepted by the dense representation.
inline constexpr std::size_t kMaxDenseNodes = 4096;

/// Binary (optionally weighted) directed network on dense indices 0..n-1.
///
/// Entry (i, j) is a link from i (lender) to j (borrower). The diagonal is
/// always zero, and when weights are present a_ij = 1 exactly when w_ij > 0.
class DirectedNetwork {
public:
    DirectedNetwork() = default;

    explicit DirectedNetwork(std::size_t n, bool weighted = false)
        : n_(n), adjacency_(n * n, 0) {
        if (n == 0) fail(ErrorKind::invalid_network, "network must have at least one node");
        if (n > kMaxDenseNodes)
            fail(ErrorKind::invalid_network,
                 "network has " + std::to_string(n) + " nodes; dense limit is " +
                     std::to_string(kMaxDenseNodes));
        if (weighted) weights_.assign(n * n, 0.0);
        labels_.reserve(n);
        for (std::size_t i = 0; i < n; ++i) labels_.push_back(std::to_string(i));
    }

    DirectedNetwork(std::vector<std::string> labels, bool weighted)
        : DirectedNetwork(labels.size(), weighted) {
        set_labels(std::move(labels));
    }

    std::size_t size() const noexcept { return n_; }
    bool weighted() const noexcept { return !weights_.empty(); }

    bool has_link(std::size_t i, std::size_t j) const { return adjacency_[i * n_ + j] != 0; }
    double weight(std::size_t i, std::size_t j) const {
        return weighted() ? weights_[i * n_ + j] : static_cast<double>(adjacency_[i * n_ + j]);
    }

    void set_link(std::size_t i, std::size_t j, bool present = true) {
        check_pair(i, j);
        if (weighted())
            fail(ErrorKind::invalid_network, "use add_weight on weighted networks");
        adjacency_[i * n_ + j] = present ? 1 : 0;
    }

    /// Adds w > 0 to w_ij and sets a_ij = 1 (repeated transactions collapse).
    void add_weight(std::size_t i, std::size_t j, double w) {
        check_pair(i, j);
        if (!weighted()) fail(ErrorKind::invalid_network, "network is unweighted");
        if (!(w > 0.0)) fail(ErrorKind::validation, "link weight must be positive");
        weights_[i * n_ + j] += w;
        adjacency_[i * n_ + j] = 1;
    }

    const std::vector<std::string>& labels() const noexcept { return labels_; }

    void set_labels(std::vector<std::string> labels) {
        if (labels.size() != n_) fail(ErrorKind::invalid_network, "label count differs from node count");
        std::unordered_map<std::string, std::size_t> seen;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (!seen.emplace(labels[i], i).second)
                fail(ErrorKind::invalid_network, "duplicate node label '" + labels[i] + "'");
        labels_ = std::move(labels);
    }

    std::optional<std::size_t> index_of(const std::string& label) const {
        for (std::size_t i = 0; i < labels_.size(); ++i)
            if (labels_[i] == label) return i;
        return std::nullopt;
    }

    std::size_t link_count() const {
        std::size_t l = 0;
        for (auto a : adjacency_) l += a;
        return l;
    }

    /// Binary adjacency as a dense double matrix.
    Eigen::MatrixXd adjacency_matrix() const {
        Eigen::MatrixXd m(n_, n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) m(i, j) = adjacency_[i * n_ + j];
        return m;
    }

    /// Same node set with the rows and columns relabelled: new index perm[i]
    /// holds old node i.
    DirectedNetwork permuted(const std::vector<std::size_t>& perm) const {
        DirectedNetwork out(n_, weighted());
        std::vector<std::string> labels(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            labels[perm[i]] = labels_[i];
            for (std::size_t j = 0; j < n_; ++j) {
                if (!has_link(i, j)) continue;
                if (weighted()) out.add_weight(perm[i], perm[j], weight(i, j));
                else out.set_link(perm[i], perm[j]);
            }
        }
        out.set_labels(std::move(labels));
        return out;
    }

    friend bool operator==(const DirectedNetwork& a, const DirectedNetwork& b) {
        return a.n_ == b.n_ && a.adjacency_ == b.adjacency_ && a.weights_ == b.weights_ &&
               a.labels_ == b.labels_;
    }

private:
    void check_pair(std::size_t i, std::size_t j) const {
        if (i >= n_ || j >= n_) fail(ErrorKind::invalid_network, "node index out of range");
        if (i == j) fail(ErrorKind::invalid_network, "self-loops are not admitted");
    }

    std::size_t n_ = 0;
    std::vector<std::uint8_t> adjacency_;
    std::vector<double> weights_;
    std::vector<std::string> labels_;
};

struct StructuralMetrics {
    std::size_t links = 0;             // L
    std::size_t reciprocated = 0;      // L^<->, ordered reciprocated links (always even)
    double density = 0.0;
    double reciprocity = 0.0;
    bool reciprocity_defined = false;  // false when L = 0
    std::vector<std::size_t> k_in, k_out;
    std::vector<double> s_in, s_out;
};

struct DyadCensus {
    std::size_t empty = 0;
    std::size_t single = 0;
    std::size_t reciprocated = 0;

    friend bool operator==(const DyadCensus&, const DyadCensus&) = default;
};

inline std::size_t reciprocated_link_count(const DirectedNetwork& net) {
    std::size_t l = 0;
    const std::size_t n = net.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j && net.has_link(i, j) && net.has_link(j, i)) ++l;
    return l;
}

inline double density(const DirectedNetwork& net) {
    const std::size_t n = net.size();
    if (n < 2) fail(ErrorKind::invalid_network, "density needs at least two nodes");
    return static_cast<double>(net.link_count()) / (static_cast<double>(n) * static_cast<double>(n - 1));
}

/// L^<-> / L. An empty network has no defined reciprocity.
inline double reciprocity(const DirectedNetwork& net) {
    const std::size_t l = net.link_count();
    if (l == 0) fail(ErrorKind::undefined_reciprocity, "reciprocity is undefined for a network without links");
    return static_cast<double>(reciprocated_link_count(net)) / static_cast<double>(l);
}

inline DyadCensus dyad_census(const DirectedNetwork& net) {
    const std::size_t n = net.size();
    if (n < 2) fail(ErrorKind::invalid_network, "dyad census needs at least two nodes");
    DyadCensus c;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const int k = int(net.has_link(i, j)) + int(net.has_link(j, i));
            if (k == 0) ++c.empty;
            else if (k == 1) ++c.single;
            else ++c.reciprocated;
        }
    return c;
}

inline StructuralMetrics degrees_strengths(const DirectedNetwork& net) {
    const std::size_t n = net.size();
    StructuralMetrics m;
    m.k_in.assign(n, 0);
    m.k_out.assign(n, 0);
    m.s_in.assign(n, 0.0);
    m.s_out.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || !net.has_link(i, j)) continue;
            ++m.k_out[i];
            ++m.k_in[j];
            const double w = net.weight(i, j);
            m.s_out[i] += w;
            m.s_in[j] += w;
            ++m.links;
            if (net.has_link(j, i)) ++m.reciprocated;
        }
    if (n >= 2) m.density = density(net);
    if (m.links > 0) {
        m.reciprocity = static_cast<double>(m.reciprocated) / static_cast<double>(m.links);
        m.reciprocity_defined = true;
    }
    return m;
}

}  // namespace recon_net

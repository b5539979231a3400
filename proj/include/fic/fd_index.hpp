#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fic/geometry.hpp"

namespace fic {

/// Insert-only AVL tree mapping ordered keys to insertion-ordered payload
/// lists, with closed-interval range queries.
///
/// Nodes live in a contiguous arena and link by index, so the tree is a
/// plain value type. Equal keys share one node. Once built, all const
/// member functions are safe to call concurrently.
template <typename Key, typename Payload = std::uint32_t, typename Compare = std::less<Key>>
class AvlIntervalIndex {
public:
    using key_type = Key;
    using payload_type = Payload;

    struct Node {
        Key key;
        std::vector<Payload> payload;
        std::int32_t left = kNil;
        std::int32_t right = kNil;
        std::int32_t height = 1;
    };

    struct Audit {
        bool ordered = true;
        bool balanced = true;
        bool heights_consistent = true;
        std::size_t count = 0;  // sum of payload sizes
        int height = 0;
    };

    static constexpr std::int32_t kNil = -1;

    explicit AvlIntervalIndex(Compare cmp = Compare()) : cmp_(cmp) {}

    void insert(const Key& key, Payload value) {
        root_ = insert_at(root_, key, value);
        ++count_;
    }

    /// Payloads with key in [low, high], ascending by key, ties in insertion order.
    std::vector<Payload> range_query(const Key& low, const Key& high,
                                     std::size_t* visited = nullptr) const {
        if (cmp_(high, low))
            throw std::invalid_argument("range query with low > high");
        std::vector<Payload> out;
        std::size_t seen = 0;
        collect(root_, low, high, out, seen);
        if (visited)
            *visited = seen;
        return out;
    }

    /// Number of payload entries with key in [low, high], without materialising them.
    std::size_t range_count(const Key& low, const Key& high) const {
        if (cmp_(high, low))
            throw std::invalid_argument("range query with low > high");
        std::size_t total = 0;
        std::vector<std::int32_t> stack;
        if (root_ != kNil)
            stack.push_back(root_);
        while (!stack.empty()) {
            const Node& n = nodes_[stack.back()];
            stack.pop_back();
            const bool above_low = !cmp_(n.key, low);
            const bool below_high = !cmp_(high, n.key);
            if (above_low && below_high)
                total += n.payload.size();
            if (above_low && n.left != kNil)
                stack.push_back(n.left);
            if (below_high && n.right != kNil)
                stack.push_back(n.right);
        }
        return total;
    }

    /// Node whose key is closest to `target` under `distance`; ties go to the
    /// smaller key. Returns nullptr on an empty tree.
    template <typename Distance>
    const Node* nearest(const Key& target, Distance distance) const {
        const Node* best = nullptr;
        std::int32_t cur = root_;
        while (cur != kNil) {
            const Node& n = nodes_[cur];
            if (best == nullptr) {
                best = &n;
            } else {
                const auto dn = distance(n.key, target);
                const auto db = distance(best->key, target);
                if (dn < db || (!(db < dn) && cmp_(n.key, best->key)))
                    best = &n;
            }
            if (cmp_(target, n.key))
                cur = n.left;
            else if (cmp_(n.key, target))
                cur = n.right;
            else
                break;
        }
        return best;
    }

    template <typename Visitor>
    void for_each_in_order(Visitor&& visit) const {
        std::vector<std::int32_t> stack;
        std::int32_t cur = root_;
        while (cur != kNil || !stack.empty()) {
            while (cur != kNil) {
                stack.push_back(cur);
                cur = nodes_[cur].left;
            }
            cur = stack.back();
            stack.pop_back();
            visit(nodes_[cur]);
            cur = nodes_[cur].right;
        }
    }

    /// Full structural check: BST order, balance factors, stored heights, count.
    Audit audit() const {
        Audit a;
        a.height = audit_at(root_, a);
        bool first = true;
        Key prev{};
        for_each_in_order([&](const Node& n) {
            if (!first && !cmp_(prev, n.key))
                a.ordered = false;
            prev = n.key;
            first = false;
        });
        return a;
    }

    std::size_t size() const noexcept { return count_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return count_ == 0; }
    int height() const noexcept { return h(root_); }
    const Node* root() const noexcept { return root_ == kNil ? nullptr : &nodes_[root_]; }

private:
    int h(std::int32_t n) const noexcept { return n == kNil ? 0 : nodes_[n].height; }

    void update(std::int32_t n) {
        nodes_[n].height = 1 + std::max(h(nodes_[n].left), h(nodes_[n].right));
    }

    int balance(std::int32_t n) const { return h(nodes_[n].left) - h(nodes_[n].right); }

    std::int32_t rotate_right(std::int32_t n) {
        const std::int32_t l = nodes_[n].left;
        nodes_[n].left = nodes_[l].right;
        nodes_[l].right = n;
        update(n);
        update(l);
        return l;
    }

    std::int32_t rotate_left(std::int32_t n) {
        const std::int32_t r = nodes_[n].right;
        nodes_[n].right = nodes_[r].left;
        nodes_[r].left = n;
        update(n);
        update(r);
        return r;
    }

    std::int32_t insert_at(std::int32_t n, const Key& key, Payload value) {
        if (n == kNil) {
            nodes_.push_back(Node{key, {value}});
            return static_cast<std::int32_t>(nodes_.size() - 1);
        }
        if (cmp_(key, nodes_[n].key)) {
            const std::int32_t child = insert_at(nodes_[n].left, key, value);
            nodes_[n].left = child;
        } else if (cmp_(nodes_[n].key, key)) {
            const std::int32_t child = insert_at(nodes_[n].right, key, value);
            nodes_[n].right = child;
        } else {
            nodes_[n].payload.push_back(value);
            return n;
        }
        update(n);
        const int bf = balance(n);
        if (bf > 1) {
            if (balance(nodes_[n].left) < 0)
                nodes_[n].left = rotate_left(nodes_[n].left);
            return rotate_right(n);
        }
        if (bf < -1) {
            if (balance(nodes_[n].right) > 0)
                nodes_[n].right = rotate_right(nodes_[n].right);
            return rotate_left(n);
        }
        return n;
    }

    void collect(std::int32_t n, const Key& low, const Key& high, std::vector<Payload>& out,
                 std::size_t& seen) const {
        if (n == kNil)
            return;
        ++seen;
        const Node& node = nodes_[n];
        const bool above_low = !cmp_(node.key, low);
        const bool below_high = !cmp_(high, node.key);
        if (above_low)
            collect(node.left, low, high, out, seen);
        if (above_low && below_high)
            out.insert(out.end(), node.payload.begin(), node.payload.end());
        if (below_high)
            collect(node.right, low, high, out, seen);
    }

    int audit_at(std::int32_t n, Audit& a) const {
        if (n == kNil)
            return 0;
        const int lh = audit_at(nodes_[n].left, a);
        const int rh = audit_at(nodes_[n].right, a);
        if (std::abs(lh - rh) > 1)
            a.balanced = false;
        const int height = 1 + std::max(lh, rh);
        if (height != nodes_[n].height)
            a.heights_consistent = false;
        a.count += nodes_[n].payload.size();
        return height;
    }

    std::vector<Node> nodes_;
    std::int32_t root_ = kNil;
    std::size_t count_ = 0;
    Compare cmp_;
};

/// FD-keyed index of domain ordinals.
using FdIndex = AvlIntervalIndex<double, std::uint32_t>;

/// Upper bound on AVL height for a tree holding `nodes` keys.
inline double avl_height_bound(std::size_t nodes) {
    return 1.4405 * std::log2(static_cast<double>(nodes) + 2.0);
}

/// Inserts every domain in raster order, so equal-FD payloads stay sorted by
/// domain index.
inline FdIndex build_index(const DomainPool& domains) {
    FdIndex index;
    for (std::size_t i = 0; i < domains.size(); ++i) {
        if (!domains.has_fd(i))
            throw std::invalid_argument("build_index: domain " + std::to_string(i) +
                                        " has no fractal dimension");
        index.insert(domains.fd(i), static_cast<std::uint32_t>(i));
    }
    return index;
}

inline std::uint32_t nearest_fd_domain(const FdIndex& index, double fd) {
    const auto* node = index.nearest(fd, [](double a, double b) { return std::abs(a - b); });
    if (node == nullptr)
        throw std::invalid_argument("nearest_fd_domain: empty index");
    return node->payload.front();
}

}  // namespace fic

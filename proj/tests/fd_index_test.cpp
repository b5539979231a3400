#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <numeric>
#include <set>

#include "fic/fd_index.hpp"
#include "test_support.hpp"

namespace fic {
namespace {

std::vector<std::uint32_t> linear_scan(const std::vector<std::pair<double, std::uint32_t>>& items, double lo,
                                       double hi) {
    std::vector<std::uint32_t> out;
    for (const auto& [k, v] : items)
        if (k >= lo && k <= hi)
            out.push_back(v);
    std::sort(out.begin(), out.end());
    return out;
}

// Height of a plain (unbalanced) BST built from the same keys.
std::size_t unbalanced_height(const std::vector<double>& keys) {
    struct N { double k; int l = -1, r = -1; };
    std::vector<N> nodes;
    std::size_t height = 0;
    for (double k : keys) {
        if (nodes.empty()) {
            nodes.push_back({k});
            height = 1;
            continue;
        }
        int cur = 0;
        std::size_t depth = 1;
        while (true) {
            ++depth;
            int& next = k < nodes[cur].k ? nodes[cur].l : nodes[cur].r;
            if (next < 0) {
                next = static_cast<int>(nodes.size());
                nodes.push_back({k});
                break;
            }
            cur = next;
        }
        height = std::max(height, depth);
    }
    return height;
}

TEST(FdIndex, SortedTripleRotatesToMiddleRoot) {
    FdIndex idx;
    idx.insert(1.0, 0);
    idx.insert(2.0, 1);
    idx.insert(3.0, 2);
    ASSERT_NE(idx.root(), nullptr);
    EXPECT_EQ(idx.root()->key, 2.0);
    EXPECT_EQ(idx.height(), 2);
}

TEST(FdIndex, DescendingAndZigZagCases) {
    FdIndex down;
    for (double k : {3.0, 2.0, 1.0})
        down.insert(k, 0);
    EXPECT_EQ(down.root()->key, 2.0);

    FdIndex lr;
    for (double k : {3.0, 1.0, 2.0})
        lr.insert(k, 0);
    EXPECT_EQ(lr.root()->key, 2.0);

    FdIndex rl;
    for (double k : {1.0, 3.0, 2.0})
        rl.insert(k, 0);
    EXPECT_EQ(rl.root()->key, 2.0);
}

TEST(FdIndex, DuplicateKeysMergeInInsertionOrder) {
    FdIndex idx;
    idx.insert(2.5, 5);
    idx.insert(2.5, 9);
    EXPECT_EQ(idx.node_count(), 1u);
    EXPECT_EQ(idx.size(), 2u);
    EXPECT_EQ(idx.root()->payload, (std::vector<std::uint32_t>{5, 9}));
    EXPECT_EQ(idx.range_query(2.5, 2.5), (std::vector<std::uint32_t>{5, 9}));
}

TEST(FdIndex, SortedInsertHeightBound) {
    FdIndex idx;
    std::vector<double> keys;
    for (int i = 0; i < 10000; ++i) {
        keys.push_back(2.0 + i * 1e-4);
        idx.insert(keys.back(), static_cast<std::uint32_t>(i));
    }
    EXPECT_LE(idx.height(), 19);
    EXPECT_LE(idx.height(), avl_height_bound(idx.node_count()));
    EXPECT_EQ(unbalanced_height(keys), 10000u);
    const auto audit = idx.audit();
    EXPECT_TRUE(audit.ordered);
    EXPECT_TRUE(audit.balanced);
    EXPECT_TRUE(audit.heights_consistent);
    EXPECT_EQ(audit.count, 10000u);
}

TEST(FdIndex, BalancedAfterEveryInsertion) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> key(0, 300);
    FdIndex idx;
    for (int i = 0; i < 2000; ++i) {
        idx.insert(2.0 + key(rng) / 300.0, static_cast<std::uint32_t>(i));
        const auto a = idx.audit();
        ASSERT_TRUE(a.balanced && a.ordered && a.heights_consistent) << "after insert " << i;
        ASSERT_EQ(a.count, idx.size());
    }
}

TEST(FdIndex, RangeQueryExamples) {
    FdIndex idx;
    idx.insert(2.1, 0);
    idx.insert(2.5, 1);
    idx.insert(2.9, 2);
    EXPECT_EQ(idx.range_query(2.4, 2.6), (std::vector<std::uint32_t>{1}));
    EXPECT_EQ(idx.range_query(2.0, 3.0), (std::vector<std::uint32_t>{0, 1, 2}));
    EXPECT_TRUE(idx.range_query(2.6, 2.8).empty());
    EXPECT_EQ(idx.range_query(2.1, 2.1), (std::vector<std::uint32_t>{0}));
    EXPECT_THROW(idx.range_query(2.6, 2.4), std::invalid_argument);
    EXPECT_EQ(idx.range_count(2.0, 2.5), 2u);
}

TEST(FdIndex, RangeQueryAscendingByKeyThenInsertion) {
    FdIndex idx;
    idx.insert(2.7, 10);
    idx.insert(2.2, 11);
    idx.insert(2.7, 12);
    idx.insert(2.4, 13);
    EXPECT_EQ(idx.range_query(2.0, 3.0), (std::vector<std::uint32_t>{11, 13, 10, 12}));
}

TEST(FdIndex, RandomQueriesMatchLinearScan) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(2.0, 3.0);
    std::uniform_int_distribution<int> coarse(0, 500);
    std::vector<std::pair<double, std::uint32_t>> items;
    FdIndex idx;
    for (std::uint32_t i = 0; i < 10000; ++i) {
        const double k = i % 3 ? u(rng) : 2.0 + coarse(rng) / 500.0;  // mix of unique and colliding keys
        items.emplace_back(k, i);
        idx.insert(k, i);
    }
    for (int q = 0; q < 500; ++q) {
        double lo = u(rng), hi = u(rng);
        if (lo > hi)
            std::swap(lo, hi);
        auto got = idx.range_query(lo, hi);
        EXPECT_EQ(got.size(), idx.range_count(lo, hi));
        std::sort(got.begin(), got.end());
        ASSERT_EQ(got, linear_scan(items, lo, hi));
    }
}

TEST(FdIndex, QueryVisitsLogarithmicPlusOutputNodes) {
    FdIndex idx;
    for (std::uint32_t i = 0; i < 1 << 14; ++i)
        idx.insert(static_cast<double>(i), i);
    std::size_t visited = 0;
    const auto hits = idx.range_query(1000.0, 1009.0, &visited);
    EXPECT_EQ(hits.size(), 10u);
    // Two root-to-leaf boundary paths plus the matched nodes.
    EXPECT_LE(visited, 2u * static_cast<std::size_t>(idx.height()) + hits.size());
}

TEST(FdIndex, NearestKey) {
    FdIndex idx;
    idx.insert(2.0, 7);
    idx.insert(2.5, 8);
    idx.insert(3.0, 9);
    EXPECT_EQ(nearest_fd_domain(idx, 2.3), 8u);
    EXPECT_EQ(nearest_fd_domain(idx, 2.25), 7u);  // tie goes to the smaller key
    EXPECT_EQ(nearest_fd_domain(idx, 2.75), 8u);
    EXPECT_EQ(nearest_fd_domain(idx, 5.0), 9u);
    EXPECT_THROW(nearest_fd_domain(FdIndex{}, 2.0), std::invalid_argument);
}

TEST(BuildIndex, EmptyAndFullCover) {
    EXPECT_EQ(build_index(DomainPool{}).size(), 0u);

    const Image img = testing::random_image(64, 64, 4);
    DomainPool pool = enumerate_domains(img, 16, 1);
    EXPECT_THROW(build_index(pool), std::invalid_argument);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> u(0, 100);
    for (std::size_t i = 0; i < pool.size(); ++i)
        pool.set_fd(i, 2.0 + u(rng) / 100.0);
    const FdIndex idx = build_index(pool);
    EXPECT_EQ(idx.size(), 2401u);
    auto all = idx.range_query(2.0, 3.0);
    std::sort(all.begin(), all.end());
    std::vector<std::uint32_t> expect(2401);
    std::iota(expect.begin(), expect.end(), 0u);
    EXPECT_EQ(all, expect);
}

}  // namespace
}  // namespace fic

#include <gtest/gtest.h>

#include <sstream>

#include "fic/bench.hpp"
#include "test_support.hpp"

namespace fic {
namespace {

TEST(SearchCounts, ExhaustiveTableRows) {
    struct Row { std::size_t n; std::uint64_t ranges, domains, comparisons; };
    const Row rows[] = {
        {64, 64, 2401, 153664},
        {128, 256, 12769, 3268864},
        {256, 1024, 58081, 59474944},
        {512, 4096, 247009, 1011748864},
        {1024, 16384, 1018081, 16680239104ull},
    };
    for (const auto& r : rows) {
        const auto c = search_counts(r.n, r.n);
        EXPECT_EQ(c.ranges, r.ranges) << r.n;
        EXPECT_EQ(c.domains, r.domains) << r.n;
        EXPECT_EQ(c.comparisons, r.comparisons) << r.n;
    }
    static_assert(search_counts(64, 64).comparisons == 153664);
}

TEST(SearchCounts, StrideAndIsometries) {
    EXPECT_EQ(search_counts(64, 64, 8, 16, 4, 1).domains, 13u * 13u);
    EXPECT_EQ(search_counts(64, 64, 8, 16, 4, 8).comparisons, 64u * 169u * 8u);
    EXPECT_EQ(search_counts(64, 32, 8, 16, 1, 1).domains, 49u * 17u);
}

TEST(SearchCounts, MatchesEnumeration) {
    for (std::size_t n : {64u, 96u, 128u})
        for (std::size_t stride : {1u, 3u, 4u})
            EXPECT_EQ(search_counts(n, n, 8, 16, stride).domains,
                      enumerate_domains(Image::filled(n, n, 0), 16, stride).size());
}

TEST(Synthetic, DeterministicInSeed) {
    EXPECT_EQ(synthetic_image(64, 7), synthetic_image(64, 7));
    EXPECT_NE(synthetic_image(64, 7), synthetic_image(64, 8));
    const Image img = synthetic_image(100, 1);
    EXPECT_EQ(img.width(), 100u);
    EXPECT_EQ(img.height(), 100u);
}

std::string strip_timing(const std::string& row) {
    std::vector<std::string> cols;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');)
        cols.push_back(c);
    cols.at(4) = cols.at(5) = "";
    std::string out;
    for (const auto& c : cols)
        out += c + ",";
    return out;
}

BenchOptions quick_options() {
    BenchOptions o;
    o.params.stride = 4;
    o.iterations = 4;
    return o;
}

TEST(Bench, RowsAreDeterministicApartFromTiming) {
    std::vector<CorpusImage> corpus{{"a", synthetic_image(64, 1), {}}, {"b", synthetic_image(32, 2), {}}};
    auto opts = quick_options();
    const auto r1 = run_bench(corpus, opts);
    opts.parallel_corpus = true;
    const auto r2 = run_bench(corpus, opts);
    ASSERT_EQ(r1.records.size(), 8u);
    ASSERT_EQ(r2.records.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i)
        EXPECT_EQ(strip_timing(csv_row(r1.records[i])), strip_timing(csv_row(r2.records[i])));
    EXPECT_EQ(r1.records[0].image_name, "a");
    EXPECT_EQ(r1.records[1].strategy, Strategy::NoSearch);
    EXPECT_EQ(r1.records[4].image_name, "b");
}

TEST(Bench, CsvHasFixedColumns) {
    std::vector<CorpusImage> corpus{{"img", synthetic_image(32, 3), {}}};
    auto opts = quick_options();
    opts.strategies = {Strategy::DynamicFd};
    const auto report = run_bench(corpus, opts);
    std::ostringstream os;
    write_csv(os, report.records);
    std::istringstream is(os.str());
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    EXPECT_EQ(header, kCsvHeader);
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
    EXPECT_EQ(row.rfind("img,32x32,dynamic,4,", 0), 0u) << row;
    EXPECT_EQ(report.records[0].compressed_bytes, 18u + 16u * 7u);
    EXPECT_EQ(report.records[0].decode_iterations, 4);
    ASSERT_TRUE(report.records[0].psnr.has_value());
}

TEST(Bench, CorruptedImageIsReportedAndSkipped) {
    const auto dir = testing::scratch_dir("bench_corpus");
    save_pgm(synthetic_image(32, 5), dir / "good.pgm");
    testing::write_bytes(dir / "bad.pgm", "P5\n32 32\n255\nshort");
    testing::write_bytes(dir / "notes.txt", "ignored");
    const auto corpus = load_corpus(dir);
    ASSERT_EQ(corpus.size(), 2u);
    EXPECT_EQ(corpus[0].name, "bad");
    EXPECT_FALSE(corpus[0].image.has_value());

    const auto report = run_bench(corpus, quick_options());
    ASSERT_EQ(report.failures.size(), 1u);
    EXPECT_EQ(report.failures[0].image_name, "bad");
    EXPECT_EQ(report.records.size(), 4u);
}

TEST(Bench, OddSizedImageFailsOnlyItsOwnRuns) {
    std::vector<CorpusImage> corpus{{"odd", Image::filled(36, 32, 9), {}}, {"ok", synthetic_image(32, 6), {}}};
    const auto report = run_bench(corpus, quick_options());
    EXPECT_EQ(report.failures.size(), 4u);
    EXPECT_EQ(report.records.size(), 4u);
}

TEST(Bench, ExhaustiveSkippedAboveLimit) {
    std::vector<CorpusImage> corpus{{"big", synthetic_image(64, 1), {}}};
    auto opts = quick_options();
    opts.exhaustive_max_side = 32;
    const auto report = run_bench(corpus, opts);
    EXPECT_EQ(report.records.size(), 3u);
    ASSERT_EQ(report.skipped.size(), 1u);
    EXPECT_EQ(report.skipped[0], "big/exhaustive");
}

TEST(Bench, ReconstructionsAreWritten) {
    const auto dir = testing::scratch_dir("bench_recon");
    std::vector<CorpusImage> corpus{{"r", synthetic_image(32, 4), {}}};
    auto opts = quick_options();
    opts.strategies = {Strategy::NoSearch};
    opts.reconstruction_dir = dir;
    run_bench(corpus, opts);
    EXPECT_EQ(load_pgm(dir / "r_nosearch.pgm").width(), 32u);
}

}  // namespace
}  // namespace fic

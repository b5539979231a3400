// fic: encode, decode and benchmark fractal image codes.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fic/fic.hpp"

namespace {

struct CommonParams {
    std::size_t range_size = 8;
    std::size_t domain_size = 16;
    std::size_t stride = 1;
    bool isometries = false;
    bool fd_on_downsampled = false;
    double max_contrast = fic::kMaxContrast;
    unsigned threads = 1;

    void add_to(CLI::App* app) {
        app->add_option("--range-size", range_size, "Range block side in pixels")->check(CLI::PositiveNumber);
        app->add_option("--domain-size", domain_size, "Domain block side (must be 2x range)")->check(CLI::PositiveNumber);
        app->add_option("--stride", stride, "Domain enumeration step")->check(CLI::PositiveNumber);
        app->add_flag("--isometries", isometries, "Search all 8 dihedral orientations");
        app->add_flag("--fd-downsampled", fd_on_downsampled, "Compute domain FD after 2x2 downsampling");
        app->add_option("--max-contrast", max_contrast, "Encoder bound on |s|")->check(CLI::Range(0.0, 1.0));
        app->add_option("--threads", threads, "Worker threads for range search")->check(CLI::PositiveNumber);
    }

    fic::EncodeParams to_params() const {
        fic::EncodeParams p;
        p.range_size = range_size;
        p.domain_size = domain_size;
        p.stride = stride;
        p.isometries = isometries;
        p.fd_on_downsampled = fd_on_downsampled;
        p.max_contrast = max_contrast;
        p.threads = threads;
        return p;
    }
};

void print_counts_table(std::ostream& os, const std::vector<std::size_t>& sizes, const fic::EncodeParams& p) {
    os << "image_size,range_blocks,domains,exhaustive_comparisons\n";
    for (std::size_t n : sizes) {
        const auto c = fic::search_counts(n, n, p.range_size, p.domain_size, p.stride, p.isometries ? 8 : 1);
        os << n << 'x' << n << ',' << c.ranges << ',' << c.domains << ',' << c.comparisons << '\n';
    }
}

int run_encode(const std::string& in, const std::string& out, const std::string& strategy, const CommonParams& cp) {
    const fic::Image image = fic::load_pgm(in);
    const auto result = fic::encode(image, fic::parse_strategy(strategy), cp.to_params());
    fic::write_code(result.code, out);
    const auto record = fic::make_run_record(std::filesystem::path(in).stem().string(), result,
                                             fic::serialized_size(result.code));
    std::cout << fic::csv_row(record) << '\n';
    return 0;
}

int run_decode(const std::string& in, const std::string& out, int iterations, const std::string& initial,
               const std::string& reference) {
    const fic::FractalCode code = fic::read_code(in);
    std::optional<fic::Image> start;
    if (!initial.empty())
        start = fic::load_pgm(initial);
    const fic::Image image = fic::decode(code, iterations, start);
    fic::save_pgm(image, out);
    if (!reference.empty()) {
        const auto report = fic::fidelity(fic::load_pgm(reference), image);
        std::cout << "rms " << report.rms << " psnr " << report.psnr.to_string() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractal image codec with FD-classified domain search"};
    app.require_subcommand(1);

    CommonParams enc_params;
    std::string enc_in, enc_out, enc_strategy = "dynamic";
    auto* enc = app.add_subcommand("encode", "Encode a PGM image into a fractal code file");
    enc->add_option("input", enc_in, "Input PGM")->required();
    enc->add_option("output", enc_out, "Output code file")->required();
    enc->add_option("--strategy", enc_strategy, "Domain search strategy")
        ->check(CLI::IsMember({"exhaustive", "nosearch", "static2", "dynamic"}));
    enc_params.add_to(enc);

    std::string dec_in, dec_out, dec_initial, dec_reference;
    int dec_iterations = fic::kDefaultDecodeIterations;
    auto* dec = app.add_subcommand("decode", "Decode a fractal code file into a PGM image");
    dec->add_option("input", dec_in, "Input code file")->required();
    dec->add_option("output", dec_out, "Output PGM")->required();
    dec->add_option("--iterations", dec_iterations, "Decoder iterations")->check(CLI::PositiveNumber);
    dec->add_option("--initial", dec_initial, "Initial image (default uniform gray 128)");
    dec->add_option("--reference", dec_reference, "Original image; prints RMS and PSNR");

    CommonParams bench_params;
    std::string corpus_dir, csv_path, recon_dir;
    std::vector<std::string> strategies{"exhaustive", "nosearch", "static2", "dynamic"};
    int bench_iterations = fic::kDefaultDecodeIterations;
    std::optional<std::uint64_t> seed;
    bool include_1024 = false, parallel = false;
    std::size_t exhaustive_max = 512;
    auto* bench = app.add_subcommand("bench", "Run every strategy over an image corpus");
    bench->add_option("corpus", corpus_dir, "Directory of PGM images");
    bench->add_option("--strategies", strategies, "Strategies to run")
        ->delimiter(',')
        ->check(CLI::IsMember({"exhaustive", "nosearch", "static2", "dynamic"}));
    bench->add_option("--csv", csv_path, "CSV output path (default stdout)");
    bench->add_option("--iterations", bench_iterations, "Decoder iterations")->check(CLI::PositiveNumber);
    bench->add_option("--seed", seed, "Add synthetic images 64..512 generated from this seed");
    bench->add_flag("--include-1024", include_1024, "Also generate a 1024x1024 synthetic image");
    bench->add_option("--exhaustive-max-side", exhaustive_max, "Skip exhaustive search above this side");
    bench->add_flag("--parallel", parallel, "Process corpus entries concurrently");
    bench->add_option("--reconstructions", recon_dir, "Directory for decoded PGMs");
    bench_params.add_to(bench);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*enc)
            return run_encode(enc_in, enc_out, enc_strategy, enc_params);
        if (*dec)
            return run_decode(dec_in, dec_out, dec_iterations, dec_initial, dec_reference);

        if (corpus_dir.empty() && !seed) {
            std::cerr << "error: bench needs a corpus directory or --seed\n";
            return 2;
        }
        std::vector<fic::CorpusImage> corpus;
        if (!corpus_dir.empty())
            corpus = fic::load_corpus(corpus_dir);
        if (seed) {
            std::vector<std::size_t> sizes{64, 128, 256, 512};
            if (include_1024)
                sizes.push_back(1024);
            for (std::size_t n : sizes)
                corpus.push_back({"synthetic" + std::to_string(n), fic::synthetic_image(n, *seed + n), {}});
        }

        fic::BenchOptions opts;
        opts.strategies.clear();
        for (const auto& s : strategies)
            opts.strategies.push_back(fic::parse_strategy(s));
        opts.params = bench_params.to_params();
        opts.iterations = bench_iterations;
        opts.exhaustive_max_side = exhaustive_max;
        opts.parallel_corpus = parallel;
        if (!recon_dir.empty()) {
            std::filesystem::create_directories(recon_dir);
            opts.reconstruction_dir = recon_dir;
        }
        if (parallel)
            std::cerr << "warning: parallel corpus processing makes timing columns unreliable\n";

        std::vector<std::size_t> sizes;
        for (const auto& c : corpus)
            if (c.image && c.image->width() == c.image->height() &&
                std::find(sizes.begin(), sizes.end(), c.image->width()) == sizes.end())
                sizes.push_back(c.image->width());
        std::sort(sizes.begin(), sizes.end());
        if (include_1024 && std::find(sizes.begin(), sizes.end(), 1024) == sizes.end())
            sizes.push_back(1024);
        print_counts_table(std::cerr, sizes, opts.params);

        const auto report = fic::run_bench(corpus, opts);
        for (const auto& f : report.failures)
            std::cerr << "skipped " << f.image_name << ": " << f.message << '\n';
        for (const auto& s : report.skipped)
            std::cerr << "not run " << s << " (exceeds --exhaustive-max-side)\n";

        if (csv_path.empty()) {
            fic::write_csv(std::cout, report.records);
        } else {
            std::ofstream csv(csv_path, std::ios::trunc);
            if (!csv)
                throw std::runtime_error("cannot open '" + csv_path + "' for writing");
            fic::write_csv(csv, report.records);
        }
        if (report.records.empty()) {
            std::cerr << "error: every benchmark run failed\n";
            return 1;
        }
        return 0;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
}

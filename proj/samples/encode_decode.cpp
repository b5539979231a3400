// Encodes a PGM with every strategy and prints time, pool size and PSNR.
//
//   encode_decode_sample image.pgm [stride]

#include <cstdio>
#include <cstdlib>

#include "fic/fic.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s image.pgm [stride]\n", argv[0]);
        return 2;
    }
    const fic::Image image = fic::load_pgm(argv[1]);
    fic::EncodeParams params;
    params.stride = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 4;

    for (fic::Strategy s : fic::kAllStrategies) {
        const auto enc = fic::encode(image, s, params);
        const auto decoded = fic::decode(enc.code);
        const auto fid = fic::fidelity(image, decoded);
        std::printf("%-10s %8.3fs  pool %9.1f / %zu  psnr %s dB\n",
                    std::string(fic::to_string(s)).c_str(), enc.stats.wall_seconds,
                    enc.stats.mean_pool_size, enc.stats.domain_count, fid.psnr.to_string().c_str());
    }
    return 0;
}

// Acceptance battery: one PASS/FAIL line per criterion.
#include <array>
#include <cstdio>
#include <iostream>
#include <string>

#include "affine/suite.hpp"

namespace
{
//! Runs the CLI suite and returns the "hash" line's value.
std::string cli_hash(std::string const& cli, unsigned threads, std::size_t paths)
{
    std::string cmd = "'" + cli + "' --seed 7 --threads " + std::to_string(threads)
                      + " suite --paths " + std::to_string(paths) + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        return {};
    std::array<char, 4096> buf;
    std::string hash;
    while (fgets(buf.data(), buf.size(), pipe))
    {
        std::string line(buf.data());
        if (line.rfind("hash ", 0) == 0)
            hash = line.substr(5, 16);
    }
    pclose(pipe);
    return hash;
}

}  // namespace

int main(int argc, char** argv)
{
    if (argc < 3)
    {
        std::cerr << "usage: acceptance MODELS_DIR AFFINE_ERGO [PATHS [DETERMINISM_PATHS]]\n";
        return 64;
    }
    affine::SuiteOptions opts;
    opts.models_dir = argv[1];
    std::string cli = argv[2];
    if (argc > 3)
        opts.paths = std::stoul(argv[3]);
    std::size_t det_paths = argc > 4 ? std::stoul(argv[4]) : 4000;

    int failed = 0;
    for (auto const& r : affine::run_suite(opts))
    {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.id << ". " << r.name << ": "
                  << r.detail << " [" << r.seconds << " s]" << std::endl;
        failed += !r.pass;
    }

    auto h1 = cli_hash(cli, 1, det_paths);
    auto h8 = cli_hash(cli, 8, det_paths);
    bool same = !h1.empty() && h1 == h8;
    std::cout << (same ? "PASS" : "FAIL") << "  10. Determinism: suite --seed 7 at "
              << det_paths << " paths, threads 1 hash " << (h1.empty() ? "?" : h1)
              << ", threads 8 hash " << (h8.empty() ? "?" : h8) << std::endl;
    failed += !same;

    std::cout << (failed ? "FAILED " : "ALL PASSED ") << 10 - failed << "/10" << std::endl;
    return failed ? 1 : 0;
}

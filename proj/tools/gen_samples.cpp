// Regenerates the bundled sample corpus under samples/ (or a given directory).
#include <cstdio>
#include <exception>
#include <string>

#include "metareduce/synth.hpp"

int main(int argc, char** argv) {
    std::string dir = argc > 1 ? argv[1] : "samples";
    try {
        metareduce::synth::write_sample_files(dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    std::printf("wrote sample corpus to %s\n", dir.c_str());
    return 0;
}

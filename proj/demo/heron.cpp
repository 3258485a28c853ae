// Heron's square-root iteration through the generic chain engine: the engine's
// certified bound decays geometrically while the iterates converge quadratically.
#include <cstdio>

#include "picard/bench.hpp"

int main()
{
    const auto demo = picard::heron_demo(2.0, 2.0, 8);
    std::printf("%3s %24s %24s\n", "n", "|x_n - sqrt(2)|", "chain bound");
    for (std::size_t n = 0; n < demo.errors.size(); ++n)
        std::printf("%3zu %24.17g %24.17g\n", n, demo.errors[n], demo.chain_bounds[n]);
    std::printf("decay: %s\n", picard::to_string(demo.classification).c_str());
}

// Prints rate-versus-squeezing curves (rate maximized over y) for a few
// memory degrees at nbar = 2, N = 2/3.

#include <cstdio>
#include <vector>

#include "memchan/memchan.hpp"

int main() {
    using namespace memchan;
    const double nbar = 2.0;
    const double noise = 2.0 / 3.0;
    for (int n : {2, 3}) {
        std::printf("n = %d\n  %6s %10s %10s %10s\n", n, "r", "s=0", "s=0.1", "s=0.2");
        for (int i = 0; i <= 10; ++i) {
            const double r = 0.03 * i;
            std::printf("  %6.3f", r);
            for (double s : {0.0, 0.1, 0.2}) {
                const RateResult best = max_over_y(ChannelParams::make(n, noise, s), nbar, r);
                std::printf(" %10.6f", best.rate);
            }
            std::printf("\n");
        }
    }
}

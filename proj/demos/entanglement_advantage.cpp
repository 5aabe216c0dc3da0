// Joint (r, y) optimum against the memoryless rate for one channel.

#include <cstdio>

#include "memchan/memchan.hpp"

int main() {
    using namespace memchan;
    const ChannelParams channel = ChannelParams::make(2, 2.0 / 3.0, 0.2);
    const double nbar = 2.0;

    const RateResult memoryless = transmission_rate(ChannelParams::make(2, 2.0 / 3.0, 0.0), {nbar, 0.0, 0.0, {}});
    const RateResult best = max_over_ry(channel, nbar);
    std::printf("memoryless rate    %.8f bits/use\n", memoryless.rate);
    std::printf("s = 0.2 optimum    %.8f bits/use at r* = %.5f, y* = %.5f\n", best.rate, best.input.r,
                best.input.y);
    std::printf("squeezed photons   %.6f of %.1f\n", best.squeezed_photons, nbar);
}

#pragma once

#include <cstdint>
#include <random>

namespace flashsim {

// splitmix64 finaliser; decorrelates consecutive seeds.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent per-frame stream: hash(master, lane indices) -> engine seed.
// Every frame owns its stream, so results do not depend on scheduling.
inline std::mt19937_64 make_stream(uint64_t master, uint64_t point, uint64_t frame) {
    uint64_t s = mix64(master ^ mix64(point + 0x517cc1b727220a95ULL));
    s = mix64(s ^ mix64(frame + 0x2545f4914f6cdd1dULL));
    return std::mt19937_64(s);
}

}  // namespace flashsim

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace diarist {

// 64-bit FNV-1a. Stable across platforms and runs.
class Fnv1a {
public:
    static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

    explicit Fnv1a(std::uint64_t seed = kOffset) : state_(seed) {}

    Fnv1a& update(std::string_view bytes) {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= kPrime;
        }
        return *this;
    }

    Fnv1a& update_byte(unsigned char c) {
        state_ ^= c;
        state_ *= kPrime;
        return *this;
    }

    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = Fnv1a::kOffset) {
    return Fnv1a(seed).update(bytes).digest();
}

// splitmix64 finalizer; spreads FNV output bits before they are used as indices.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string to_hex(std::uint64_t value);

}  // namespace diarist

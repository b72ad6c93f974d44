#pragma once

#include <cstdint>
#include <numeric>

namespace retro {

using u128 = unsigned __int128;

/// Non-negative rational with bounded denominator, used for exact radius and
/// tolerance comparisons against integer squared distances. Denominators are
/// kept under 2^44: values are reduced first and floor- or ceil-rounded to a
/// dyadic fraction only when reduction is not enough, with the caller picking
/// the safe rounding direction.
struct Frac {
    u128 num = 0;
    u128 den = 1;

    static u128 gcd128(u128 a, u128 b) {
        while (b) {
            const u128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }

    void reduce() {
        const u128 g = gcd128(num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    static constexpr u128 kMaxDen = u128{1} << 44;

    /// Rounds to denominator 2^40 when the exact denominator is too large.
    /// round_up=false floors (shrinks the value), round_up=true ceils.
    void normalize(bool round_up) {
        reduce();
        if (den <= kMaxDen) return;
        const u128 d2 = u128{1} << 40;
        u128 n2 = (num / den) * d2 + ((num % den) * d2) / den;
        if (round_up && ((num % den) * d2) % den != 0) ++n2;
        num = n2;
        den = d2;
        reduce();
    }

    static Frac make(u128 n, u128 d, bool round_up) {
        Frac f{n, d};
        f.normalize(round_up);
        return f;
    }

    Frac mul(const Frac& o, bool round_up) const {
        return make(num * o.num, den * o.den, round_up);
    }

    bool is_zero() const { return num == 0; }

    /// value <= this
    bool ge_int(u128 value) const { return value * den <= num; }
    /// value < this
    bool gt_int(u128 value) const { return value * den < num; }
    /// this < value
    bool lt_int(u128 value) const { return num < value * den; }

    friend bool operator<(const Frac& a, const Frac& b) { return a.num * b.den < b.num * a.den; }
    friend bool operator<=(const Frac& a, const Frac& b) { return a.num * b.den <= b.num * a.den; }
};

}  // namespace retro

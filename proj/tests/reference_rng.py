#!/usr/bin/env python3
"""Independent reference implementation of the counter-based stream pipeline.

Mirrors the production generator from its written definition (10-round
4x64 counter block cipher with the standard multiplier/Weyl constants, 53-bit
centered uniforms, inverse-CDF normals) but shares no code with it. The
normal quantile here is computed by bisecting math.erfc rather than by the
production rational approximation, so agreement is a two-route check.

Run to regenerate the golden tables embedded in the stream unit tests.
"""

import math

M0 = 0xD2E7470EE14C6C93
M1 = 0xCA5A826395121157
W0 = 0x9E3779B97F4A7C15
W1 = 0xBB67AE8584CAA73B
MASK = (1 << 64) - 1


def philox_block(ctr, key):
    c = list(ctr)
    k = list(key)
    for _ in range(10):
        p0 = M0 * c[0]
        p1 = M1 * c[2]
        c = [
            ((p1 >> 64) ^ c[1] ^ k[0]) & MASK,
            p1 & MASK,
            ((p0 >> 64) ^ c[3] ^ k[1]) & MASK,
            p0 & MASK,
        ]
        k[0] = (k[0] + W0) & MASK
        k[1] = (k[1] + W1) & MASK
    return c


def stream_u64(seed, tag, index, count, sub=()):
    """First `count` words of the stream (seed, tag, index) with optional
    nested sub-stream indices (depth <= 2, slot j stored as j + 1)."""
    ctr = [0, index, 0, 0]
    for depth, j in enumerate(sub):
        ctr[2 + depth] = j + 1
    out = []
    while len(out) < count:
        out.extend(philox_block(ctr, [seed, tag]))
        ctr[0] += 1
    return out[:count]


def to_uniform(x):
    return ((x >> 11) + 0.5) * 2.0**-53


def normal_quantile(p):
    """Inverse standard normal CDF by bisection on erfc (independent of any
    rational-polynomial approximation)."""
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(-mid / math.sqrt(2.0)) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def main():
    words = stream_u64(7, 1, 0, 8)
    print("stream(7,1,0) first words:")
    for w in words:
        print(f"  0x{w:016x}")
    print("stream(7,1,0).sub(0) first word: 0x%016x" % stream_u64(7, 1, 0, 1, sub=(0,))[0])
    print("stream(7,1,0).sub(0).sub(1) first word: 0x%016x"
          % stream_u64(7, 1, 0, 1, sub=(0, 1))[0])
    print("stream(7,2,0) first word: 0x%016x" % stream_u64(7, 2, 0, 1)[0])
    print("stream(7,1,1) first word: 0x%016x" % stream_u64(7, 1, 1, 1)[0])
    print("stream(8,1,0) first word: 0x%016x" % stream_u64(8, 1, 0, 1)[0])
    print("uniforms:")
    for w in words[:4]:
        print(f"  {to_uniform(w):.17g}")
    print("normals:")
    for w in words[:4]:
        print(f"  {normal_quantile(to_uniform(w)):.17g}")
    for p in (0.025, 0.5, 0.975, 1e-12, 1.0 - 1e-12, 0.31):
        print(f"quantile({p!r}) = {normal_quantile(p):.17g}")


if __name__ == "__main__":
    main()

"""Seeded random streams.

The generator is xorshift64* (Vigna, 2016) seeded through one round of
splitmix64.  Both are fixed here so that a seed names the same transcript on
any platform; numpy/random are not used for anything that reaches a transcript.

Derived streams: trial ``k`` under master seed ``s`` uses the generator
seeded with ``s ^ k``; the seeding round of splitmix64 does the mixing.
"""

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    return (seed ^ index) & MASK64


class XorShift64Star:
    """xorshift64* with shifts (12, 25, 27) and multiplier 0x2545F4914F6CDD1D."""

    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        # the all-zero state is a fixed point
        self.state = state or 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def random(self) -> float:
        """Uniform float in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, bound: int) -> int:
        """Integer in [0, bound) by multiply-shift.

        Uses one more 64-bit word than ``bound`` needs, most significant word
        drawn first, so the bias stays below ``2**-64``.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        words = (bound.bit_length() + 63) // 64 + 1
        acc = 0
        for _ in range(words):
            acc = (acc << 64) | self.next_u64()
        return (acc * bound) >> (64 * words)

    def bit(self) -> int:
        return self.next_u64() >> 63

"""Counter-based random streams.

Every stochastic element of a run owns a stream keyed by
(run seed, stream kind, element label). Draw i of a stream is a pure
function of (key, i), so streams never interact: adding a sensor or an
actor to a scenario cannot perturb the draws of any existing stream.
"""

from dtss import kernels

_M64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _M64
    return h


def stream_key(seed: int, kind: str, label: str = "") -> int:
    """Derive the 64-bit key of stream (seed, kind, label)."""
    h = _fnv1a(f"{kind}/{label}".encode("utf-8"))
    return kernels.mix64((seed & _M64) ^ kernels.mix64(h))


class Stream:
    """Sequential view over one counter-based stream."""

    __slots__ = ("key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self.key = key
        self.counter = counter

    @classmethod
    def for_element(cls, seed: int, kind: str, label: str = "") -> "Stream":
        return cls(stream_key(seed, kind, label))

    def uniform(self) -> float:
        v = kernels.u01(self.key, self.counter)
        self.counter += 1
        return v

    def normal(self) -> float:
        v = kernels.std_normal(self.key, self.counter)
        self.counter += 1
        return v

    def uniform_at(self, counter: int) -> float:
        """Random-access draw; does not advance the sequential counter."""
        return kernels.u01(self.key, counter)

    def choice_index(self, n: int) -> int:
        return min(int(self.uniform() * n), n - 1)


def unit_vector(label: str, dim: int = 128) -> list[float]:
    """Deterministic unit-norm feature vector derived from a label.

    Used wherever abstract biometric features are needed; two distinct
    labels give (with overwhelming probability) nearly-orthogonal vectors
    in high dimension.
    """
    key = stream_key(0, "feature", label)
    vals = [kernels.norm_inv(kernels.u01(key, i)) for i in range(dim)]
    norm = sum(v * v for v in vals) ** 0.5
    return [v / norm for v in vals]

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

KINDS = ("linear", "polynomial", "gaussian")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice.

    ``polynomial`` is ``(u.v + offset)**degree`` with ``offset = 0`` unless
    explicitly configured; ``gaussian`` is ``exp(-gamma * |u - v|**2)``.
    """

    kind: str = "linear"
    degree: int = 2
    gamma: float = 0.5
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError("polynomial degree must be an integer >= 1")
        if not self.gamma > 0:
            raise ValueError("gaussian gamma must be > 0")

    @property
    def label(self) -> str:
        if self.kind == "polynomial":
            names = {2: "quadratic", 3: "cubic"}
            base = names.get(self.degree, f"poly{self.degree}")
            return base if self.offset == 0 else f"{base}+{self.offset:g}"
        if self.kind == "gaussian" and self.gamma != 0.5:
            return f"gaussian(gamma={self.gamma:g})"
        return self.kind

    @classmethod
    def parse(cls, name: str) -> "KernelSpec":
        """Build a spec from a short name: linear, quadratic, cubic, polyN, gaussian, gaussian:G.

        A ``+k`` suffix on a polynomial name sets the offset, e.g. ``quadratic+1``.
        """
        name = name.strip().lower()
        if "+" in name:
            base, _, off = name.partition("+")
            return replace(cls.parse(base), offset=float(off))
        if name == "linear":
            return cls("linear")
        if name == "quadratic":
            return cls("polynomial", degree=2)
        if name == "cubic":
            return cls("polynomial", degree=3)
        if name.startswith("poly"):
            return cls("polynomial", degree=int(name[4:] or 2))
        if name.startswith(("gaussian", "rbf")):
            _, _, g = name.partition(":")
            return cls("gaussian", gamma=float(g) if g else 0.5)
        raise ValueError(f"unrecognized kernel name {name!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def kernel_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == "linear":
        return A @ B.T
    if spec.kind == "polynomial":
        return (A @ B.T + spec.offset) ** spec.degree
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-spec.gamma * np.maximum(sq, 0.0))


def kernel_eval(spec: KernelSpec, u, v) -> float:
    u = np.asarray(u, float).ravel()
    v = np.asarray(v, float).ravel()
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if spec.kind == "linear":
        return float(u @ v)
    if spec.kind == "polynomial":
        return float((u @ v + spec.offset) ** spec.degree)
    d = u - v
    return float(np.exp(-spec.gamma * (d @ d)))

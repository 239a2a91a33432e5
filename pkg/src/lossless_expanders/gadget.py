"""Random constant-size lossless gadgets and their exact certification."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from fractions import Fraction

import numpy as np

from .enumeration import enumerate_worst, max_set_size
from .errors import SearchExhausted, ValidationError
from .graph import BipartiteGraph

SEED_MOD = 2**64

# Engineering defaults; the asymptotic statements only fix these up to constants.
D0_CONSTANT = 4.0
MU0_DIVISOR = 8.0


def exact(x) -> Fraction:
    """Exact rational for a user-facing real, reading floats by their repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(repr(float(x)))


def suggest_d0(eps0: float, beta0: float) -> int:
    """ceil(4 ln(e / (eps0 beta0)) / eps0), at least 1."""
    return max(1, math.ceil(D0_CONSTANT * math.log(math.e / (eps0 * beta0)) / eps0 - 1e-9))


def suggest_mu0(eps0: float, beta0: float, d0: int) -> float:
    return eps0 * beta0 / (MU0_DIVISOR * d0)


@dataclass(frozen=True)
class GadgetSpec:
    n: int
    beta0: float
    d0: int
    mu0: float
    eps0: float

    def __post_init__(self):
        if self.n <= 0 or self.d0 <= 0:
            raise ValidationError("n and d0 must be positive")
        if not 0 < self.beta0:
            raise ValidationError("beta0 must be positive")
        if not 0 < self.mu0 <= 1:
            raise ValidationError("mu0 must lie in (0, 1]")
        if not 0 <= self.eps0 < 1:
            raise ValidationError("eps0 must lie in [0, 1)")
        if self.right_count < self.d0:
            raise ValidationError(
                f"floor(beta0 n) = {self.right_count} < d0 = {self.d0}: no simple gadget exists"
            )
        if self.max_size < 1:
            raise ValidationError("floor(mu0 n) = 0: certificate would be vacuous")

    @property
    def right_count(self) -> int:
        return math.floor(self.beta0 * self.n + 1e-9)

    @property
    def max_size(self) -> int:
        return max_set_size(self.mu0, self.n)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class GadgetCertificate:
    graph_hash: str
    mu: float
    eps: float
    max_size: int
    exhaustive: bool
    worst_ratio: Fraction
    witness: tuple[int, ...]
    passed: bool
    sets_examined: int
    sets_evaluated: int
    spec: GadgetSpec | None = None
    attempts: int | None = None

    def to_dict(self):
        out = {
            "spec": self.spec.to_dict() if self.spec else None,
            "graph_hash": self.graph_hash,
            "mu": self.mu,
            "eps": self.eps,
            "max_size": self.max_size,
            "exhaustive": self.exhaustive,
            "worst_ratio": float(self.worst_ratio),
            "worst_ratio_exact": [self.worst_ratio.numerator, self.worst_ratio.denominator],
            "witness": list(self.witness),
            "passed": self.passed,
            "sets_examined": self.sets_examined,
            "sets_evaluated": self.sets_evaluated,
        }
        if self.attempts is not None:
            out["attempts"] = self.attempts
        return out


def generate_random_gadget(spec: GadgetSpec, seed: int) -> BipartiteGraph:
    """Each left vertex picks d0 distinct right vertices uniformly, independently."""
    rng = np.random.default_rng(seed % SEED_MOD)
    m = spec.right_count
    rows = tuple(
        tuple(sorted(rng.choice(m, spec.d0, replace=False).tolist())) for _ in range(spec.n)
    )
    return BipartiteGraph(spec.n, m, rows)


def certify_lossless_exact(
    g: BipartiteGraph,
    mu: float,
    eps: float,
    budget: int | None = None,
    threads: int = 1,
    spec: GadgetSpec | None = None,
) -> GadgetCertificate:
    """Check |N(S)| >= (1 - eps) d |S| for every left S with |S| <= floor(mu |L|).

    Never returns a partial answer: BudgetExceeded is raised instead.
    """
    res = enumerate_worst(g, max_set_size(mu, g.left_count), budget=budget, threads=threads)
    worst = res.worst_ratio
    return GadgetCertificate(
        graph_hash=g.content_hash(),
        mu=mu,
        eps=eps,
        max_size=res.max_size,
        exhaustive=True,
        worst_ratio=worst,
        witness=res.witness,
        passed=worst >= 1 - exact(eps),
        sets_examined=res.covered,
        sets_evaluated=res.evaluated,
        spec=spec,
    )


def search_gadget(
    spec: GadgetSpec,
    max_attempts: int,
    seed: int,
    budget: int | None = None,
    threads: int = 1,
):
    """Generate-and-certify until a gadget passes.

    Attempt ``i`` uses seed ``seed + i``. Returns ``(graph, certificate)``
    with ``certificate.attempts`` set; raises SearchExhausted carrying the
    best candidate otherwise.
    """
    if max_attempts < 1:
        raise ValidationError("max_attempts must be >= 1")
    best = None
    for attempt in range(max_attempts):
        g = generate_random_gadget(spec, seed + attempt)
        cert = certify_lossless_exact(g, spec.mu0, spec.eps0, budget, threads, spec)
        cert = replace(cert, attempts=attempt + 1)
        if cert.passed:
            return g, cert
        if best is None or cert.worst_ratio > best[1].worst_ratio:
            best = (g, cert)
    raise SearchExhausted(
        f"no gadget certified in {max_attempts} attempts "
        f"(best worst ratio {float(best[1].worst_ratio):.4f})",
        best=best,
        attempts=max_attempts,
    )


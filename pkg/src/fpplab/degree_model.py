"""Degree laws, size biasing, and the analytic constants.

Everything here is exact finite-support arithmetic: a degree law is a
probability mass function on positive integers, its size-biased companion
q_k = (k+1) p_{k+1} / mu drives a Galton-Watson picture whose extinction
probability lambda (smallest fixed point of the generating function) and
derivative lambda_* = phi_q'(lambda) determine, together with the minimum
degree, the weighted-diameter and flooding-time limits

    diam_w / log n -> 1/(nu-1) + 2/Gamma(d_min),
    flood_w / log n -> 1/(nu-1) + 1/Gamma(d_min),

with Gamma(d) = d for d >= 3, 2(1-q_1) for d = 2, and 1-lambda_* for
d = 1.  The 2-core companion constants (thinning fixed point p_hat and
the core degree law) live here as well so that graph-level measurements
elsewhere can be compared against them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma, log

import numpy as np

from .errors import (
    InvalidArgumentError,
    InvalidLawError,
    LawFormatError,
    NumericError,
    SupercriticalityError,
)

_PROB_TOL = 1e-12
_RENORM_TOL = 1e-9


def _as_support(pairs) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (k, mass) arrays with zero atoms dropped."""
    items = sorted((int(k), float(p)) for k, p in pairs)
    ks = np.array([k for k, p in items if p != 0.0], dtype=np.int64)
    ps = np.array([p for k, p in items if p != 0.0], dtype=np.float64)
    return ks, ps


@dataclass(frozen=True)
class DegreeLaw:
    """PMF over positive integer degrees, explicit or expanded from a family."""

    ks: np.ndarray
    ps: np.ndarray
    family_tag: str = "explicit"

    def __post_init__(self):
        if self.ks.size == 0:
            raise InvalidLawError("empty support")
        if self.ks.min() < 1:
            raise InvalidLawError("degrees must be >= 1 (isolated vertices excluded)")
        if np.any(self.ps <= 0) or np.any(self.ps > 1):
            raise InvalidLawError("masses must lie in (0, 1]")
        if len(np.unique(self.ks)) != len(self.ks):
            raise InvalidLawError("duplicate degree atoms")
        total = float(self.ps.sum())
        if abs(total - 1.0) > _PROB_TOL:
            raise InvalidLawError(f"masses sum to {total!r}, not 1 within {_PROB_TOL}")
        if not np.isfinite(self.mu) or self.mu <= 0:
            raise InvalidLawError("mean degree must be finite and positive")

    # -- constructors -------------------------------------------------

    @classmethod
    def explicit(cls, pairs, renormalize=False) -> "DegreeLaw":
        ks, ps = _as_support(pairs.items() if isinstance(pairs, dict) else pairs)
        total = ps.sum()
        if renormalize:
            if abs(total - 1.0) > _RENORM_TOL:
                raise InvalidLawError(
                    f"masses sum to {total!r}; renormalization only within {_RENORM_TOL}"
                )
            ps = ps / total
        return cls(ks, ps, "explicit")

    @classmethod
    def regular(cls, d: int) -> "DegreeLaw":
        if d < 1:
            raise InvalidLawError("regular degree must be >= 1")
        return cls(np.array([d]), np.array([1.0]), f"regular({d})")

    @classmethod
    def truncated_poisson(cls, mu0: float, cutoff: int | None = None) -> "DegreeLaw":
        """Poisson(mu0) profile on k >= 1, truncated at ``cutoff``.

        The tail mass beyond the cutoff is folded into the last atom, so
        the law stays an exact PMF.  Without an explicit cutoff the
        smallest one with relative tail mass <= 1e-12 is chosen.
        """
        if mu0 <= 0:
            raise InvalidLawError("poisson parameter must be positive")
        if cutoff is None:
            cutoff = 2
            while _poisson_tail(mu0, cutoff) > 1e-12:
                cutoff += 1
        if cutoff < 1:
            raise InvalidLawError("poisson cutoff must be >= 1")
        ks = np.arange(1, cutoff + 1)
        raw = np.exp(ks * log(mu0) - np.array([lgamma(k + 1) for k in ks]))
        total_ge1 = raw.sum() + _poisson_raw_tail(mu0, cutoff)
        ps = raw / total_ge1
        ps[-1] += 1.0 - ps.sum()  # fold the truncated tail into the last atom
        return cls(ks, ps, f"poisson({mu0},{cutoff})")

    @classmethod
    def powerlaw(cls, tau: float, cutoff: int) -> "DegreeLaw":
        """p_k proportional to k^-tau on 1 <= k <= cutoff."""
        if cutoff < 1:
            raise InvalidLawError("powerlaw cutoff must be >= 1")
        if tau <= 1:
            raise InvalidLawError("powerlaw exponent must exceed 1")
        ks = np.arange(1, cutoff + 1)
        raw = ks.astype(float) ** (-tau)
        return cls(ks, raw / raw.sum(), f"powerlaw({tau},{cutoff})")

    # -- basic functionals --------------------------------------------

    @property
    def mu(self) -> float:
        return float(np.dot(self.ks, self.ps))

    @property
    def d_min(self) -> int:
        return int(self.ks.min())

    def mass(self, k: int) -> float:
        idx = np.searchsorted(self.ks, k)
        if idx < len(self.ks) and self.ks[idx] == k:
            return float(self.ps[idx])
        return 0.0

    def pgf(self, z: float) -> float:
        """phi_p(z) = sum_k p_k z^k."""
        return float(np.dot(self.ps, np.power(float(z), self.ks)))

    def dpgf(self, z: float) -> float:
        """phi_p'(z) = sum_k k p_k z^(k-1)."""
        return float(np.dot(self.ks * self.ps, np.power(float(z), self.ks - 1)))

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(p) for k, p in zip(self.ks, self.ps)}

    def __str__(self):
        return self.family_tag if self.family_tag != "explicit" else (
            "explicit{" + ",".join(f"{k}:{p:g}" for k, p in zip(self.ks, self.ps)) + "}"
        )


def _poisson_raw_tail(mu0: float, cutoff: int) -> float:
    # sum_{k > cutoff} mu0^k / k!, summed until it stops changing
    term = np.exp((cutoff + 1) * log(mu0) - lgamma(cutoff + 2))
    total = 0.0
    k = cutoff + 1
    while term > 0 and total + term != total:
        total += term
        k += 1
        term *= mu0 / k
    return total


def _poisson_tail(mu0: float, cutoff: int) -> float:
    raw_tail = _poisson_raw_tail(mu0, cutoff)
    ks = np.arange(1, cutoff + 1)
    body = np.exp(ks * log(mu0) - np.array([lgamma(k + 1) for k in ks])).sum()
    return raw_tail / (body + raw_tail)


@dataclass(frozen=True)
class SizeBiasedLaw:
    """Forward-degree law q_k = (k+1) p_{k+1} / mu of an edge endpoint."""

    ks: np.ndarray
    ps: np.ndarray

    def __post_init__(self):
        if self.ks.size == 0:
            raise InvalidLawError("empty size-biased support")
        if self.ks.min() < 0:
            raise InvalidLawError("size-biased support must be >= 0")
        total = float(self.ps.sum())
        if abs(total - 1.0) > _PROB_TOL:
            raise InvalidLawError(f"size-biased masses sum to {total!r}")

    @property
    def nu(self) -> float:
        return float(np.dot(self.ks, self.ps))

    def mass(self, k: int) -> float:
        idx = np.searchsorted(self.ks, k)
        if idx < len(self.ks) and self.ks[idx] == k:
            return float(self.ps[idx])
        return 0.0

    @property
    def q1(self) -> float:
        return self.mass(1)

    def pgf(self, z: float) -> float:
        return float(np.dot(self.ps, np.power(float(z), self.ks)))

    def dpgf(self, z: float) -> float:
        return float(np.dot(self.ks * self.ps, np.power(float(z), np.maximum(self.ks - 1, 0))))

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(p) for k, p in zip(self.ks, self.ps)}


def size_biased(law: DegreeLaw) -> SizeBiasedLaw:
    """Size-biased forward-degree law of ``law``.

    q_k = (k+1) p_{k+1} / mu; its mean nu decides criticality (nu > 1
    iff a giant component exists).
    """
    mu = law.mu
    if mu <= 0:
        raise InvalidLawError("size biasing needs mu > 0")
    ks = law.ks - 1
    ps = law.ks * law.ps / mu
    return SizeBiasedLaw(ks, ps)


def solve_lambda(q: SizeBiasedLaw, tol: float = 1e-12, max_iter: int = 10**6) -> float:
    """Smallest fixed point of phi_q on [0, 1] (extinction probability).

    Iterates x <- phi_q(x) from 0, which converges monotonically to the
    smallest root, then polishes with Newton.  Returns 1.0 when nu <= 1
    (subcritical or critical: no root below 1).
    """
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    if not np.isfinite(q.nu):
        raise InvalidLawError("nu must be finite")
    if q.nu <= 1.0:
        return 1.0
    x = 0.0
    for _ in range(max_iter):
        nxt = q.pgf(x)
        if nxt - x <= tol:
            x = nxt
            break
        x = nxt
    # Newton polish on f(x) = phi_q(x) - x
    for _ in range(60):
        f = q.pgf(x) - x
        if abs(f) <= 1e-15:
            break
        fp = q.dpgf(x) - 1.0
        if fp == 0.0:
            break
        step = f / fp
        nxt = min(max(x - step, 0.0), 1.0)
        if nxt == x:
            break
        x = nxt
    if abs(q.pgf(x) - x) > tol:
        raise NumericError(
            f"fixed-point iteration did not reach residual {tol}", last_iterate=x
        )
    return x


def gamma_of(d: int, q1: float, lambda_star: float) -> float:
    """Escape rate of the slowest ball as a function of the minimum degree."""
    if d < 1:
        raise InvalidArgumentError("minimum degree must be >= 1")
    if not (0.0 <= q1 <= 1.0 and 0.0 <= lambda_star <= 1.0):
        raise InvalidArgumentError("q1 and lambda_star must lie in [0, 1]")
    if d >= 3:
        return float(d)
    if d == 2:
        return 2.0 * (1.0 - q1)
    return 1.0 - lambda_star


@dataclass(frozen=True)
class TheoryConstants:
    """All analytic constants of a degree law in one record."""

    mu: float
    nu: float
    lam: float
    lambda_star: float
    q1: float
    d_min: int
    gamma_dmin: float
    diam_limit: float
    flood_limit: float

    @property
    def supercritical(self) -> bool:
        return self.nu > 1.0

    def as_items(self):
        return [
            ("mu", self.mu),
            ("nu", self.nu),
            ("lambda", self.lam),
            ("lambda_star", self.lambda_star),
            ("q1", self.q1),
            ("d_min", self.d_min),
            ("gamma_dmin", self.gamma_dmin),
            ("diam_limit", self.diam_limit),
            ("flood_limit", self.flood_limit),
        ]

    def format_record(self) -> str:
        """Flat ``name=value`` lines (floats in full round-trip precision)."""
        out = []
        for name, val in self.as_items():
            out.append(f"{name}={val!r}" if isinstance(val, float) else f"{name}={val}")
        return "\n".join(out)


def theory_constants(law: DegreeLaw, tol: float = 1e-12) -> TheoryConstants:
    """Populate every constant; raises SupercriticalityError when nu <= 1.

    The raised error carries the partial record (limits set to nan) so
    callers can still report mu, nu, lambda and friends.
    """
    q = size_biased(law)
    nu = q.nu
    lam = solve_lambda(q, tol)
    lambda_star = q.dpgf(lam)
    d_min = law.d_min
    gam = gamma_of(d_min, q.q1, lambda_star)
    if nu <= 1.0:
        partial = TheoryConstants(
            law.mu, nu, lam, lambda_star, q.q1, d_min, gam, float("nan"), float("nan")
        )
        raise SupercriticalityError(
            f"law is not supercritical (nu = {nu!r} <= 1); limits undefined",
            partial=partial,
        )
    if gam <= 0:
        raise NumericError(f"Gamma(d_min) = {gam!r} is not positive")
    diam_limit = 1.0 / (nu - 1.0) + 2.0 / gam
    flood_limit = 1.0 / (nu - 1.0) + 1.0 / gam
    return TheoryConstants(
        law.mu, nu, lam, lambda_star, q.q1, d_min, gam, diam_limit, flood_limit
    )


# ---------------------------------------------------------------------------
# Degree sequences


@dataclass(frozen=True)
class DegreeSequence:
    """A realized degree sequence (the configuration-model input)."""

    degrees: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.degrees, dtype=np.int64)
        object.__setattr__(self, "degrees", d)
        if d.size == 0:
            raise InvalidArgumentError("empty degree sequence")
        if d.min() < 1:
            raise InvalidArgumentError("degrees must be >= 1")
        if int(d.sum()) % 2 != 0:
            raise InvalidArgumentError("total degree must be even")

    @property
    def n(self) -> int:
        return int(self.degrees.size)

    @property
    def total_degree(self) -> int:
        return int(self.degrees.sum())

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max())

    def counts(self) -> dict[int, int]:
        """Empirical u_k = #{i : d_i = k}."""
        ks, cs = np.unique(self.degrees, return_counts=True)
        return {int(k): int(c) for k, c in zip(ks, cs)}

    def empirical_law(self) -> DegreeLaw:
        ks, cs = np.unique(self.degrees, return_counts=True)
        return DegreeLaw(ks, cs / self.n, "explicit")

    def moment_ratio(self, eps: float = 0.1) -> float:
        """Diagnostic ratio sum d_i^(2+eps) / n (finite-n regularity check).

        The underlying condition is asymptotic (O(n)); at fixed n only the
        ratio itself can be reported, with no pass/fail attached.
        """
        return float((self.degrees.astype(float) ** (2.0 + eps)).sum() / self.n)

    @classmethod
    def from_law(
        cls, law: DegreeLaw, n: int, seed, require_dmin: bool = True, max_tries: int = 10000
    ) -> "DegreeSequence":
        """Sample n i.i.d. degrees, rejecting until the sum is even and
        (by default) the empirical minimum equals the law's d_min."""
        if n < 1:
            raise InvalidArgumentError("n must be >= 1")
        if n % 2 == 1 and np.all(law.ks % 2 == 1):
            raise InvalidArgumentError(
                "odd n with an all-odd degree support can never have even total degree"
            )
        rng = seed.generator() if hasattr(seed, "generator") else np.random.default_rng(seed)
        for _ in range(max_tries):
            d = rng.choice(law.ks, size=n, p=law.ps)
            if int(d.sum()) % 2 != 0:
                continue
            if require_dmin and int(d.min()) != law.d_min:
                continue
            return cls(d)
        raise NumericError(
            f"could not draw an admissible degree sequence in {max_tries} tries"
        )


def truncated_size_biased(seq: DegreeSequence, beta: int, side: str) -> SizeBiasedLaw:
    """Size-biased empirical law after order-statistics truncation.

    side="lower": drop the ``beta`` largest degrees (the lower-bounding
    forward-degree law); side="upper": drop the ``(beta+1) * max_degree``
    smallest degrees (the upper-bounding law).
    """
    if beta < 0 or beta > seq.n:
        raise InvalidArgumentError("beta must lie in [0, n]")
    ordered = np.sort(seq.degrees)
    if side == "lower":
        kept = ordered[: seq.n - beta] if beta else ordered
    elif side == "upper":
        removed = (beta + 1) * seq.max_degree
        if removed >= seq.n:
            raise InvalidArgumentError(
                f"upper truncation would remove {removed} of {seq.n} degrees"
            )
        kept = ordered[removed:]
    else:
        raise InvalidArgumentError(f"side must be 'lower' or 'upper', got {side!r}")
    if kept.size == 0:
        raise InvalidArgumentError("truncation removed the whole sequence")
    m_kept = float(kept.sum())
    ks, cs = np.unique(kept, return_counts=True)
    return SizeBiasedLaw(ks - 1, ks * cs / m_kept)


# ---------------------------------------------------------------------------
# Thinning and 2-core theory


@dataclass(frozen=True)
class Pmf:
    """Plain mass function on non-negative integers (thinning results)."""

    ks: np.ndarray
    ps: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.dot(self.ks, self.ps))

    def mass(self, k: int) -> float:
        idx = np.searchsorted(self.ks, k)
        if idx < len(self.ks) and self.ks[idx] == k:
            return float(self.ps[idx])
        return 0.0

    def tail_ge(self, k: int) -> float:
        return float(self.ps[self.ks >= k].sum())

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(p) for k, p in zip(self.ks, self.ps)}


def thinned_law(law: DegreeLaw, prob: float) -> Pmf:
    """Law of D_p: keep each of D points independently with probability p.

    Exact binomial mixture P(D_p = r) = sum_l p_l C(l, r) p^r (1-p)^(l-r).
    """
    if not (0.0 <= prob <= 1.0):
        raise InvalidArgumentError("thinning probability must lie in [0, 1]")
    max_k = int(law.ks.max())
    out = np.zeros(max_k + 1)
    for l, pl in zip(law.ks, law.ps):
        l = int(l)
        r = np.arange(l + 1)
        if prob == 0.0:
            pmf = np.zeros(l + 1)
            pmf[0] = 1.0
        elif prob == 1.0:
            pmf = np.zeros(l + 1)
            pmf[l] = 1.0
        else:
            logpmf = (
                np.array([lgamma(l + 1) - lgamma(k + 1) - lgamma(l - k + 1) for k in r])
                + r * log(prob)
                + (l - r) * np.log1p(-prob)
            )
            pmf = np.exp(logpmf)
        out[: l + 1] += pl * pmf
    return Pmf(np.arange(max_k + 1), out)


def core_mass_functions(law: DegreeLaw):
    """Closed forms h(p) = E[D_p 1(D_p >= 2)] and h1(p) = P(D_p >= 2)."""
    q = size_biased(law)

    def h(p: float) -> float:
        # E[D_p] - P(D_p = 1) = mu p - p phi_p'(1-p) = mu p (1 - phi_q(1-p))
        return law.mu * p * (1.0 - q.pgf(1.0 - p))

    def h1(p: float) -> float:
        # 1 - P(D_p = 0) - P(D_p = 1)
        return 1.0 - law.pgf(1.0 - p) - p * law.dpgf(1.0 - p)

    return h, h1


@dataclass(frozen=True)
class CoreTheory:
    """Asymptotic 2-core constants derived from the thinning fixed point."""

    p_hat: float
    h1_at_phat: float
    tilde_law: DegreeLaw | None
    tilde_mu: float
    tilde_q1: float
    tilde_nu: float
    empty_core: bool = False


def core_theory(law: DegreeLaw, scan_step: float = 1e-3, tol: float = 1e-12) -> CoreTheory:
    """Solve mu p^2 = h(p) for the largest root and build the core law.

    Scans downward from p = 1 to bracket the largest root (bisection from
    0 can land on a smaller one), bisects to ``tol``, then renormalizes
    the thinned masses on j >= 2 into the asymptotic core degree law.
    Returns p_hat = 0 with the empty-core flag when no positive root
    exists (nu <= 1).
    """
    h, h1 = core_mass_functions(law)
    mu = law.mu

    def F(p: float) -> float:
        return mu * p * p - h(p)

    if abs(F(1.0)) <= tol:  # p_1 = 0: the whole graph is its own 2-core scale
        p_hat = 1.0
    else:
        lo = None
        hi = 1.0
        p = 1.0
        while p > scan_step / 2:
            p -= scan_step
            if p < 0:
                p = 0.0
            if F(p) < 0.0:  # strict: p = 0 is always a trivial root
                lo = p
                break
            hi = p
        if lo is None:
            # no positive root above the scan resolution: asymptotically
            # empty core (nu <= 1, or a vanishing core fraction)
            return CoreTheory(0.0, 0.0, None, float("nan"), float("nan"), float("nan"), True)
        # F(lo) <= 0 < F(hi); the largest root sits in [lo, hi]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo <= tol:
                break
            if F(mid) <= 0.0:
                lo = mid
            else:
                hi = mid
        p_hat = 0.5 * (lo + hi)

    thinned = thinned_law(law, p_hat)
    keep = thinned.ks >= 2
    mass = float(thinned.ps[keep].sum())
    if mass <= 0:
        return CoreTheory(p_hat, 0.0, None, float("nan"), float("nan"), float("nan"), True)
    tilde_ks = thinned.ks[keep]
    tilde_ps = thinned.ps[keep] / mass
    # prune vanishing atoms so DegreeLaw validation is happy
    big = tilde_ps > 0
    tilde = DegreeLaw(tilde_ks[big], tilde_ps[big] / tilde_ps[big].sum(), "core")
    tilde_mu = tilde.mu
    tilde_q1 = 2.0 * tilde.mass(2) / tilde_mu
    tilde_nu = float(np.dot(tilde.ks * (tilde.ks - 1), tilde.ps)) / tilde_mu
    return CoreTheory(p_hat, mass, tilde, tilde_mu, tilde_q1, tilde_nu, False)


# ---------------------------------------------------------------------------
# Law descriptor files


def parse_law_text(text: str) -> DegreeLaw:
    """Parse a degree-law descriptor.

    Either a one-line family descriptor (``regular d``, ``poisson mu
    cutoff``, ``powerlaw tau cutoff``) or ``explicit`` followed by
    ``k p_k`` lines.  Masses summing to 1 within 1e-9 are renormalized;
    anything worse is rejected.
    """
    lines = [
        (i + 1, ln.strip())
        for i, ln in enumerate(text.splitlines())
        if ln.strip() and not ln.strip().startswith("#")
    ]
    if not lines:
        raise LawFormatError("empty law descriptor")
    lineno, head = lines[0]
    fields = head.split()
    kind = fields[0].lower()
    try:
        if kind == "regular":
            if len(fields) != 2:
                raise LawFormatError("expected: regular d", lineno)
            return DegreeLaw.regular(int(fields[1]))
        if kind == "poisson":
            if len(fields) not in (2, 3):
                raise LawFormatError("expected: poisson mu [cutoff]", lineno)
            cutoff = int(fields[2]) if len(fields) == 3 else None
            return DegreeLaw.truncated_poisson(float(fields[1]), cutoff)
        if kind == "powerlaw":
            if len(fields) != 3:
                raise LawFormatError("expected: powerlaw tau cutoff", lineno)
            return DegreeLaw.powerlaw(float(fields[1]), int(fields[2]))
        if kind == "explicit":
            pairs = []
            for lineno, ln in lines[1:]:
                parts = ln.split()
                if len(parts) != 2:
                    raise LawFormatError(f"expected 'k p_k', got {ln!r}", lineno)
                try:
                    pairs.append((int(parts[0]), float(parts[1])))
                except ValueError as exc:
                    raise LawFormatError(str(exc), lineno) from exc
            if not pairs:
                raise LawFormatError("explicit law without atoms", lineno)
            try:
                return DegreeLaw.explicit(pairs, renormalize=True)
            except InvalidLawError as exc:
                raise LawFormatError(str(exc), lineno) from exc
    except LawFormatError:
        raise
    except (ValueError, InvalidLawError) as exc:
        raise LawFormatError(str(exc), lineno) from exc
    raise LawFormatError(f"unknown law kind {kind!r}", lineno)


def load_law(path) -> DegreeLaw:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_law_text(fh.read())


def parse_law_arg(arg: str) -> DegreeLaw:
    """CLI convenience: inline descriptor ('regular 3', '1:0.5,3:0.5') or a file path."""
    import os

    if os.path.exists(arg):
        return load_law(arg)
    if ":" in arg:
        pairs = []
        for part in arg.split(","):
            k, _, p = part.partition(":")
            pairs.append((int(k), float(p)))
        return DegreeLaw.explicit(pairs, renormalize=True)
    return parse_law_text(arg)

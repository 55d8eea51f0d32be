"""Left-continuous BV functions on [a, b]: absolutely continuous part plus jump atoms.

A :class:`BVFunction` stores ``f(a)``, a piecewise-polynomial density ``f'``
(degree <= 3 per piece) and a finite list of atoms ``(c, h)``. An atom at
``c`` contributes ``h`` to ``f(x)`` exactly when ``x > c``, so

    f(x) = f(a) + ∫_a^x f'(t) dt + Σ_{c < x} h,

which is left-continuous everywhere. An atom may sit at ``c = a`` to model
``χ_(a, m]``.
"""
from __future__ import annotations

import csv
import io
import math
from typing import Sequence

import numpy as np
from scipy.special import comb

from .errors import OutOfDomain, SpecError

MAX_DEGREE = 3


def _shift(coeffs, delta):
    """Re-expand Σ c_k s^k around s = s' + delta (rows are pieces)."""
    coeffs = np.asarray(coeffs, dtype=float)
    delta = np.asarray(delta, dtype=float)
    deg = coeffs.shape[1] - 1
    out = np.zeros_like(coeffs)
    for k in range(deg + 1):
        for j in range(k + 1):
            out[:, j] += coeffs[:, k] * comb(k, j) * delta ** (k - j)
    return out


class PiecewisePoly:
    """Piecewise polynomial on ``breaks[0] <= x <= breaks[-1]``.

    ``coeffs[i, k]`` multiplies ``(x - breaks[i])**k`` on piece ``i``.
    Pieces are closed on the left; the last piece also owns the right end.
    """

    def __init__(self, breaks, coeffs):
        breaks = np.asarray(breaks, dtype=float)
        if isinstance(coeffs, (list, tuple)) and coeffs and all(isinstance(r, (list, tuple)) for r in coeffs):
            # rows may omit trailing zero coefficients
            width = max(len(r) for r in coeffs)
            coeffs = [list(r) + [0.0] * (width - len(r)) for r in coeffs]
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if breaks.ndim != 1 or len(breaks) < 2:
            raise SpecError("need at least two breakpoints", "density.breakpoints")
        if np.any(np.diff(breaks) <= 0):
            raise SpecError("breakpoints must be strictly increasing", "density.breakpoints")
        if coeffs.shape[0] != len(breaks) - 1:
            raise SpecError("one coefficient row per piece required", "density.coeffs")
        if coeffs.shape[1] > MAX_DEGREE + 1:
            raise SpecError(f"polynomial degree must be <= {MAX_DEGREE}", "density.coeffs")
        if not np.all(np.isfinite(coeffs)):
            raise SpecError("coefficients must be finite", "density.coeffs")
        pad = np.zeros((coeffs.shape[0], MAX_DEGREE + 1))
        pad[:, :coeffs.shape[1]] = coeffs
        self.breaks = breaks
        self.coeffs = pad
        widths = np.diff(breaks)
        pieces = self._antideriv_local(np.arange(len(widths)), widths)
        self._cum = np.concatenate([[0.0], np.cumsum(pieces)])

    # construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, a, b, value=0.0):
        return cls([a, b], [[value]])

    @classmethod
    def piecewise_constant(cls, breaks, values):
        return cls(breaks, np.asarray(values, dtype=float)[:, None])

    @classmethod
    def from_samples(cls, x, values):
        """Linear interpolation of samples ``values`` at strictly increasing ``x``."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(values, dtype=float)
        if x.shape != v.shape or x.size < 2:
            raise SpecError("sampled density needs >= 2 matching x/values", "density")
        slope = np.diff(v) / np.diff(x)
        return cls(x, np.column_stack([v[:-1], slope]))

    # evaluation ------------------------------------------------------------
    @property
    def interval(self):
        return float(self.breaks[0]), float(self.breaks[-1])

    @property
    def degree(self):
        nz = np.flatnonzero(np.any(self.coeffs != 0.0, axis=0))
        return int(nz[-1]) if nz.size else 0

    def _piece(self, x):
        return np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.breaks) - 2)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        i = self._piece(x)
        s = x - self.breaks[i]
        c = self.coeffs[i]
        out = ((c[..., 3] * s + c[..., 2]) * s + c[..., 1]) * s + c[..., 0]
        return float(out) if out.ndim == 0 else out

    def _antideriv_local(self, i, s):
        c = self.coeffs[i]
        return (((c[..., 3] / 4.0 * s + c[..., 2] / 3.0) * s + c[..., 1] / 2.0) * s + c[..., 0]) * s

    def integral_to(self, x):
        """∫_{breaks[0]}^x g."""
        x = np.asarray(x, dtype=float)
        i = self._piece(x)
        out = self._cum[i] + self._antideriv_local(i, x - self.breaks[i])
        return float(out) if out.ndim == 0 else out

    def integral(self, l=None, r=None):
        a, b = self.interval
        l = a if l is None else l
        r = b if r is None else r
        return self.integral_to(r) - self.integral_to(l)

    def roots(self):
        """Sign changes / zeros of g strictly inside pieces (sorted)."""
        out = []
        widths = np.diff(self.breaks)
        deg = self.degree
        if deg == 0:
            return np.empty(0)
        if deg == 1:
            c0, c1 = self.coeffs[:, 0], self.coeffs[:, 1]
            with np.errstate(divide="ignore", invalid="ignore"):
                s = -c0 / c1
            ok = (c1 != 0) & (s > 0) & (s < widths)
            return np.sort(self.breaks[:-1][ok] + s[ok])
        for i, w in enumerate(widths):
            c = self.coeffs[i]
            if not np.any(c[1:]):
                continue
            for z in np.roots(c[::-1]):
                if abs(z.imag) <= 1e-12 * max(1.0, abs(z.real)) and 0 < z.real < w:
                    out.append(self.breaks[i] + z.real)
        return np.array(sorted(set(out)))

    def split_points(self):
        """Breakpoints plus interior zeros: |g| is polynomial between them."""
        return np.union1d(self.breaks, self.roots())

    def abs_integral(self):
        """∫ |g| in closed form, splitting pieces at the zeros of g."""
        pts = self.split_points()
        vals = self.integral_to(pts)
        return math.fsum(np.abs(np.diff(vals)))

    # algebra ---------------------------------------------------------------
    def scaled(self, c):
        out = PiecewisePoly.__new__(PiecewisePoly)
        out.breaks = self.breaks
        out.coeffs = self.coeffs * float(c)
        out._cum = self._cum * float(c)
        return out

    def refined(self, breaks):
        """Same function re-expressed on the union of breakpoints."""
        new = np.union1d(self.breaks, np.asarray(breaks, dtype=float))
        a, b = self.interval
        new = new[(new >= a) & (new <= b)]
        i = self._piece(new[:-1])
        coeffs = _shift(self.coeffs[i], new[:-1] - self.breaks[i])
        return PiecewisePoly(new, coeffs)

    def __add__(self, other):
        if not isinstance(other, PiecewisePoly):
            return NotImplemented
        if self.interval != other.interval:
            raise ValueError("cannot add densities on different intervals")
        a = self.refined(other.breaks)
        b = other.refined(self.breaks)
        return PiecewisePoly(a.breaks, a.coeffs + b.coeffs)

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return self + (-other)

    # serialization -----------------------------------------------------------
    def to_dict(self):
        deg = self.degree
        return {"type": "poly_pieces", "breakpoints": self.breaks.tolist(),
                "coeffs": self.coeffs[:, :deg + 1].tolist()}

    @classmethod
    def from_dict(cls, d, interval=None, where="density"):
        if not isinstance(d, dict):
            raise SpecError("expected an object", where)
        kind = d.get("type")
        try:
            if kind == "poly_pieces":
                return cls(d["breakpoints"], d["coeffs"])
            if kind == "piecewise_constant":
                return cls.piecewise_constant(d["breakpoints"], d["values"])
            if kind == "sampled":
                return cls.from_samples(d["x"], d["values"])
            if kind == "constant":
                if interval is None:
                    raise SpecError("constant density needs the function interval", where)
                return cls.constant(interval[0], interval[1], float(d["value"]))
        except KeyError as exc:
            raise SpecError(f"missing field {exc.args[0]!r}", where) from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(str(exc), where) from None
        raise SpecError(f"unknown density type {kind!r}", f"{where}.type")

    def __repr__(self):
        return f"PiecewisePoly(pieces={len(self.breaks) - 1}, interval={self.interval})"


class Partition:
    """Partition of [a, b] into non-degenerate closed intervals [x_k, x_{k+1}]."""

    def __init__(self, points: Sequence[float]):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("a partition needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("partition intervals must be non-degenerate and ordered")
        self.points = pts

    @classmethod
    def uniform(cls, a, b, n_cells):
        return cls(np.linspace(a, b, int(n_cells) + 1))

    @property
    def left(self):
        return self.points[:-1]

    @property
    def right(self):
        return self.points[1:]

    @property
    def lengths(self):
        return np.diff(self.points)

    @property
    def mesh(self):
        return float(np.max(self.lengths))

    @property
    def interval(self):
        return float(self.points[0]), float(self.points[-1])

    def intervals(self):
        return list(zip(self.left.tolist(), self.right.tolist()))

    def __len__(self):
        return self.points.size - 1

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.points, other.points)

    def __repr__(self):
        if len(self) <= 6:
            return f"Partition({self.points.tolist()})"
        return f"Partition({len(self)} intervals, mesh={self.mesh:.3g})"


class BVFunction:
    """Left-continuous BV function ``f(x) = f(a) + Df([a, x))``."""

    def __init__(self, interval, base=0.0, density: PiecewisePoly = None,
                 atoms: Sequence = ()):
        a, b = (float(v) for v in interval)
        if not a < b:
            raise SpecError("interval must satisfy a < b", "interval")
        self.a, self.b = a, b
        self.base = float(base)
        if density is None:
            density = PiecewisePoly.constant(a, b, 0.0)
        if not (np.isclose(density.breaks[0], a, rtol=0, atol=1e-12 * (1 + abs(a)))
                and np.isclose(density.breaks[-1], b, rtol=0, atol=1e-12 * (1 + abs(b)))):
            raise SpecError("density breakpoints must span the interval", "density.breakpoints")
        self.density = density
        atoms = [(float(c), float(h)) for c, h in atoms]
        atoms = [(c, h) for c, h in atoms if h != 0.0]
        locs = np.array([c for c, _ in atoms], dtype=float)
        heights = np.array([h for _, h in atoms], dtype=float)
        if locs.size:
            if np.any(np.diff(locs) <= 0):
                raise SpecError("atom locations must be strictly increasing", "atoms")
            if locs[0] < a or locs[-1] >= b:
                raise SpecError("atom locations must lie in [a, b)", "atoms")
        self.atom_locs = locs
        self.atom_heights = heights
        self._cum_heights = np.concatenate([[0.0], np.cumsum(heights)])

    @property
    def interval(self):
        return (self.a, self.b)

    @property
    def atoms(self):
        return list(zip(self.atom_locs.tolist(), self.atom_heights.tolist()))

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if np.any((x < self.a) | (x > self.b)) or np.any(np.isnan(x)):
            raise OutOfDomain(f"point outside [{self.a}, {self.b}]")
        return x

    def evaluate(self, x):
        x = self._check(x)
        jumps = self._cum_heights[np.searchsorted(self.atom_locs, x, side="left")]
        out = self.base + self.density.integral_to(x) + jumps
        return float(out) if np.ndim(out) == 0 else out

    __call__ = evaluate

    def increment(self, J):
        """Δf(J) = f(l) - f(r) for J = [l, r]."""
        l, r = float(J[0]), float(J[1])
        self._check([l, r])
        return self.evaluate(l) - self.evaluate(r)

    def total_variation(self):
        """|Df|([a, b]) = ∫|f'| + Σ|h|."""
        return math.fsum([self.density.abs_integral(), *np.abs(self.atom_heights)])

    def singular_mass(self, predicate=None):
        """|Dˢf|(S) for S = {c : predicate(c)}; all atoms when predicate is None."""
        if predicate is None:
            return math.fsum(np.abs(self.atom_heights))
        return math.fsum(abs(h) for c, h in self.atoms if predicate(c))

    def mandatory_points(self):
        """Density breakpoints, zeros of f' and atom locations inside [a, b]."""
        pts = np.union1d(self.density.split_points(), self.atom_locs)
        pts = np.union1d(pts, [self.a, self.b])
        return pts[(pts >= self.a) & (pts <= self.b)]

    @property
    def is_absolutely_continuous(self):
        return self.atom_locs.size == 0

    # algebra ---------------------------------------------------------------
    def scaled(self, c):
        c = float(c)
        out = BVFunction.__new__(BVFunction)
        out.a, out.b = self.a, self.b
        out.base = self.base * c
        out.density = self.density.scaled(c)
        if c == 0.0:
            out.atom_locs = np.empty(0)
            out.atom_heights = np.empty(0)
        else:
            out.atom_locs = self.atom_locs
            out.atom_heights = self.atom_heights * c
        out._cum_heights = np.concatenate([[0.0], np.cumsum(out.atom_heights)])
        return out

    def __mul__(self, c):
        return self.scaled(c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self.scaled(1.0 / c)

    def __neg__(self):
        return self.scaled(-1.0)

    def __add__(self, other):
        if not isinstance(other, BVFunction):
            return NotImplemented
        if self.interval != other.interval:
            raise ValueError("cannot add functions on different intervals")
        merged = {}
        for c, h in self.atoms + other.atoms:
            merged[c] = merged.get(c, 0.0) + h
        return BVFunction(self.interval, self.base + other.base, self.density + other.density,
                          sorted(merged.items()))

    def __sub__(self, other):
        return self + (-other)

    # construction / IO -------------------------------------------------------
    @classmethod
    def piecewise_linear(cls, x, values, atoms=()):
        """Continuous PL function through ``(x_i, values_i)`` plus atoms."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(values, dtype=float)
        dens = PiecewisePoly.piecewise_constant(x, np.diff(v) / np.diff(x))
        return cls((x[0], x[-1]), v[0], dens, atoms)

    @classmethod
    def from_callable_density(cls, interval, base, breaks, coeffs, atoms=()):
        return cls(interval, base, PiecewisePoly(breaks, coeffs), atoms)

    def to_dict(self):
        return {"interval": [self.a, self.b], "base": self.base,
                "density": self.density.to_dict(),
                "atoms": [[c, h] for c, h in self.atoms]}

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SpecError("expected a JSON object", "function")
        try:
            interval = d["interval"]
            if not (isinstance(interval, list) and len(interval) == 2):
                raise SpecError("interval must be [a, b]", "interval")
            dens = d.get("density")
            density = None if dens is None else PiecewisePoly.from_dict(dens, interval)
            atoms = d.get("atoms", [])
            if not isinstance(atoms, list) or any(not isinstance(t, list) or len(t) != 2 for t in atoms):
                raise SpecError("atoms must be a list of [location, height] pairs", "atoms")
            return cls(interval, float(d.get("base", 0.0)), density, atoms)
        except KeyError as exc:
            raise SpecError(f"missing field {exc.args[0]!r}", "function") from None

    @classmethod
    def from_samples(cls, x, values, jump_thresh=None, detect_jumps=True):
        """PL interpolant of samples; large increments become atoms.

        An increment between consecutive samples whose magnitude exceeds
        ``jump_thresh`` (default 5x the median absolute increment) is turned
        into an atom at the left sample with zero density on that cell.
        """
        x = np.asarray(x, dtype=float)
        v = np.asarray(values, dtype=float)
        if x.size < 2 or x.shape != v.shape:
            raise SpecError("need at least two samples", "csv")
        if np.any(np.diff(x) <= 0):
            raise SpecError("x must be strictly increasing", "csv.x")
        dv = np.diff(v)
        slopes = dv / np.diff(x)
        atoms = []
        if detect_jumps:
            med = float(np.median(np.abs(dv)))
            thresh = 5.0 * med if jump_thresh is None else float(jump_thresh)
            if thresh > 0:
                big = np.flatnonzero(np.abs(dv) > thresh)
                for i in big:
                    atoms.append((x[i], dv[i]))
                slopes[big] = 0.0
        dens = PiecewisePoly.piecewise_constant(x, slopes)
        return cls((x[0], x[-1]), v[0], dens, atoms)

    @classmethod
    def from_csv(cls, path, jump_thresh=None, detect_jumps=True):
        x, v = read_xy_csv(path)
        return cls.from_samples(x, v, jump_thresh, detect_jumps)

    def __repr__(self):
        return (f"BVFunction(interval={self.interval}, base={self.base}, "
                f"density={self.density!r}, atoms={self.atoms})")


def read_xy_csv(path):
    """Read a ``x,value`` CSV file (header required) into two float arrays."""
    with open(path, newline="") as fh:
        return parse_xy_csv(fh.read())


def parse_xy_csv(text):
    """Parse ``x,value`` CSV text; errors name the offending line."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise SpecError("empty CSV", "line 1")
    header = [h.strip().lower() for h in rows[0]]
    if header[:2] != ["x", "value"]:
        raise SpecError("header must be 'x,value'", "line 1")
    xs, vs = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise SpecError("expected two columns", f"line {lineno}")
        try:
            xs.append(float(row[0]))
            vs.append(float(row[1]))
        except ValueError:
            raise SpecError(f"non-numeric field in {row!r}", f"line {lineno}") from None
        if not (math.isfinite(xs[-1]) and math.isfinite(vs[-1])):
            raise SpecError("non-finite value", f"line {lineno}")
        if len(xs) > 1 and xs[-1] <= xs[-2]:
            raise SpecError("x must be strictly increasing", f"line {lineno}")
    return np.array(xs), np.array(vs)

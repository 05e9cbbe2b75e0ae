"""Problem model: linear objective over PSD matrix variables.

A problem owns a list of matrix variables ``X_v`` (real symmetric or complex
Hermitian, each implicitly PSD-free; positivity is imposed only through
explicit ``psd`` constraints).  Constraints are

* ``psd``:   ``C + sum_t coef_t * op_t(X_{v_t}) >= 0`` where ``op`` is the
  identity, the partial transpose on A, or ``scale`` (a 1x1 variable times a
  fixed matrix),
* ``equalities`` and ``inequalities``: ``sum_v Re Tr(F_v X_v) (=|<=) rhs``.

The objective is ``minimize offset + sum_v Re Tr(C_v X_v)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError
from .coords import basis

SCHEMA = 1
OPS = ("id", "pt", "scale")


@dataclass(frozen=True)
class Variable:
    index: int
    n: int
    cplx: bool
    name: str

    @property
    def basis(self):
        return basis(self.n, self.cplx)


@dataclass(frozen=True, eq=False)
class Term:
    var: Variable
    coef: float = 1.0
    op: str = "id"
    dims: tuple | None = None
    matrix: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class PsdConstraint:
    n: int
    terms: tuple
    const: np.ndarray
    name: str


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    # functional as ((var, coefficient vector in svec coordinates), ...)
    terms: tuple
    rhs: float
    name: str


def _herm(F):
    F = np.atleast_2d(np.asarray(F))
    return (F + F.conj().T) / 2


def _coeffs(var: Variable, F) -> np.ndarray:
    F = _herm(F)
    if F.shape != (var.n, var.n):
        raise DimensionError(f"functional shape {F.shape} does not match {var.name} ({var.n})")
    if not var.cplx:
        F = F.real
    return var.basis.svec(F)


@dataclass
class SdpProblem:
    variables: list = field(default_factory=list)
    objective: list = field(default_factory=list)
    offset: float = 0.0
    psd: list = field(default_factory=list)
    equalities: list = field(default_factory=list)
    inequalities: list = field(default_factory=list)

    # -- construction ----------------------------------------------------
    def variable(self, n: int, cplx: bool = True, name: str | None = None) -> Variable:
        v = Variable(len(self.variables), int(n), bool(cplx), name or f"x{len(self.variables)}")
        self.variables.append(v)
        return v

    def get(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def scalar(self, name: str | None = None) -> Variable:
        return self.variable(1, cplx=False, name=name)

    def _functional(self, functional):
        out = []
        for var, F in functional:
            self._check_var(var)
            out.append((var, _coeffs(var, F)))
        return tuple(out)

    def _check_var(self, var):
        if var.index >= len(self.variables) or self.variables[var.index] is not var:
            raise ValueError(f"variable {var.name} does not belong to this problem")

    def minimize(self, functional, offset: float = 0.0):
        """``functional`` is a sequence of ``(variable, matrix)`` pairs."""
        self.objective = list(self._functional(functional))
        self.offset = float(offset)

    def add_psd(self, terms, const=None, name: str | None = None) -> PsdConstraint:
        terms = tuple(terms)
        if not terms:
            raise ValueError("psd constraint needs at least one term")
        n = None
        for t in terms:
            self._check_var(t.var)
            if t.op not in OPS:
                raise ValueError(f"unknown op {t.op!r}")
            if t.op == "scale":
                if t.var.n != 1 or t.var.cplx:
                    raise DimensionError("scale terms need a real 1x1 variable")
                side = np.atleast_2d(t.matrix).shape[0]
            else:
                side = t.var.n
                if t.op == "pt" and (t.dims is None or t.dims[0] * t.dims[1] != side):
                    raise DimensionError("pt term needs dims with dA*dB == n")
            if n is None:
                n = side
            elif side != n:
                raise DimensionError(f"psd terms of sizes {n} and {side}")
        cplx = any(t.var.cplx for t in terms if t.op != "scale")
        cplx = cplx or any(np.iscomplexobj(t.matrix) and np.any(np.imag(t.matrix)) for t in terms if t.op == "scale")
        if const is None:
            const = np.zeros((n, n))
        const = _herm(const)
        if const.shape != (n, n):
            raise DimensionError("constant term has the wrong shape")
        cplx = cplx or bool(np.any(np.imag(const)))
        for t in terms:
            if t.op != "scale" and t.var.cplx != cplx:
                raise DimensionError("psd block mixes real and complex variables")
        const = const if cplx else const.real
        terms = tuple(
            Term(t.var, float(t.coef), t.op, None if t.dims is None else tuple(int(x) for x in t.dims),
                 None if t.matrix is None else (_herm(t.matrix) if cplx else _herm(t.matrix).real))
            for t in terms
        )
        c = PsdConstraint(n, terms, const, name or f"psd{len(self.psd)}")
        self.psd.append(c)
        return c

    def add_eq(self, functional, rhs: float, name: str | None = None):
        c = LinearConstraint(self._functional(functional), float(rhs), name or f"eq{len(self.equalities)}")
        self.equalities.append(c)
        return c

    def add_le(self, functional, rhs: float, name: str | None = None):
        c = LinearConstraint(self._functional(functional), float(rhs), name or f"le{len(self.inequalities)}")
        self.inequalities.append(c)
        return c

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        def mat(M):
            M = np.asarray(M)
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(M)]

        def lin(terms):
            return [{"var": v.index, "coeffs": [float(x) for x in c]} for v, c in terms]

        return {
            "schema": SCHEMA,
            "kind": "sdp",
            "coordinates": "orthonormal: diag, sqrt2*Re(upper), sqrt2*Im(upper, complex only)",
            "variables": [{"name": v.name, "size": v.n, "field": "complex" if v.cplx else "real"}
                          for v in self.variables],
            "objective": {"offset": self.offset, "terms": lin(self.objective)},
            "psd": [
                {
                    "name": c.name,
                    "size": c.n,
                    "const": mat(c.const),
                    "terms": [
                        {"var": t.var.index, "coef": t.coef, "op": t.op,
                         "dims": list(t.dims) if t.dims else None,
                         "matrix": None if t.matrix is None else mat(t.matrix)}
                        for t in c.terms
                    ],
                }
                for c in self.psd
            ],
            "equalities": [{"name": c.name, "rhs": c.rhs, "terms": lin(c.terms)} for c in self.equalities],
            "inequalities": [{"name": c.name, "rhs": c.rhs, "terms": lin(c.terms)} for c in self.inequalities],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SdpProblem":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported sdp schema {d.get('schema')!r}")
        p = cls()
        for v in d["variables"]:
            p.variable(v["size"], v["field"] == "complex", v["name"])

        def mat(rows):
            a = np.array(rows, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        def lin(terms):
            return tuple((p.variables[t["var"]], np.array(t["coeffs"], dtype=float)) for t in terms)

        p.objective = list(lin(d["objective"]["terms"]))
        p.offset = float(d["objective"]["offset"])
        for c in d["psd"]:
            terms = [Term(p.variables[t["var"]], t["coef"], t["op"],
                          tuple(t["dims"]) if t["dims"] else None,
                          None if t["matrix"] is None else mat(t["matrix"]))
                     for t in c["terms"]]
            p.add_psd(terms, mat(c["const"]), c["name"])
        for key in ("equalities", "inequalities"):
            for c in d[key]:
                getattr(p, key).append(LinearConstraint(lin(c["terms"]), float(c["rhs"]), c["name"]))
        return p

    @classmethod
    def loads(cls, s: str) -> "SdpProblem":
        return cls.from_dict(json.loads(s))

"""JSON codecs for the library's value types.

Complex numbers encode as [re, im].  Sparse polynomials encode their terms
sorted by exponent so identical values serialize byte-identically.  Shear
words carry the expanded univariate coefficients plus an optional
``f_plan`` block preserving the factored evaluation structure, which the
verifier uses to keep prescribed roots exact after a round trip.
"""

from __future__ import annotations

import numpy as np

from .errors import SchemaError
from .factor import ElemFactor, FactorWord, Transvection
from .interpolate import FlatSpec, InterpolationJob
from .jets import JetMap
from .poly import PolyScalar, UniPoly
from .shears import GradShear, Shear, Word
from .symplectic import HamiltonianDecomposition, TwoFormPoly


def cnum(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def read_cnum(obj) -> complex:
    try:
        re, im = obj
        return complex(float(re), float(im))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad complex encoding: {obj!r}") from exc


def cvec(v) -> list:
    return [cnum(z) for z in np.asarray(v, dtype=complex)]


def read_cvec(obj) -> np.ndarray:
    if not isinstance(obj, list):
        raise SchemaError("expected a list of complex entries")
    return np.array([read_cnum(z) for z in obj], dtype=complex)


def cmat(M) -> list:
    return [cvec(row) for row in np.asarray(M, dtype=complex)]


def read_cmat(obj) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise SchemaError("expected a matrix")
    return np.stack([read_cvec(row) for row in obj])


def poly_to_json(p: PolyScalar) -> list:
    return [{"exp": list(e), "c": cnum(c)}
            for e, c in sorted(p.terms.items())]


def poly_from_json(obj, dim: int) -> PolyScalar:
    if not isinstance(obj, list):
        raise SchemaError("polynomial must be a list of terms")
    terms = {}
    for item in obj:
        try:
            terms[tuple(int(x) for x in item["exp"])] = read_cnum(item["c"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad polynomial term: {item!r}") from exc
    return PolyScalar(dim, terms)


def jet_to_json(F: JetMap) -> dict:
    return {"base": cvec(F.base), "order": F.order,
            "components": [poly_to_json(c) for c in F.components]}


def jet_from_json(obj) -> JetMap:
    try:
        base = read_cvec(obj["base"])
        order = int(obj["order"])
        comps = [poly_from_json(c, base.size) for c in obj["components"]]
    except (KeyError, TypeError) as exc:
        raise SchemaError("bad jet encoding") from exc
    return JetMap(base, order, comps)


def twoform_to_json(T: TwoFormPoly) -> list:
    return [{"i": i + 1, "j": j + 1, "g": poly_to_json(g)}
            for (i, j), g in sorted(T.coeffs.items())]


def decomposition_to_json(d: HamiltonianDecomposition) -> dict:
    return {"k": d.degree,
            "terms": [{"b": cvec(b), "c": cnum(c)}
                      for b, c in zip(d.directions, d.coefficients)]}


def unipoly_to_json(f: UniPoly) -> dict:
    out = {"f": [cnum(c) for c in f.coeffs]}
    if f._terms is not None:
        out["f_plan"] = [{"scalar": cnum(s),
                          "bases": [{"coeffs": [cnum(c) for c in b],
                                     "power": int(p)} for b, p in bases]}
                         for s, bases in f._terms]
    return out


def unipoly_from_json(obj) -> UniPoly:
    if "f_plan" in obj and obj["f_plan"] is not None:
        terms = []
        for t in obj["f_plan"]:
            bases = [(np.array([read_cnum(c) for c in b["coeffs"]]),
                      int(b["power"])) for b in t["bases"]]
            terms.append((read_cnum(t["scalar"]), bases))
        return UniPoly.from_terms(terms)
    return UniPoly(np.array([read_cnum(c) for c in obj["f"]]))


def word_to_json(W: Word) -> dict:
    factors = []
    for f in W.factors:
        if isinstance(f, Shear):
            entry = {"kind": "shear", "v": cvec(f.v)}
            entry.update(unipoly_to_json(f.f))
        elif isinstance(f, GradShear):
            entry = {"kind": "gradshear", "side": f.side,
                     "potential": poly_to_json(f.potential),
                     "n": f.potential.dim}
        else:
            raise SchemaError(f"unknown factor type {type(f)!r}")
        factors.append(entry)
    return {"factors": factors}


def word_from_json(obj) -> Word:
    try:
        raw = obj["factors"]
    except (KeyError, TypeError) as exc:
        raise SchemaError("word must carry a factor list") from exc
    factors = []
    for item in raw:
        kind = item.get("kind")
        if kind == "shear":
            factors.append(Shear(read_cvec(item["v"]),
                                 unipoly_from_json(item)))
        elif kind == "gradshear":
            n = int(item["n"])
            factors.append(GradShear(item["side"],
                                     poly_from_json(item["potential"], n)))
        else:
            raise SchemaError(f"unknown factor kind {kind!r}")
    return Word(tuple(factors))


def factorword_to_json(W: FactorWord) -> dict:
    out = []
    for f in W.factors:
        if isinstance(f, Transvection):
            out.append({"kind": "transvection", "v": cvec(f.v),
                        "alpha": cnum(f.alpha)})
        else:
            out.append({"kind": "elem", "side": f.side, "i": f.i, "j": f.j,
                        "n": f.n, "alpha": cnum(f.alpha)})
    return {"factors": out}


def factorword_from_json(obj) -> FactorWord:
    factors = []
    for item in obj.get("factors", []):
        kind = item.get("kind")
        if kind == "transvection":
            factors.append(Transvection(read_cvec(item["v"]),
                                        read_cnum(item["alpha"])))
        elif kind == "elem":
            factors.append(ElemFactor(int(item["n"]), item["side"],
                                      int(item["i"]), int(item["j"]),
                                      read_cnum(item["alpha"])))
        else:
            raise SchemaError(f"unknown factor kind {kind!r}")
    return FactorWord(tuple(factors))


def job_to_json(job: InterpolationJob) -> dict:
    return {
        "jet": jet_to_json(job.jet),
        "flats": [{"point": cvec(f.point), "order": f.order}
                  for f in job.flats],
        "fixpoints": [cvec(c) for c in job.fixpoints],
        "region": None if job.region is None else cmat(job.region),
        "eps": job.eps,
        "seed": job.seed,
    }


def job_from_json(obj) -> InterpolationJob:
    try:
        jet = jet_from_json(obj["jet"])
        flats = tuple(FlatSpec(read_cvec(f["point"]), int(f["order"]))
                      for f in obj.get("flats", []))
        fixpoints = tuple(read_cvec(c) for c in obj.get("fixpoints", []))
        region = obj.get("region")
        region_arr = None if region is None else read_cmat(region)
        return InterpolationJob(jet=jet, flats=flats, fixpoints=fixpoints,
                                region=region_arr,
                                eps=float(obj.get("eps", 0.5)),
                                seed=int(obj.get("seed", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError("bad interpolation job encoding") from exc

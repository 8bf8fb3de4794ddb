"""Center-bias regularisation, signed linear combinations of loss terms, presets.

A combination is a list of ``Term(kind, coeff, params)``.  Score terms
(``cc``, ``nss``) are raw scores, so they carry negative coefficients
when minimised.  ``bhat`` is already a loss and keeps positive ones.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any, Mapping

import numpy as np

from . import distribution as dist
from . import perceptual, pixel, scores
from .core import FixationSet, SaliencyError, as_array, check_same_shape
from .result import LossResult

CENTER_BIAS_ALPHA = 0.1
AGGREGATIONS = ("mean", "sum")

TERM_KINDS = (
    "mse", "ead", "ae", "mlnet", "sig_mse",
    "kld", "bhat", "bce", "wbce", "focal", "nll",
    "cc", "nss", "df", "gm", "r",
)
# terms that only look at the prediction and the fixations
FIXATION_TERMS = ("nll", "nss")

_PARAM_KEYS = {
    "sig_mse": {"lambda", "k"},
    "kld": {"kl_direction", "distribution"},
    "bhat": {"distribution"},
    "nll": {"distribution"},
    "wbce": {"w"},
    "focal": {"gamma"},
    "nss": {"nss_mode"},
    "r": {"alpha", "aggregation"},
    "df": {"seed"},
    "gm": {"seed"},
}


def center_bias_from_maps(maps) -> np.ndarray:
    maps = [as_array(m, "map") for m in maps]
    if not maps:
        raise SaliencyError("center bias needs at least one map")
    shape = maps[0].shape
    for m in maps:
        if m.shape != shape:
            raise SaliencyError(f"mixed map dimensions: {shape} vs {m.shape}")
    return np.mean(np.stack(maps), axis=0)


@dataclass(frozen=True)
class CenterBias:
    bias: np.ndarray
    alpha: float = CENTER_BIAS_ALPHA
    aggregation: str = "mean"

    def __post_init__(self):
        if not self.alpha >= 0:
            raise SaliencyError(f"center-bias alpha must be >= 0, got {self.alpha}")
        if self.aggregation not in AGGREGATIONS:
            raise SaliencyError(f"unknown regularizer aggregation {self.aggregation!r}")


def center_bias_term(pred, cb: CenterBias) -> LossResult:
    p = as_array(pred, "prediction")
    b = as_array(cb.bias, "center bias")
    check_same_shape(p, b)
    d = p - b
    if cb.aggregation == "mean":
        return LossResult(cb.alpha * float(np.mean(d * d)), 2.0 * cb.alpha * d / d.size)
    return LossResult(cb.alpha * float(np.sum(d * d)), 2.0 * cb.alpha * d)


@dataclass(frozen=True)
class Term:
    kind: str
    coeff: float = 1.0
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in TERM_KINDS:
            raise SaliencyError(f"unknown loss term kind {self.kind!r}")
        if not np.isfinite(self.coeff):
            raise SaliencyError(f"{self.kind}: non-finite coefficient")
        extra = set(self.params) - _PARAM_KEYS.get(self.kind, set())
        if extra:
            raise SaliencyError(f"{self.kind}: unexpected parameters {sorted(extra)}")
        # parameter validation happens here, not at first evaluation
        if self.kind == "sig_mse":
            self.sig_params()
        elif self.kind == "wbce":
            dist.WbceParams(float(self.params.get("w", 0.5)))
        elif self.kind == "focal":
            dist.FocalParams(float(self.params.get("gamma", 2.0)))
        elif self.kind == "kld" and self.params.get("kl_direction", "as_written") not in dist.KL_DIRECTIONS:
            raise SaliencyError(f"unknown kl_direction {self.params['kl_direction']!r}")
        elif self.kind == "nss" and self.params.get("nss_mode", "per_fixation") not in scores.NSS_MODES:
            raise SaliencyError(f"unknown nss_mode {self.params['nss_mode']!r}")
        elif self.kind == "r":
            CenterBias(np.zeros((1, 1)), float(self.params.get("alpha", CENTER_BIAS_ALPHA)),
                       self.params.get("aggregation", "mean"))
        if self.params.get("distribution", "normalized") not in ("normalized", "raw"):
            raise SaliencyError(f"{self.kind}: distribution must be 'normalized' or 'raw'")

    def sig_params(self) -> pixel.SigWeightParams:
        return pixel.SigWeightParams(float(self.params.get("k", 10.0)), float(self.params.get("lambda", 0.55)))

    @property
    def label(self) -> str:
        if self.kind == "sig_mse":
            return f"sig_mse(lambda={self.sig_params().lam:g})"
        if self.kind == "wbce":
            return f"wbce(w={float(self.params.get('w', 0.5)):g})"
        return self.kind


@lru_cache(maxsize=8)
def _extractor(seed: int) -> perceptual.FeatureExtractor:
    return perceptual.FeatureExtractor.seeded(seed)


@dataclass(frozen=True)
class LossCombination:
    terms: tuple[Term, ...]
    center_bias: np.ndarray | None = None
    extractor: perceptual.FeatureExtractor | None = None

    def __post_init__(self):
        if not self.terms:
            raise SaliencyError("a combination needs at least one term")
        object.__setattr__(self, "terms", tuple(self.terms))

    def with_center_bias(self, bias) -> "LossCombination":
        return replace(self, center_bias=as_array(bias, "center bias"))

    @property
    def needs_fixations(self) -> bool:
        return any(t.kind in FIXATION_TERMS for t in self.terms)

    @property
    def needs_center_bias(self) -> bool:
        return any(t.kind == "r" for t in self.terms)

    def coefficients(self) -> dict[str, float]:
        return {t.label: t.coeff for t in self.terms}

    def describe(self) -> str:
        parts = []
        for t in self.terms:
            sign = "-" if t.coeff < 0 else "+"
            parts.append(f"{sign} {abs(t.coeff):g}*{t.label}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else text


def evaluate_term(term: Term, gt, pred, fix: FixationSet | None, combo: LossCombination) -> LossResult:
    kind, prm = term.kind, term.params
    normalized = prm.get("distribution", "normalized") == "normalized"
    if kind == "mse":
        return pixel.mse(gt, pred)
    if kind == "ead":
        return pixel.ead(gt, pred)
    if kind == "ae":
        return pixel.ae(gt, pred)
    if kind == "mlnet":
        return pixel.wmse_mlnet(gt, pred)
    if kind == "sig_mse":
        return pixel.wmse_sig(gt, pred, term.sig_params())
    if kind == "kld":
        direction = prm.get("kl_direction", "as_written")
        if normalized:
            return dist.through_distribution(dist.kld, gt, pred, direction=direction)
        return dist.kld(gt, pred, direction)
    if kind == "bhat":
        return dist.through_distribution(dist.bhat, gt, pred) if normalized else dist.bhat(gt, pred)
    if kind == "bce":
        return dist.bce(gt, pred)
    if kind == "wbce":
        return dist.wbce(gt, pred, dist.WbceParams(float(prm.get("w", 0.5))))
    if kind == "focal":
        return dist.focal(gt, pred, dist.FocalParams(float(prm.get("gamma", 2.0))))
    if kind == "cc":
        return scores.cc_score(gt, pred)
    if kind == "df" or kind == "gm":
        f = combo.extractor or _extractor(int(prm.get("seed", perceptual.DEFAULT_SEED)))
        return perceptual.df_loss(gt, pred, f) if kind == "df" else perceptual.gm_loss(gt, pred, f)
    if kind == "r":
        if combo.center_bias is None:
            raise SaliencyError("center-bias term needs a bias map (use with_center_bias)")
        cb = CenterBias(combo.center_bias, float(prm.get("alpha", CENTER_BIAS_ALPHA)), prm.get("aggregation", "mean"))
        return center_bias_term(pred, cb)
    # fixation terms
    if fix is None:
        raise SaliencyError(f"{kind} needs a fixation set")
    if kind == "nll":
        return dist.nll_raw(pred, fix) if normalized else dist.nll(pred, fix)
    return scores.nss_score(pred, fix, prm.get("nss_mode", "per_fixation"))


def combine_terms(combo: LossCombination, gt, pred, fix: FixationSet | None = None) -> list[LossResult]:
    """Evaluate every term once, unweighted, in term order."""
    out = []
    for n, term in enumerate(combo.terms):
        try:
            out.append(evaluate_term(term, gt, pred, fix, combo))
        except SaliencyError as e:
            raise type(e)(f"term {n} ({term.label}): {e}") from e
    return out


def combine(combo: LossCombination, gt, pred, fix: FixationSet | None = None) -> LossResult:
    results = combine_terms(combo, gt, pred, fix)
    value = 0.0
    grad = np.zeros(np.shape(results[0].gradient))
    for term, res in zip(combo.terms, results):
        value += term.coeff * res.value
        grad += term.coeff * res.gradient
    return LossResult(value, grad)


# ---------------------------------------------------------------------------
# presets

def _lc1():
    return [Term("kld", 10.0), Term("cc", -2.0), Term("nss", -1.0)]


def _lc2():
    return _lc1() + [Term("df", 1.0), Term("gm", 1.0), Term("sig_mse", 1.0, {"lambda": 0.55})]


_R = Term("r", 1.0, {"alpha": CENTER_BIAS_ALPHA})

_PRESETS: dict[str, list[Term]] = {
    "MSE": [Term("mse")],
    "EAD": [Term("ead")],
    "AE": [Term("ae")],
    "MLNET-MSE": [Term("mlnet")],
    "SIG-MSE (lambda=0.25)": [Term("sig_mse", 1.0, {"lambda": 0.25})],
    "SIG-MSE (lambda=0.55)": [Term("sig_mse", 1.0, {"lambda": 0.55})],
    "SIG-MSE (lambda=0.75)": [Term("sig_mse", 1.0, {"lambda": 0.75})],
    "BCE": [Term("bce")],
    **{f"W-BCE w={w:g}": [Term("wbce", 1.0, {"w": w})] for w in (0.9, 0.8, 0.7, 0.6, 0.5, 0.4)},
    "Focal Loss": [Term("focal", 1.0, {"gamma": 2.0})],
    "KLD": [Term("kld")],
    "Bhat": [Term("bhat")],
    "NLL": [Term("nll")],
    "CC": [Term("cc", -1.0)],
    "NSS": [Term("nss", -1.0)],
    "Deep Features (DF)": [Term("df")],
    "Gram Matrices (GM)": [Term("gm")],
    "SIG-MSE + R": [Term("sig_mse", 1.0, {"lambda": 0.55}), _R],
    "KLD + CC + NSS": _lc1(),
    "KLD + CC + NSS + DF + GM": _lc1() + [Term("df"), Term("gm")],
    "KLD + CC + NSS + R": _lc1() + [_R],
    "KLD + CC + NSS + DF + GM + SIG-MSE": _lc2(),
    "KLD + CC + NSS + DF + GM + SIG-MSE + R": _lc2() + [_R],
}

_ALIASES = {
    "LC1": "KLD + CC + NSS",
    "LC1_R": "KLD + CC + NSS + R",
    "LC2": "KLD + CC + NSS + DF + GM + SIG-MSE",
    "LC2_R": "KLD + CC + NSS + DF + GM + SIG-MSE + R",
    "SIG-MSE": "SIG-MSE (lambda=0.55)",
    "FOCAL": "Focal Loss",
    "FL": "Focal Loss",
    "DF": "Deep Features (DF)",
    "GM": "Gram Matrices (GM)",
    "MLNET": "MLNET-MSE",
    "BHATTACHARYYA": "Bhat",
}

PRESET_NAMES = tuple(_PRESETS)


def _key(name: str) -> str:
    k = name.upper().replace("Λ", "LAMBDA").replace("$", "").replace("\\", "")
    k = re.sub(r"\bKL\b", "KLD", k)
    return re.sub(r"\s+", "", k)


_LOOKUP = {_key(n): n for n in _PRESETS}
_LOOKUP.update({_key(a): n for a, n in _ALIASES.items()})


def preset(name: str) -> LossCombination:
    """Combination for a Table-style row name or one of the LC aliases."""
    canonical = _LOOKUP.get(_key(name))
    if canonical is None:
        raise SaliencyError(f"unknown preset {name!r}")
    return LossCombination(tuple(_PRESETS[canonical]))


def preset_name(name: str) -> str:
    canonical = _LOOKUP.get(_key(name))
    if canonical is None:
        raise SaliencyError(f"unknown preset {name!r}")
    return canonical


# ---------------------------------------------------------------------------
# spec files

def _coerce(value: str):
    try:
        return float(value)
    except ValueError:
        return value


def parse_spec(text: str) -> LossCombination:
    """Parse ``[term.<n>]`` sections with ``kind``, ``coeff`` and term parameters."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise SaliencyError(f"malformed combination spec: {e}") from e
    sections = []
    for name in cp.sections():
        m = re.fullmatch(r"term\.(\w+)", name)
        if not m:
            raise SaliencyError(f"unexpected section [{name}]")
        sections.append((m.group(1), cp[name]))
    sections.sort(key=lambda s: (0, int(s[0]), "") if s[0].isdigit() else (1, 0, s[0]))
    terms = []
    for label, sec in sections:
        if "kind" not in sec:
            raise SaliencyError(f"[term.{label}] has no kind")
        params = {k: _coerce(v) for k, v in sec.items() if k not in ("kind", "coeff")}
        try:
            coeff = float(sec.get("coeff", "1"))
        except ValueError as e:
            raise SaliencyError(f"[term.{label}] bad coeff: {e}") from e
        terms.append(Term(sec["kind"].strip(), coeff, params))
    return LossCombination(tuple(terms))


def format_spec(combo: LossCombination) -> str:
    lines = []
    for n, t in enumerate(combo.terms, start=1):
        lines.append(f"[term.{n}]")
        lines.append(f"kind = {t.kind}")
        lines.append(f"coeff = {t.coeff!r}")
        for k, v in t.params.items():
            lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)


def load_spec(path) -> LossCombination:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())

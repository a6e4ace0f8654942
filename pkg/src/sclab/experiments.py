"""Seeded end-to-end trials and the statistics they aggregate into.

A trial takes a plain dict of settings plus its own seed and returns one
record. Records never contain wall-clock time, so reruns with the same seed
produce identical records; elapsed seconds travel separately.
"""

import hashlib
import json
import math
import statistics
import time
from collections import OrderedDict
from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional

import numpy as np

from ._validation import check_random_state
from .errors import ConfigError
from .formats import load_params
from .groups import CurveParams
from .hnp import (
    AttackConfig,
    derive_params,
    filter_fastest,
    recover_key,
    timing_equations,
    wnaf_equations,
)
from .leaksim import (
    CALIBRATED_BEEA_NOISE,
    CALIBRATED_EM_NOISE,
    NoiseModel,
    beea_oracle,
    noisy_da_sequence,
    signed_wnaf_oracle,
)
from .rsarec import NotFound, PruneFilters, RsaAttackConfig, full_rsa_attack, rsa_keygen
from .sign import NonceMode, dsa_keygen, dsa_sign, ecdsa_keygen, ecdsa_sign

ATTACKS = ("dsa-timing", "ecdsa-wnaf", "ecdsa-signed", "rsa")

NOISE_PRESETS = {
    "none": NoiseModel(),
    "calibrated_beea": CALIBRATED_BEEA_NOISE,
    "calibrated_em": CALIBRATED_EM_NOISE,
}


# ---------------------------------------------------------------------------
# Configuration

_SCHEMA = {
    "experiment": {
        "attack": str, "group": str, "trials": int, "seed": int, "jobs": int,
        "time_budget": float, "out": str,
    },
    "samples": {"count": int, "mode": str, "word_bits": int, "w": int, "sigma_windows": float},
    "noise": {"preset": str, **{f.name: None for f in fields(NoiseModel) if f.name not in ("interrupts", "seed")}},
    "lattice": {
        "ell": int, "d": int, "f": int, "c": float, "delta": float, "z_min": int, "block_size": int,
        "rerandomize": int, "max_lattices": int, "per_signature_cap": int, "length_filter": bool,
        "backend": str,
    },
    "rsa": {
        "modulus_bits": int, "e": int, "margin": int, "max_candidates": int, "beam_width": int,
        "error_budget": int, "variant_seconds": float, "max_oracle_calls": int,
    },
}

_DEFAULTS = {
    "experiment": {"attack": "dsa-timing", "group": "toy_dsa128", "trials": 1, "seed": 0, "jobs": 1},
    "samples": {"count": 16384, "mode": "PADDED_THEN_REDUCED", "w": 4, "sigma_windows": 0.3},
    "noise": {"preset": "none"},
    "lattice": {"ell": 4, "c": 1.25, "delta": 1.5, "z_min": 1, "block_size": 20, "rerandomize": 2,
                "max_lattices": 50, "per_signature_cap": 0, "length_filter": True, "backend": "auto"},
    "rsa": {"modulus_bits": 512, "e": 65537, "margin": 5, "max_candidates": 150000, "beam_width": 4000,
            "error_budget": 8, "variant_seconds": 60.0, "max_oracle_calls": 64},
}


def _coerce(value, kind, name):
    if kind is None:
        kind = type(getattr(NoiseModel(), name.split(".")[1]))
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(str(value).strip().replace("_", ""), 0) if isinstance(value, str) else int(value)
        if kind is float:
            return float(value)
        return str(value).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"field '{name}' has an invalid value {value!r}", field=name) from None


@dataclass
class ExperimentConfig:
    """Validated nested settings; ``sections`` maps section -> key -> value."""

    sections: Dict[str, Dict[str, object]] = field(default_factory=dict)

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    @property
    def attack(self) -> str:
        return self.get("experiment", "attack")

    def canonical(self) -> str:
        return json.dumps(self.sections, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def with_overrides(self, **experiment):
        sections = {k: dict(v) for k, v in self.sections.items()}
        for k, v in experiment.items():
            if v is not None:
                sections["experiment"][k] = _coerce(v, _SCHEMA["experiment"][k], f"experiment.{k}")
        return validate_config(sections)

    def noise_model(self) -> NoiseModel:
        sec = dict(self.sections.get("noise", {}))
        preset = sec.pop("preset", "none")
        base = NOISE_PRESETS[preset]
        return NoiseModel(**{**base.__dict__, **sec})


# settings that differ from the timing defaults for the other attacks
_ATTACK_DEFAULTS = {
    "ecdsa-wnaf": {"experiment": {"group": "toy_curve127"}, "samples": {"count": 8, "mode": "RAW", "w": 5}},
    "ecdsa-signed": {"experiment": {"group": "toy_curve127"}, "samples": {"count": 8, "mode": "RAW", "w": 5}},
    "rsa": {"samples": {"count": 1}, "noise": {"preset": "calibrated_beea"}},
}


def validate_config(raw) -> ExperimentConfig:
    """Merge defaults, type-check every field and reject unknown ones."""
    sections = {name: dict(vals) for name, vals in _DEFAULTS.items()}
    attack = str(raw.get("experiment", {}).get("attack", sections["experiment"]["attack"])).strip()
    for sec, vals in _ATTACK_DEFAULTS.get(attack, {}).items():
        sections[sec].update(vals)
    for sec, vals in raw.items():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", field=sec)
        for key, value in vals.items():
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown field '{sec}.{key}'", field=f"{sec}.{key}")
            sections[sec][key] = _coerce(value, _SCHEMA[sec][key], f"{sec}.{key}")
    exp = sections["experiment"]
    if exp["attack"] not in ATTACKS:
        raise ConfigError(f"experiment.attack must be one of {', '.join(ATTACKS)}", field="experiment.attack")
    for key in ("trials", "jobs"):
        if exp[key] < 1:
            raise ConfigError(f"experiment.{key} must be >= 1", field=f"experiment.{key}")
    if exp["seed"] < 0 or exp["seed"] >= 1 << 64:
        raise ConfigError("experiment.seed must be an unsigned 64-bit integer", field="experiment.seed")
    if sections["noise"]["preset"] not in NOISE_PRESETS:
        raise ConfigError(f"noise.preset must be one of {', '.join(NOISE_PRESETS)}", field="noise.preset")
    try:
        NonceMode.parse(sections["samples"]["mode"], sections["samples"].get("word_bits", 0))
    except ValueError:
        raise ConfigError("unknown nonce mode", field="samples.mode") from None
    if exp["attack"] != "rsa":
        try:
            load_params(exp["group"])
        except ConfigError as exc:
            raise ConfigError(str(exc), field="experiment.group") from None
    cfg = ExperimentConfig(sections)
    try:
        cfg.noise_model()
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}", field="noise") from None
    return cfg


def read_config_sections(path) -> Dict[str, Dict[str, str]]:
    import configparser

    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}", field="config") from None
    return {s: dict(cp[s]) for s in cp.sections()}


def load_config(path) -> ExperimentConfig:
    return validate_config(read_config_sections(path))


def trial_seeds(seed: int, n: int) -> List[int]:
    """Independent 64-bit seeds for ``n`` trials derived from one base seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


# ---------------------------------------------------------------------------
# Trials


def _lattice_config(cfg: ExperimentConfig, d, seed):
    lat = cfg.sections["lattice"]
    budget = cfg.get("experiment", "time_budget")
    return AttackConfig(
        d=d, ell=lat["ell"], z_min=lat["z_min"], c=lat["c"], delta=lat["delta"],
        w=cfg.get("samples", "w"), block_size=lat["block_size"], rerandomize=lat["rerandomize"],
        max_lattices=lat["max_lattices"], time_budget=budget * 60 if budget else None,
        per_signature_cap=lat["per_signature_cap"], length_filter=lat["length_filter"],
        seed=seed, backend=lat["backend"],
    )


def dsa_timing_trial(cfg: ExperimentConfig, seed: int) -> dict:
    params = load_params(cfg.get("experiment", "group"))
    rng = check_random_state(seed)
    smp, lat = cfg.sections["samples"], cfg.sections["lattice"]
    q = params.q
    m = q.bit_length()
    model = cfg.noise_model()
    if smp.get("sigma_windows") is not None and "gaussian_sigma" not in cfg.sections["noise"]:
        model = NoiseModel(**{**model.__dict__, "gaussian_sigma": smp["sigma_windows"] * model.per_window_cost})
    mode = NonceMode.parse(smp["mode"], smp.get("word_bits", 0))
    key = dsa_keygen(params, rng)
    N = smp["count"]
    samples = [dsa_sign(rng.randrange(1, q), key, params, mode, rng, w=smp["w"], leak_model=model) for _ in range(N)]
    f, d, _ = derive_params(N, m, lat["ell"], lat["delta"], lat["c"])
    f = lat.get("f") or f
    d = lat.get("d") or d
    eqs = timing_equations(filter_fastest(samples, f), lat["ell"], q)
    res = recover_key(eqs, _lattice_config(cfg, d, seed), key.public, params, rng)
    return {
        "attack": "dsa-timing", "N": N, "f": f, "dim": d + 2, "seed": seed,
        "success": res.alpha == key.alpha, "lattices": res.stats["lattices_built"],
        "_seconds": res.stats["elapsed"],
    }


def wnaf_dimension(eqs, m: int, c: float) -> int:
    """c * m over the mean number of known bits per equation, capped by the pool."""
    if not eqs:
        return 2
    bits = statistics.fmean(e.z for e in eqs)
    return max(2, min(len(eqs), math.ceil(c * m / bits)))


def wnaf_trial(cfg: ExperimentConfig, seed: int, signed: bool) -> dict:
    curve = load_params(cfg.get("experiment", "group"))
    if not isinstance(curve, CurveParams):
        raise ConfigError("wNAF attacks need a curve group", field="experiment.group")
    rng = check_random_state(seed)
    smp, lat = cfg.sections["samples"], cfg.sections["lattice"]
    q = curve.q
    w = smp["w"]
    mode = NonceMode.parse(smp["mode"], smp.get("word_bits", 0))
    model = cfg.noise_model()
    noisy = model.flip_rate > 0 or model.drop_rate > 0
    key = ecdsa_keygen(curve, rng)
    sigs = []
    for _ in range(smp["count"]):
        s = ecdsa_sign(rng.randrange(1, q), key, curve, mode, rng, w=w, capture_sequence=True, record_nonce=signed)
        if signed:
            # the signed-digit channel reveals positions and signs exactly
            s.leak = signed_wnaf_oracle(s.truth_nonce, w)
            s.truth_nonce = None
        elif noisy:
            s.leak = noisy_da_sequence(s.leak, model, rng)
        sigs.append(s)
    eqs = wnaf_equations(
        sigs, w, q, signed=signed, z_min=lat["z_min"],
        per_signature_cap=lat["per_signature_cap"], length_filter=lat["length_filter"],
    )
    d = lat.get("d") or wnaf_dimension(eqs, q.bit_length(), lat["c"])
    rec = {"attack": "ecdsa-signed" if signed else "ecdsa-wnaf", "N": smp["count"], "dim": d + 2,
           "pool": len(eqs), "seed": seed}
    if len(eqs) < d:
        rec.update(success=False, lattices=0, _seconds=0.0)
        return rec
    res = recover_key(eqs, _lattice_config(cfg, d, seed), key.public, curve, rng)
    rec.update(success=res.alpha == key.alpha, lattices=res.stats["lattices_built"], _seconds=res.stats["elapsed"])
    return rec


def rsa_trial(cfg: ExperimentConfig, seed: int) -> dict:
    r = cfg.sections["rsa"]
    rng = check_random_state(seed)
    model = cfg.noise_model()
    kg = rsa_keygen(r["modulus_bits"], r["e"], rng)
    k = kg.key
    trace_p = beea_oracle(k.e, k.p - 1, model, rng)
    trace_q = beea_oracle(k.e, k.q - 1, model, rng)
    budget = cfg.get("experiment", "time_budget")
    acfg = RsaAttackConfig(
        margin=r["margin"],
        filters=PruneFilters(max_candidates=r["max_candidates"], beam_width=r["beam_width"], error_budget=r["error_budget"]),
        max_oracle_calls=r["max_oracle_calls"], variant_seconds=r["variant_seconds"],
        time_budget=budget * 60 if budget else None,
    )
    start = time.perf_counter()
    try:
        res = full_rsa_attack(trace_p, trace_q, k.N, k.e, acfg)
        ok = res.key.d == k.d or {res.key.p, res.key.q} == {k.p, k.q}
        stats = res.stats
    except NotFound as exc:
        ok, stats = False, exc.stats
    return {
        "attack": "rsa", "N": r["modulus_bits"], "seed": seed, "success": bool(ok),
        "oracle_calls": stats.get("oracle_calls", 0), "peak_live": stats.get("peak_live", 0),
        "_seconds": time.perf_counter() - start,
    }


def run_trial(cfg: ExperimentConfig, index: int, seed: int) -> dict:
    attack = cfg.attack
    if attack == "dsa-timing":
        rec = dsa_timing_trial(cfg, seed)
    elif attack == "ecdsa-wnaf":
        rec = wnaf_trial(cfg, seed, signed=False)
    elif attack == "ecdsa-signed":
        rec = wnaf_trial(cfg, seed, signed=True)
    else:
        rec = rsa_trial(cfg, seed)
    rec["trial"] = index
    return rec


def split_timing(records):
    """Separate the deterministic part of each record from its elapsed time."""
    clean, timings = [], []
    for rec in records:
        rec = dict(rec)
        secs = rec.pop("_seconds", None)
        clean.append(rec)
        if secs is not None:
            timings.append({"trial": rec["trial"], "attack": rec["attack"], "seconds": round(float(secs), 3)})
    return clean, timings


# ---------------------------------------------------------------------------
# Aggregation


@dataclass
class StatsRow:
    attack: str
    N: int
    dim: Optional[int]
    runs: int
    successes: int
    min: Optional[float]
    max: Optional[float]
    median: Optional[float]
    mean: Optional[float]
    stdev: Optional[float]
    minutes: Optional[float]

    @property
    def ratio(self) -> float:
        return self.successes / self.runs if self.runs else 0.0


def aggregate(records, timings=None, count_field=None) -> List[StatsRow]:
    """Group records by (attack, N, dim) and summarise the successful runs.

    Counts are lattice constructions (or oracle calls for RSA); the time
    column is the median over successful runs, in minutes. Stdev is the
    sample standard deviation.
    """
    secs = {}
    for t in timings or ():
        secs[(t["attack"], t["trial"])] = t["seconds"]
    groups: "OrderedDict[tuple, list]" = OrderedDict()
    for rec in records:
        key = (rec["attack"], rec.get("N"), rec.get("dim"))
        groups.setdefault(key, []).append(rec)
    rows = []
    for (attack, N, dim), recs in sorted(groups.items(), key=lambda kv: (kv[0][0], -(kv[0][1] or 0), kv[0][2] or 0)):
        ok = [r for r in recs if r.get("success")]
        field_ = count_field or ("lattices" if all("lattices" in r for r in recs) else "oracle_calls")
        vals = [r[field_] for r in ok]
        times = [secs[(attack, r["trial"])] / 60 for r in ok if (attack, r["trial"]) in secs]
        times += [r["minutes"] for r in ok if "minutes" in r and (attack, r["trial"]) not in secs]
        rows.append(StatsRow(
            attack, N, dim, len(recs), len(ok),
            min(vals) if vals else None, max(vals) if vals else None,
            statistics.median(vals) if vals else None,
            statistics.fmean(vals) if vals else None,
            statistics.stdev(vals) if len(vals) > 1 else (0.0 if vals else None),
            statistics.median(times) if times else None,
        ))
    return rows


CSV_COLUMNS = ("attack", "N", "dim", "runs", "Min", "Max", "Median", "Mean", "Stdev", "Time", "Ratio")


def _fmt(x, digits):
    if x is None:
        return ""
    if digits == 0:
        return str(int(x)) if float(x).is_integer() else f"{x:.1f}"
    return f"{x:.{digits}f}"


def stats_csv(rows: List[StatsRow]) -> str:
    import csv
    import io

    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for r in rows:
        wr.writerow([
            r.attack, r.N if r.N is not None else "", r.dim if r.dim is not None else "", r.runs,
            _fmt(r.min, 0), _fmt(r.max, 0), _fmt(r.median, 0), _fmt(r.mean, 1), _fmt(r.stdev, 1),
            _fmt(r.minutes, 1), f"{r.ratio:.2f}",
        ])
    return buf.getvalue()


def stats_summary(rows: List[StatsRow]) -> str:
    lines = []
    for r in rows:
        dim = f" dim {r.dim}" if r.dim is not None else ""
        if r.successes:
            body = (f"min {_fmt(r.min, 0)} max {_fmt(r.max, 0)} median {_fmt(r.median, 0)} "
                    f"mean {_fmt(r.mean, 1)} stdev {_fmt(r.stdev, 1)}")
        else:
            body = "no successful runs"
        lines.append(f"{r.attack} N={r.N}{dim}: {r.successes}/{r.runs} ok (ratio {r.ratio:.2f}); {body}")
    return "\n".join(lines) + ("\n" if lines else "")


__all__ = [
    "ATTACKS",
    "CSV_COLUMNS",
    "ExperimentConfig",
    "NOISE_PRESETS",
    "StatsRow",
    "aggregate",
    "load_config",
    "read_config_sections",
    "run_trial",
    "split_timing",
    "stats_csv",
    "stats_summary",
    "trial_seeds",
    "validate_config",
    "wnaf_dimension",
]

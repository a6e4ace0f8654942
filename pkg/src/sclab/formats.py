"""On-disk formats: parameter/key files, JSON-lines records, waveforms, matrices.

Parameter and key files are INI documents (``configparser``) whose integer
fields accept decimal or ``0x`` hex. Every writer goes through a temp file in
the destination directory followed by ``os.replace`` so readers never see a
half-written artifact.
"""

import configparser
import json
import os
import struct
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .groups import CurveParams, DsaParams

SCHEMA_VERSION = 1
WAVEFORM_MAGIC = b"WAVF"


def parse_int(text, field="value"):
    if isinstance(text, int):
        return text
    s = str(text).strip().replace("_", "")
    try:
        return int(s, 0)
    except ValueError:
        raise ConfigError(f"field '{field}' is not an integer: {text!r}", field=field) from None


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def _read_ini(source):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        with open(source, encoding="utf-8") as fh:
            cp.read_file(fh)
    else:
        cp.read_string(str(source))
    return cp


def _require(section, key, name):
    if key not in section:
        raise ConfigError(f"missing field '{name}.{key}'", field=f"{name}.{key}")
    return section[key]


def bundled_params_names():
    return sorted(p.name[:-4] for p in resources.files("sclab.data").iterdir() if p.name.endswith(".ini"))


def load_params(source):
    """Load a DSA group or curve from a file path or a bundled name."""
    if isinstance(source, str) and "\n" not in source and not Path(source).exists():
        ref = resources.files("sclab.data").joinpath(f"{source}.ini")
        if not ref.is_file():
            raise ConfigError(f"unknown parameter set '{source}'", field="group")
        source = ref.read_text(encoding="utf-8")
    cp = _read_ini(source)
    if "group" not in cp:
        raise ConfigError("missing [group] section", field="group")
    sec = cp["group"]
    kind = _require(sec, "kind", "group").strip().lower()
    if kind == "dsa":
        return DsaParams(*(parse_int(_require(sec, k, "group"), f"group.{k}") for k in ("p", "q", "g")))
    if kind == "curve":
        fp = parse_int(_require(sec, "field_prime", "group"), "group.field_prime")
        vals = {k: parse_int(_require(sec, k, "group"), f"group.{k}") for k in ("a", "b", "gx", "gy", "q")}
        return CurveParams(
            field_prime=fp,
            a=vals["a"] % fp,
            b=vals["b"] % fp,
            G=(vals["gx"], vals["gy"]),
            q=vals["q"],
            f=parse_int(sec.get("f", "1"), "group.f"),
            name=sec.get("name", ""),
        )
    raise ConfigError(f"unknown group kind '{kind}'", field="group.kind")


def params_to_ini(params) -> str:
    if isinstance(params, DsaParams):
        body = f"kind = dsa\np = {params.p:#x}\nq = {params.q:#x}\ng = {params.g:#x}\n"
    else:
        body = (
            f"kind = curve\nname = {params.name}\nfield_prime = {params.field_prime:#x}\n"
            f"a = {params.a:#x}\nb = {params.b:#x}\ngx = {params.G[0]:#x}\ngy = {params.G[1]:#x}\n"
            f"q = {params.q:#x}\nf = {params.f}\n"
        )
    return "[group]\n" + body


def save_key(path, kind: str, fields: dict, group: str = ""):
    """Write a key file. ``fields`` maps names to integers (or points as tuples)."""
    lines = ["[key]", f"kind = {kind}"]
    if group:
        lines.append(f"group = {group}")
    for name, value in fields.items():
        if isinstance(value, tuple):
            lines.append(f"{name}_x = {value[0]:#x}")
            lines.append(f"{name}_y = {value[1]:#x}")
        else:
            lines.append(f"{name} = {value:#x}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_key(path):
    cp = _read_ini(path)
    if "key" not in cp:
        raise ConfigError("missing [key] section", field="key")
    sec = cp["key"]
    out = {"kind": _require(sec, "kind", "key").strip().lower(), "group": sec.get("group", "")}
    for name, raw in sec.items():
        if name in ("kind", "group"):
            continue
        out[name] = parse_int(raw, f"key.{name}")
    for base in [n[:-2] for n in list(out) if n.endswith("_x")]:
        if base + "_y" in out:
            out[base] = (out.pop(base + "_x"), out.pop(base + "_y"))
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def dumps_records(records) -> str:
    lines = []
    for rec in records:
        rec = dict(rec)
        rec.setdefault("schema_version", SCHEMA_VERSION)
        lines.append(json.dumps(_jsonable(rec), sort_keys=True, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def write_records(path, records):
    atomic_write_text(path, dumps_records(records))


def read_records(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            ver = rec.get("schema_version")
            if ver != SCHEMA_VERSION:
                raise ConfigError(f"{path}:{lineno}: unsupported schema_version {ver!r}", field="schema_version")
            out.append(rec)
    return out


def write_waveform(path, samples, sample_rate: float):
    arr = np.ascontiguousarray(np.asarray(samples, dtype="<f8"))
    header = json.dumps(
        {"sample_rate": float(sample_rate), "length": int(arr.size), "encoding": "float64-le"},
        sort_keys=True,
    ).encode("ascii")
    blob = WAVEFORM_MAGIC + struct.pack("<I", len(header)) + header + arr.tobytes()
    atomic_write_bytes(path, blob)


def read_waveform(path):
    """Return ``(samples, sample_rate)``."""
    data = Path(path).read_bytes()
    if data[:4] != WAVEFORM_MAGIC:
        raise ConfigError(f"{path}: not a waveform file", field="waveform")
    (hlen,) = struct.unpack("<I", data[4:8])
    header = json.loads(data[8 : 8 + hlen])
    if header.get("encoding") != "float64-le":
        raise ConfigError(f"{path}: unsupported encoding {header.get('encoding')!r}", field="encoding")
    samples = np.frombuffer(data[8 + hlen :], dtype="<f8")
    if samples.size != header["length"]:
        raise ConfigError(f"{path}: length mismatch", field="length")
    return samples.copy(), header["sample_rate"]


def dump_matrix(M) -> str:
    return "".join(" ".join(str(int(x)) for x in row) + "\n" for row in M)


def load_matrix(text):
    rows = [[int(tok) for tok in line.split()] for line in str(text).splitlines() if line.strip()]
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise ConfigError("matrix rows have different lengths", field="matrix")
    return rows


__all__ = [
    "SCHEMA_VERSION",
    "atomic_write_bytes",
    "atomic_write_text",
    "bundled_params_names",
    "dump_matrix",
    "dumps_records",
    "load_key",
    "load_matrix",
    "load_params",
    "params_to_ini",
    "parse_int",
    "read_records",
    "read_waveform",
    "save_key",
    "write_records",
    "write_waveform",
]

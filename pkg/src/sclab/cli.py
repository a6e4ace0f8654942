"""Command-line harness: ``sclab <command> [options]``.

Exit status: 0 on success, 2 for a bad configuration (the message names the
field), 3 when an attack recovers no key, 1 for anything unexpected.
"""

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

from . import __version__
from ._validation import check_random_state
from .errors import ConfigError, SclabError
from .experiments import (
    ATTACKS,
    aggregate,
    read_config_sections,
    run_trial,
    split_timing,
    stats_csv,
    stats_summary,
    trial_seeds,
    validate_config,
)
from .formats import (
    atomic_write_text,
    bundled_params_names,
    load_key,
    load_params,
    read_records,
    save_key,
    write_records,
    write_waveform,
)
from .groups import CurveParams, DsaParams

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NOT_FOUND = 3

log = logging.getLogger("sclab")


def _setup_logging(verbose):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("[sclab] %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.DEBUG if verbose else logging.INFO)
    log.propagate = False


def _env_int(name):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw, 0)
    except ValueError:
        raise ConfigError(f"environment variable {name} is not an integer", field=name) from None


def _experiment_config(args, attack=None):
    raw = read_config_sections(args.config) if args.config else {}
    if attack:
        given = raw.get("experiment", {}).get("attack")
        if given is not None and given.strip() != attack:
            raise ConfigError(f"config is for '{given.strip()}', not '{attack}'", field="experiment.attack")
        raw.setdefault("experiment", {})["attack"] = attack
    cfg = validate_config(raw)
    seed = args.seed if args.seed is not None else _env_int("SCLAB_SEED")
    jobs = args.jobs if args.jobs is not None else _env_int("SCLAB_JOBS")
    return cfg.with_overrides(seed=seed, jobs=jobs, time_budget=args.time_budget,
                              out=args.out, trials=getattr(args, "trials", None))


def _out_dir(args, cfg=None):
    out = args.out or (cfg.get("experiment", "out") if cfg else None) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# Commands


def cmd_keygen(args):
    rng = check_random_state(args.seed if args.seed is not None else _env_int("SCLAB_SEED"))
    out = _out_dir(args)
    if args.rsa_bits:
        from .rsarec import rsa_keygen

        key = rsa_keygen(args.rsa_bits, args.e, rng).key
        fields = {name: getattr(key, name) for name in ("N", "e", "p", "q", "d", "d_p", "d_q", "i_q")}
        save_key(out / "key.ini", "rsa", fields)
        log.info("wrote RSA-%d key to %s", key.N.bit_length(), out / "key.ini")
        return EXIT_OK
    from .sign import dsa_keygen, ecdsa_keygen

    params = load_params(args.group)
    kind = "dsa" if isinstance(params, DsaParams) else "ecdsa"
    kp = dsa_keygen(params, rng) if kind == "dsa" else ecdsa_keygen(params, rng)
    save_key(out / "key.ini", kind, {"alpha": kp.alpha, "public": kp.public}, group=args.group)
    log.info("wrote %s key for %s to %s", kind, args.group, out / "key.ini")
    return EXIT_OK


def _sample_record(sig):
    rec = {"type": "signature", "r": str(sig.r), "s": str(sig.s), "h": str(sig.h)}
    if sig.leak is not None:
        rec["leak"] = sig.leak.to_record()
    return rec


def cmd_sign(args):
    from .sign import KeyPair, NonceMode, dsa_sign, ecdsa_sign

    key = load_key(args.key)
    if key["kind"] not in ("dsa", "ecdsa"):
        raise ConfigError("sign needs a dsa or ecdsa key", field="key.kind")
    params = load_params(key["group"])
    kp = KeyPair(key["alpha"], key["public"])
    rng = check_random_state(args.seed if args.seed is not None else _env_int("SCLAB_SEED"))
    mode = NonceMode.parse(args.mode, args.word_bits)
    recs = [{"type": "header", "group": key["group"], "public": _public_text(key["public"]), "mode": mode.tag.value}]
    for _ in range(args.count):
        h = rng.randrange(1, params.q)
        if isinstance(params, DsaParams):
            from .leaksim import NoiseModel

            sig = dsa_sign(h, kp, params, mode, rng, w=args.w, leak_model=NoiseModel() if args.leak else None)
        else:
            sig = ecdsa_sign(h, kp, params, mode, rng, w=args.w, capture_sequence=args.leak)
        recs.append(_sample_record(sig))
    out = _out_dir(args) / "signatures.jsonl"
    write_records(out, recs)
    log.info("wrote %d signatures to %s", args.count, out)
    return EXIT_OK


def _public_text(public):
    if isinstance(public, tuple):
        return [str(public[0]), str(public[1])]
    return str(public)


def _public_from_text(value):
    if isinstance(value, list):
        return (int(value[0]), int(value[1]))
    return int(value)


def cmd_leak(args):
    """Synthesize the leak dataset an attack config would consume."""
    from .leaksim import beea_oracle, signed_wnaf_oracle, synth_em_waveform
    from .rsarec import rsa_keygen
    from .sign import NonceMode, dsa_keygen, dsa_sign, ecdsa_keygen, ecdsa_sign

    cfg = _experiment_config(args)
    _log_start(cfg)
    out = _out_dir(args, cfg)
    rng = check_random_state(cfg.get("experiment", "seed"))
    model = cfg.noise_model()
    smp = cfg.sections["samples"]
    attack = cfg.attack
    recs = []
    if attack == "rsa":
        r = cfg.sections["rsa"]
        for i in range(smp["count"] if args.count is None else args.count):
            k = rsa_keygen(r["modulus_bits"], r["e"], rng).key
            tp = beea_oracle(k.e, k.p - 1, model, rng)
            tq = beea_oracle(k.e, k.q - 1, model, rng)
            recs.append({"type": "rsa_traces", "index": i, "N": str(k.N), "e": k.e,
                         "trace_p": tp.to_record(), "trace_q": tq.to_record()})
            if args.waveforms:
                wave = synth_em_waveform(tp, 1.0, model, rng)
                write_waveform(out / f"trace_{i:05d}_p.wav.bin", wave, 1.0)
        write_records(out / "leaks.jsonl", recs)
        log.info("wrote %d RSA trace pairs to %s", len(recs), out / "leaks.jsonl")
        return EXIT_OK
    params = load_params(cfg.get("experiment", "group"))
    mode = NonceMode.parse(smp["mode"], smp.get("word_bits", 0))
    count = smp["count"] if args.count is None else args.count
    if attack == "dsa-timing":
        from .leaksim import NoiseModel

        if not isinstance(params, DsaParams):
            raise ConfigError("timing datasets need a DSA group", field="experiment.group")
        if "gaussian_sigma" not in cfg.sections["noise"]:
            model = NoiseModel(**{**model.__dict__, "gaussian_sigma": smp["sigma_windows"] * model.per_window_cost})
        kp = dsa_keygen(params, rng)
        sign = lambda h: dsa_sign(h, kp, params, mode, rng, w=smp["w"], leak_model=model)  # noqa: E731
    else:
        if not isinstance(params, CurveParams):
            raise ConfigError("wNAF datasets need a curve group", field="experiment.group")
        kp = ecdsa_keygen(params, rng)
        signed = attack == "ecdsa-signed"

        def sign(h):
            s = ecdsa_sign(h, kp, params, mode, rng, w=smp["w"], capture_sequence=True, record_nonce=signed)
            if signed:
                s.leak = signed_wnaf_oracle(s.truth_nonce, smp["w"])
                s.truth_nonce = None
            return s

    recs.append({"type": "header", "attack": attack, "group": cfg.get("experiment", "group"),
                 "public": _public_text(kp.public), "mode": mode.tag.value, "w": smp["w"]})
    for i in range(count):
        recs.append(_sample_record(sign(rng.randrange(1, params.q))))
        if (i + 1) % 4096 == 0:
            log.info("signed %d/%d", i + 1, count)
    write_records(out / "leaks.jsonl", recs)
    log.info("wrote %d samples to %s", count, out / "leaks.jsonl")
    return EXIT_OK


def cmd_dsp_fit(args):
    from .dsp import SequenceRecoverer, component_error_rate
    from .leaksim import CALIBRATED_EM_NOISE, NoiseModel, synth_em_waveform
    from .rsarec import rsa_keygen

    rng = check_random_state(args.seed if args.seed is not None else _env_int("SCLAB_SEED"))
    model = CALIBRATED_EM_NOISE if args.noise == "calibrated" else NoiseModel()

    def batch(n):
        X, y = [], []
        for _ in range(n):
            kg = rsa_keygen(args.bits, 65537, rng)
            wave, truth = synth_em_waveform(kg.trace_p, 1.0, model, rng, return_truth=True)
            X.append(wave)
            y.append(list(truth.components))
        return X, y

    X, y = batch(args.train)
    est = SequenceRecoverer().fit(X, y)
    Xt, yt = batch(args.test)
    rates = [component_error_rate(p, t) for p, t in zip(est.predict(Xt), yt)]
    out = _out_dir(args)
    models = [{"type": "window_model", "window": m.window_index, "slope": m.slope,
               "intercept": m.intercept, "residual": m.residual} for m in est.models_]
    write_records(out / "dsp_models.jsonl", models)
    mean_rate = sum(rates) / len(rates) if rates else 0.0
    atomic_write_text(out / "dsp_eval.txt", f"traces {len(rates)}\ncomponent_error_rate {mean_rate:.6f}\n")
    log.info("fitted %d window models; held-out component error rate %.4f%%", len(models), 100 * mean_rate)
    return EXIT_OK


def _log_start(cfg):
    log.info("seed %d, config %s", cfg.get("experiment", "seed"), cfg.digest())


def _dataset_trial(cfg, path):
    """One recovery run on a stored dataset instead of fresh samples."""
    from .hnp import filter_fastest, recover_key, derive_params, timing_equations, wnaf_equations
    from .leaksim import record_to_leak
    from .sign import SignatureSample
    from .experiments import _lattice_config, wnaf_dimension

    recs = read_records(path)
    if not recs or recs[0].get("type") != "header":
        raise ConfigError(f"{path}: missing header record", field="input")
    head = recs[0]
    params = load_params(head["group"])
    public = _public_from_text(head["public"])
    samples = []
    for rec in recs[1:]:
        leak = record_to_leak(rec["leak"]) if "leak" in rec else None
        samples.append(SignatureSample(int(rec["r"]), int(rec["s"]), int(rec["h"]), leak))
    attack = head.get("attack", cfg.attack)
    lat = cfg.sections["lattice"]
    q = params.q
    seed = cfg.get("experiment", "seed")
    if attack == "dsa-timing":
        f, d, _ = derive_params(len(samples), q.bit_length(), lat["ell"], lat["delta"], lat["c"])
        f, d = lat.get("f") or f, lat.get("d") or d
        eqs = timing_equations(filter_fastest(samples, f), lat["ell"], q)
    else:
        eqs = wnaf_equations(samples, head.get("w", cfg.get("samples", "w")), q, signed=attack == "ecdsa-signed",
                             z_min=lat["z_min"], per_signature_cap=lat["per_signature_cap"],
                             length_filter=lat["length_filter"])
        d = lat.get("d") or wnaf_dimension(eqs, q.bit_length(), lat["c"])
    res = recover_key(eqs, _lattice_config(cfg, d, seed), public, params, check_random_state(seed))
    rec = {"attack": attack, "N": len(samples), "dim": d + 2, "seed": seed, "trial": 0,
           "success": res.found, "lattices": res.stats["lattices_built"], "_seconds": res.stats["elapsed"]}
    if res.found:
        rec["alpha"] = str(res.alpha)
    return [rec]


def _run_trials(cfg):
    n = cfg.get("experiment", "trials")
    jobs = cfg.get("experiment", "jobs")
    seeds = trial_seeds(cfg.get("experiment", "seed"), n)
    results = []
    start = time.perf_counter()
    if jobs <= 1:
        for i, s in enumerate(seeds):
            rec = run_trial(cfg, i, s)
            results.append(rec)
            _heartbeat(rec, len(results), n, start)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(run_trial, cfg, i, s) for i, s in enumerate(seeds)]
            for fut in as_completed(futs):
                rec = fut.result()
                results.append(rec)
                _heartbeat(rec, len(results), n, start)
    results.sort(key=lambda r: r["trial"])
    return results


def _heartbeat(rec, done, total, start):
    log.info("trial %d done (%d/%d) success=%s elapsed %.1fs", rec["trial"], done, total,
             int(bool(rec.get("success"))), time.perf_counter() - start)


def cmd_attack(args):
    cfg = _experiment_config(args, attack=args.kind)
    _log_start(cfg)
    out = _out_dir(args, cfg)
    if args.input:
        results = _dataset_trial(cfg, args.input)
    else:
        results = _run_trials(cfg)
    records, timings = split_timing(results)
    write_records(out / "records.jsonl", records)
    write_records(out / "timings.jsonl", timings)
    rows = aggregate(records, timings)
    atomic_write_text(out / "stats.csv", stats_csv(rows))
    sys.stdout.write(stats_summary(rows))
    if not any(r.get("success") for r in records):
        log.info("no key recovered")
        return EXIT_NOT_FOUND
    return EXIT_OK


def cmd_report(args):
    records = []
    timings = []
    for path in args.input:
        for rec in read_records(path):
            if "seconds" in rec and "success" not in rec:
                timings.append(rec)
            else:
                records.append(rec)
    for path in args.timings or ():
        timings.extend(read_records(path))
    if not records:
        raise ConfigError("no trial records in input", field="input")
    rows = aggregate(records, timings)
    text = stats_csv(rows)
    if args.out:
        atomic_write_text(_out_dir(args) / "stats.csv", text)
    else:
        sys.stdout.write(text)
    sys.stderr.write(stats_summary(rows))
    return EXIT_OK


def cmd_groups(args):
    for name in bundled_params_names():
        p = load_params(name)
        kind = "dsa" if isinstance(p, DsaParams) else "curve"
        sys.stdout.write(f"{name}\t{kind}\t{p.q.bit_length()}-bit q\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _common(p, config=True):
    if config:
        p.add_argument("--config", metavar="PATH", help="experiment config (INI)")
    p.add_argument("--seed", type=lambda s: int(s, 0), metavar="U64", help="base seed (env SCLAB_SEED)")
    p.add_argument("--jobs", type=int, metavar="N", help="worker processes (env SCLAB_JOBS)")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--time-budget", type=float, metavar="MINUTES", help="per-trial time budget")


def build_parser():
    parser = argparse.ArgumentParser(prog="sclab", description="Side-channel key-recovery experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a DSA, ECDSA or RSA key")
    _common(p, config=False)
    p.add_argument("--group", default="toy_dsa128", help="bundled group name or INI path")
    p.add_argument("--rsa-bits", type=int, help="generate an RSA key of this size instead")
    p.add_argument("-e", type=int, default=65537)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("sign", help="sign random messages with a stored key")
    _common(p, config=False)
    p.add_argument("--key", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--mode", default="RAW")
    p.add_argument("--word-bits", type=int, default=0)
    p.add_argument("-w", type=int, default=4)
    p.add_argument("--leak", action="store_true", help="attach the side-channel leak")
    p.set_defaults(func=cmd_sign)

    p = sub.add_parser("leak", help="synthesize the leak dataset of an experiment config")
    _common(p)
    p.add_argument("--count", type=int, help="override samples.count")
    p.add_argument("--waveforms", action="store_true", help="also write EM-like waveforms (rsa)")
    p.set_defaults(func=cmd_leak)

    p = sub.add_parser("dsp-fit", help="fit the waveform-to-component models and evaluate them")
    _common(p, config=False)
    p.add_argument("--train", type=int, default=100)
    p.add_argument("--test", type=int, default=100)
    p.add_argument("--bits", type=int, default=512, help="RSA modulus size of the training traces")
    p.add_argument("--noise", choices=("none", "calibrated"), default="calibrated")
    p.set_defaults(func=cmd_dsp_fit)

    p = sub.add_parser("attack", help="run an end-to-end attack experiment")
    p.add_argument("kind", choices=ATTACKS)
    _common(p)
    p.add_argument("--trials", type=int, help="override experiment.trials")
    p.add_argument("--input", metavar="PATH", help="attack a stored leak dataset instead")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("report", help="aggregate trial records into the statistics table")
    p.add_argument("input", nargs="+", help="records files")
    p.add_argument("--timings", nargs="*", help="elapsed-time records")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("groups", help="list bundled parameter sets")
    p.set_defaults(func=cmd_groups)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args)
    except ConfigError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        sys.stderr.write(f"sclab: configuration error{where}: {exc}\n")
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        sys.stderr.write(f"sclab: configuration error [input]: {exc}\n")
        return EXIT_CONFIG
    except SclabError as exc:
        sys.stderr.write(f"sclab: error: {exc}\n")
        return EXIT_FAILURE
    except (KeyError, ValueError, OSError) as exc:
        if args.verbose:
            raise
        sys.stderr.write(f"sclab: error: {type(exc).__name__}: {exc}\n")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

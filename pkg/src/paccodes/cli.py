"""Command-line entry point: ``paccodes <subcommand> [options]``.

Settings resolve as built-in defaults < ``--config`` YAML file < flags. Every
output file starts with ``#`` comment lines holding the resolved settings,
which can be fed back through ``--config`` to reproduce the body.
"""
from __future__ import annotations

import argparse
import copy
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import (CodeFamily, baseline, estimate_spectrum, normal_approximation,
                       truncated_union_bound)
from .codespec import (DEFAULT_DESIGN_SNR_DB, CodeSpec, parse_generator, polar_profile,
                       read_profile, reliability_table, rm_profile)
from .encoder import encode
from .fano import FanoConfig, FanoDecoder, make_bias
from .harness import DecoderConfig, StoppingRule, frames_log_csv, parse_snr_list, run_fer
from .scl import ListDecoder

DEFAULTS = {
    "code": {"n": 128, "k": 64, "profile": "rm", "generator": "1011011",
             "design_snr": DEFAULT_DESIGN_SNR_DB},
    "decoder": {"kind": "list", "list_size": 32, "delta": 2.0, "cycle_cap": 1_300_000,
                "bias": "reliability"},
    "channel": {"snr_list": "1.0:0.5:3.0", "seed": 1},
    "stopping": {"min_errors": 100, "max_frames": 10_000_000, "chunk": 64},
    "weights": {"list_size": 1024, "trials": 8, "high_snr": 8.0, "baseline": None},
    "bounds": {"kind": "normal", "spectrum": None},
}

# flag dest -> (section, key)
FLAG_KEYS = {
    "n": ("code", "n"), "k": ("code", "k"), "profile": ("code", "profile"),
    "generator": ("code", "generator"), "design_snr": ("code", "design_snr"),
    "decoder": ("decoder", "kind"), "list_size": ("decoder", "list_size"),
    "delta": ("decoder", "delta"), "cycle_cap": ("decoder", "cycle_cap"),
    "bias": ("decoder", "bias"), "snr_list": ("channel", "snr_list"),
    "seed": ("channel", "seed"), "min_errors": ("stopping", "min_errors"),
    "max_frames": ("stopping", "max_frames"), "chunk": ("stopping", "chunk"),
    "trials": ("weights", "trials"), "high_snr": ("weights", "high_snr"),
    "baseline": ("weights", "baseline"), "kind": ("bounds", "kind"),
    "spectrum": ("bounds", "spectrum"),
}

# sections that shape each subcommand's output (and go into its header)
SECTIONS = {
    "profile": ("code",),
    "encode": ("code",),
    "decode": ("code", "decoder"),
    "simulate": ("code", "decoder", "channel", "stopping"),
    "weights": ("code", "weights", "channel"),
    "bounds": ("code", "bounds", "channel"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_code(p):
    g = p.add_argument_group("code")
    g.add_argument("--n", type=int, help="block length (power of two)")
    g.add_argument("--k", type=int, help="number of data bits")
    g.add_argument("--profile", help="rm | polar | file:PATH")
    g.add_argument("--generator", help="precoder taps c_0..c_nu, binary or 0o octal")
    g.add_argument("--design-snr", type=float, dest="design_snr",
                   help="Eb/N0 (dB) for the polar profile and Fano bias")


def _add_decoder(p):
    g = p.add_argument_group("decoder")
    g.add_argument("--decoder", choices=("list", "fano"))
    g.add_argument("--list-size", type=int, dest="list_size")
    g.add_argument("--delta", type=float, help="Fano threshold spacing")
    g.add_argument("--cycle-cap", type=int, dest="cycle_cap")
    g.add_argument("--bias", help="reliability | capacity | const:B")


def _add_common(p, out=True):
    p.add_argument("--config", help="YAML settings file")
    p.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    if out:
        p.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="paccodes", description="PAC code encoding, decoding and analysis")
    ap.add_argument("--version", action="version", version=f"paccodes {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("profile", help="print the rate profile and reliabilities")
    _add_code(p)
    _add_common(p)

    p = sub.add_parser("encode", help="encode data words (one per line)")
    _add_code(p)
    _add_common(p)
    p.add_argument("--input", help="data words file (default: stdin)")

    p = sub.add_parser("decode", help="decode LLR vectors (one frame per line)")
    _add_code(p)
    _add_decoder(p)
    _add_common(p)
    p.add_argument("--input", help="LLR file (default: stdin)")

    p = sub.add_parser("simulate", help="Monte-Carlo frame error rate")
    _add_code(p)
    _add_decoder(p)
    _add_common(p)
    p.add_argument("--snr-list", dest="snr_list", help="start:step:stop or a,b,c (Eb/N0 dB)")
    p.add_argument("--seed", type=int)
    p.add_argument("--min-errors", type=int, dest="min_errors")
    p.add_argument("--max-frames", type=int, dest="max_frames")
    p.add_argument("--chunk", type=int, help="frames between stopping checks")
    p.add_argument("--frame-log", dest="frame_log", help="CSV of every erroneous frame")

    p = sub.add_parser("weights", help="low-weight spectrum by list decoding")
    _add_code(p)
    _add_common(p)
    p.add_argument("--list-size", type=int, dest="list_size")
    p.add_argument("--trials", type=int)
    p.add_argument("--high-snr", type=float, dest="high_snr")
    p.add_argument("--seed", type=int)
    p.add_argument("--baseline", choices=("pac-rm", "pac-polar", "polar", "polar-crc8", "rm"),
                   help="named comparison code instead of --profile/--generator")

    p = sub.add_parser("bounds", help="normal approximation or truncated union bound")
    _add_code(p)
    _add_common(p)
    p.add_argument("--kind", choices=("normal", "union", "both"))
    p.add_argument("--spectrum", help="weights CSV for the union bound")
    p.add_argument("--snr-list", dest="snr_list")
    return ap


# -- configuration -----------------------------------------------------------------


def load_config_file(path: str) -> dict:
    """Read YAML settings; a previous output file (``#`` header) is accepted too."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if lines and lines[0].startswith("#"):
        header = []
        for line in lines:
            if not line.startswith("#"):
                break
            header.append(line[2:] if line.startswith("# ") else line[1:])
        data = yaml.safe_load("\n".join(header[1:])) or {}
    else:
        data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise UsageError("config: top level must be a mapping")
    return data.get("config", data)


def resolve(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = load_config_file(args.config)
        except (OSError, yaml.YAMLError) as exc:
            raise UsageError(f"config: cannot read {args.config}: {exc}") from None
        for sec, vals in loaded.items():
            if sec not in cfg or not isinstance(vals, dict):
                raise UsageError(f"config: unknown section {sec!r}")
            for key, val in vals.items():
                if key not in cfg[sec]:
                    raise UsageError(f"config: unknown field {sec}.{key}")
                cfg[sec][key] = val
    for dest, (sec, key) in FLAG_KEYS.items():
        val = getattr(args, dest, None)
        if val is not None:
            if args.command == "weights" and dest == "list_size":
                sec = "weights"
            cfg[sec][key] = val
    return cfg


def build_spec(code: dict) -> CodeSpec:
    n, k = int(code["n"]), int(code["k"])
    try:
        gen = parse_generator(str(code["generator"]))
    except ValueError as exc:
        raise UsageError(f"generator: {exc}") from None
    prof = str(code["profile"])
    try:
        if prof == "rm":
            profile = rm_profile(n, k)
        elif prof == "polar":
            profile = polar_profile(n, k, float(code["design_snr"]))
        elif prof.startswith("file:"):
            profile = read_profile(prof[5:])
        else:
            raise UsageError(f"profile: expected rm, polar or file:PATH, got {prof!r}")
        return CodeSpec(n, k, profile, gen, name=prof)
    except OSError as exc:
        raise UsageError(f"profile: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"code: {exc}") from None


def build_decoder_config(spec: CodeSpec, dec: dict) -> DecoderConfig:
    try:
        bias = make_bias(spec, str(dec["bias"]))
        fano = FanoConfig(delta=float(dec["delta"]), bias=bias, cycle_cap=int(dec["cycle_cap"]))
        return DecoderConfig(kind=str(dec["kind"]), list_size=int(dec["list_size"]), fano=fano)
    except ValueError as exc:
        raise UsageError(f"decoder: {exc}") from None


def header(command: str, cfg: dict) -> str:
    body = {sec: cfg[sec] for sec in SECTIONS[command]}
    text = yaml.safe_dump({"config": body}, sort_keys=True, default_flow_style=False)
    lines = [f"# paccodes {__version__} {command}"]
    lines += ["# " + line for line in text.splitlines()]
    return "\n".join(lines) + "\n"


def _emit(args, command: str, cfg: dict, body: str) -> None:
    text = header(command, cfg) + body
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_rows(path: str | None, width: int, what: str) -> list[list[str]]:
    src = Path(path).read_text() if path else sys.stdin.read()
    rows = []
    for lineno, line in enumerate(src.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.replace(",", " ").split()
        if len(toks) == 1 and what == "bits" and len(toks[0]) == width:
            toks = list(toks[0])
        if len(toks) != width:
            raise UsageError(f"input line {lineno}: expected {width} values, got {len(toks)}")
        rows.append(toks)
    return rows


def _bitstr(a) -> str:
    return "".join(str(int(b)) for b in a)


# -- subcommands -------------------------------------------------------------------


def cmd_profile(args, cfg):
    spec = build_spec(cfg["code"])
    rel = reliability_table(spec.n, float(cfg["code"]["design_snr"]), rate=spec.rate)
    lines = ["phase,in_profile,mean_llr"]
    for i in range(spec.n):
        lines.append(f"{i},{int(spec.mask[i])},{rel.values[i]!r}")
    _emit(args, "profile", cfg, "\n".join(lines) + "\n")


def cmd_encode(args, cfg):
    spec = build_spec(cfg["code"])
    rows = _read_rows(args.input, spec.k, "bits")
    try:
        d = np.array([[int(t) for t in r] for r in rows], dtype=np.int64).reshape(-1, spec.k)
    except ValueError:
        raise UsageError("input: data bits must be 0 or 1") from None
    if np.any((d != 0) & (d != 1)):
        raise UsageError("input: data bits must be 0 or 1")
    x = encode(d.astype(np.uint8), spec)
    body = "data,codeword\n" + "".join(f"{_bitstr(a)},{_bitstr(b)}\n" for a, b in zip(d, x))
    _emit(args, "encode", cfg, body)


def cmd_decode(args, cfg):
    spec = build_spec(cfg["code"])
    dcfg = build_decoder_config(spec, cfg["decoder"])
    rows = _read_rows(args.input, spec.n, "llr")
    try:
        llrs = np.array([[float(t) for t in r] for r in rows], dtype=np.float64)
    except ValueError:
        raise UsageError("input: LLRs must be decimal numbers") from None
    out = ["frame,status,metric,data,codeword"]
    if dcfg.kind == "list":
        dec = ListDecoder(spec, dcfg.list_size)
        for f, lam in enumerate(llrs):
            c = dec.decode(lam)
            out.append(f"{f},ok,{c.metrics[0]!r},{_bitstr(c.best_data)},{_bitstr(c.best_codeword)}")
    else:
        dec = FanoDecoder(spec, dcfg.fano)
        for f, lam in enumerate(llrs):
            r = dec.decode(lam)
            if r.failed:
                out.append(f"{f},failure,{r.final_metric!r},,")
            else:
                out.append(f"{f},ok,{r.final_metric!r},{_bitstr(r.d)},{_bitstr(r.x)}")
    _emit(args, "decode", cfg, "\n".join(out) + "\n")


def _threads(args) -> int:
    t = getattr(args, "threads", None)
    if t is None:
        return os.cpu_count() or 1
    if t < 1:
        raise UsageError("threads: must be >= 1")
    return t


def cmd_simulate(args, cfg):
    spec = build_spec(cfg["code"])
    dcfg = build_decoder_config(spec, cfg["decoder"])
    try:
        snrs = parse_snr_list(str(cfg["channel"]["snr_list"]))
        st = cfg["stopping"]
        stop = StoppingRule(int(st["min_errors"]), int(st["max_frames"]), int(st["chunk"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_fer(spec, dcfg, snrs, stop, seed=int(cfg["channel"]["seed"]),
                     threads=_threads(args), keep_log=bool(args.frame_log))
    _emit(args, "simulate", cfg, report.to_csv())
    if args.frame_log:
        Path(args.frame_log).write_text(header("simulate", cfg)
                                        + frames_log_csv(report.frame_log))


def cmd_weights(args, cfg):
    w = cfg["weights"]
    if w["baseline"]:
        code = cfg["code"]
        try:
            fam = baseline(str(w["baseline"]), int(code["n"]), int(code["k"]),
                           parse_generator(str(code["generator"])), float(code["design_snr"]))
        except ValueError as exc:
            raise UsageError(f"weights: {exc}") from None
    else:
        spec = build_spec(cfg["code"])
        fam = CodeFamily(spec.name, spec)
    if int(w["list_size"]) < 2:
        raise UsageError("list_size: must be >= 2")
    ws = estimate_spectrum(fam, int(w["list_size"]), float(w["high_snr"]), int(w["trials"]),
                           seed=int(cfg["channel"]["seed"]))
    lines = ["weight,count,saturated"]
    for wt in sorted(ws.counts):
        lines.append(f"{wt},{ws.counts[wt]},{int(ws.saturated.get(wt, False))}")
    _emit(args, "weights", cfg, "\n".join(lines) + "\n")


def read_spectrum_csv(path: str) -> dict[int, int]:
    counts = {}
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#") or line.startswith("weight"):
            continue
        parts = line.split(",")
        counts[int(parts[0])] = int(parts[1])
    return counts


def cmd_bounds(args, cfg):
    code = cfg["code"]
    b = cfg["bounds"]
    n, k = int(code["n"]), int(code["k"])
    if not 1 <= k <= n or n < 2:
        raise UsageError("code: need 1 <= k <= n and n >= 2")
    try:
        snrs = parse_snr_list(str(cfg["channel"]["snr_list"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    curves = []
    if b["kind"] in ("normal", "both"):
        curves.append(normal_approximation(n, k / n, snrs))
    if b["kind"] in ("union", "both"):
        if not b["spectrum"]:
            raise UsageError("spectrum: the union bound needs --spectrum FILE")
        try:
            counts = read_spectrum_csv(str(b["spectrum"]))
        except (OSError, ValueError, IndexError) as exc:
            raise UsageError(f"spectrum: {exc}") from None
        curves.append(truncated_union_bound(counts, k / n, snrs))
    lines = ["snr_db,value,kind"]
    for c in curves:
        lines += [f"{s!r},{v!r},{c.kind}" for s, v in c.points]
    _emit(args, "bounds", cfg, "\n".join(lines) + "\n")


COMMANDS = {"profile": cmd_profile, "encode": cmd_encode, "decode": cmd_decode,
            "simulate": cmd_simulate, "weights": cmd_weights, "bounds": cmd_bounds}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"paccodes: usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        print(f"paccodes: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

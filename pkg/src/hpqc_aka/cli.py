"""hpqc-aka command line.

Exit codes: 0 success (or expected verdict), 1 mismatch, 2 usage error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, aka, bench, vectors
from .identity import SUPI_MAX, SUPI_MIN
from .providers import BACKENDS
from .sim import network, scenarios

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2

# byte offset of AUTN.mac inside an encoded Challenge
_CHALLENGE_MAC_OFFSET = 22 + 3 + aka.RAND_LEN + 3 + 8


class UsageError(Exception):
    pass


def _int(text: str) -> int:
    text = str(text).strip()
    try:
        if "^" in text:
            base, exp = text.split("^", 1)
            return int(base, 0) ** int(exp, 0)
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None


def _hex(text: str) -> bytes:
    try:
        return bytes.fromhex(str(text).strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not hex: {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


CONFIG_KEYS = {
    "seed": _int, "delta": _int, "supi": _hex, "supi_len": _int, "amf": _hex,
    "backend": str, "sch_public": _bool, "av_timeout": float, "out": str,
}


def load_config(path: str) -> dict:
    """Parse a ``key = value`` file (no sections)."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        text = Path(path).read_text()
        cp.read_string("[config]\n" + text)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    out = {}
    for key, raw in cp["config"].items():
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](raw)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config {key}: {exc}") from None
    return out


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--config", metavar="FILE", help="key = value file; flags override it")
    g.add_argument("--seed", type=_int, default=0)
    g.add_argument("--delta", type=_int, default=aka.DEFAULT_DELTA, help="SQN window (default 2^28)")
    g.add_argument("--supi", type=_hex, default=None, help="subscriber identity as hex")
    g.add_argument("--supi-len", type=_int, default=16, help="random SUPI length when --supi is absent")
    g.add_argument("--amf", type=_hex, default=aka.DEFAULT_AMF)
    g.add_argument("--backend", choices=["auto", *BACKENDS], default="auto")
    g.add_argument("--sch-public", action="store_true", default=False,
                   help="make the SN-HN channel adversary-visible")
    g.add_argument("--av-timeout", type=float, default=60.0)
    g.add_argument("--out", default=None, help="output directory")
    g.add_argument("--format", choices=["text", "json"], default="text")
    return p


def build_parser() -> tuple[argparse.ArgumentParser, list]:
    common = _common()
    parser = argparse.ArgumentParser(prog="hpqc-aka", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    hs = sub.add_parser("handshake", parents=[common], help="run one honest session")
    hs.add_argument("--corrupt", action="store_true",
                    help="flip one AUTN.mac bit on the wire so the run must fail")

    vec = sub.add_parser("vectors", parents=[common], help="emit or verify golden vectors")
    vec.add_argument("action", choices=["emit", "verify"])
    vec.add_argument("paths", nargs="*", help="files to verify")
    vec.add_argument("--count", type=_int, default=3)

    att = sub.add_parser("attack", parents=[common], help="run attack scenarios")
    att.add_argument("scenario", help=f"one of {', '.join(scenarios.SCENARIOS)} or 'all'")

    b = sub.add_parser("bench", parents=[common], help="timing and size report")
    b.add_argument("--iterations", type=_int, default=10)
    return parser, [hs, vec, att, b]


def _topology(args) -> network.Topology:
    t = network.Topology(delta=args.delta, amf=args.amf, sch_public=args.sch_public,
                         av_timeout=args.av_timeout, backend=args.backend)
    if args.supi is not None:
        if not SUPI_MIN <= len(args.supi) <= SUPI_MAX:
            raise UsageError(f"--supi must be {SUPI_MIN}-{SUPI_MAX} bytes")
        return replace(t, supis=(args.supi,))
    if not SUPI_MIN <= args.supi_len <= SUPI_MAX:
        raise UsageError(f"--supi-len must be in {SUPI_MIN}..{SUPI_MAX}")
    if len(args.amf) != 2:
        raise UsageError("--amf must be 2 bytes")
    return replace(t, supi_len=args.supi_len)


def _digest(k: bytes | None) -> str:
    return "-" if k is None else hashlib.sha256(k).hexdigest()[:16]


def _emit(args, obj, text: str) -> None:
    if args.format == "json":
        print(json.dumps(obj, indent=2, sort_keys=True))
    else:
        print(text)


def cmd_handshake(args) -> int:
    topo = _topology(args)
    actions = ()
    if args.corrupt:
        actions = (network.Modify(3, _CHALLENGE_MAC_OFFSET, b"\x01"),)
    run = network.run_session(topo, network.AdversaryScript(actions), args.seed)
    out = Path(args.out or "hpqc-out")
    out.mkdir(parents=True, exist_ok=True)
    tpath, apath = out / "transcript.tsv", out / "audit.tsv"
    tpath.write_text("".join(e.to_record() + "\n" for e in run.transcript))
    apath.write_text("".join(ev.to_record() + "\n" for ev in run.audit_events()))

    sid = run.sessions[0].session_id
    views = run.k_seaf_views(sid)
    digests = {who: _digest(views.get(who)) for who in (network.UE, network.SN, network.HN)}
    match = len(views) == 3 and len(set(views.values())) == 1
    lines = [f"session {sid.hex()}", *(f"k_seaf[{w}] sha256/64 {d}" for w, d in digests.items())]
    if match:
        lines.append("match")
    else:
        lines.append("MISMATCH")
        ref = digests[network.UE]
        lines += [f"  {w}: {d} != UE {ref}" for w, d in digests.items() if d != ref]
        if all(d == "-" for d in digests.values()):
            lines.append("  no view derived an anchor key")
    lines += [f"transcript {tpath}", f"audit {apath}"]
    _emit(args, {"session_id": sid.hex(), "k_seaf_sha256_64": digests, "match": match,
                 "transcript": str(tpath), "audit": str(apath)}, "\n".join(lines))
    return EXIT_OK if match else EXIT_MISMATCH


def cmd_vectors(args) -> int:
    if args.action == "emit":
        if args.count < 1:
            raise UsageError("--count must be at least 1")
        files = vectors.emit_files(Path(args.out or "."), args.seed, args.count,
                                   _provider(args))
        _emit(args, {"files": [str(f) for f in files]}, "\n".join(str(f) for f in files))
        return EXIT_OK
    if not args.paths:
        raise UsageError("vectors verify needs at least one file")
    report, lines, status = [], [], EXIT_OK
    for path in args.paths:
        try:
            bad = vectors.verify_file(Path(path), _provider(args))
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from None
        except vectors.VectorFormatError as exc:
            bad_text = f"format error: {exc}"
            report.append({"file": path, "ok": False, "first_bad": bad_text})
            lines.append(f"{path}: {bad_text}")
            status = EXIT_MISMATCH
            continue
        first = str(bad[0]) if bad else None
        report.append({"file": path, "ok": not bad, "first_bad": first})
        lines.append(f"{path}: {'ok' if not bad else first}")
        if bad:
            status = EXIT_MISMATCH
    _emit(args, report, "\n".join(lines))
    return status


def _provider(args):
    from .providers import get_provider
    return get_provider(args.backend)


def cmd_attack(args) -> int:
    names = list(scenarios.SCENARIOS) if args.scenario == "all" else [args.scenario.lower()]
    for n in names:
        if n not in scenarios.SCENARIOS:
            raise UsageError(f"unknown scenario {n!r}; choose from {', '.join(scenarios.SCENARIOS)} or all")
    verdicts = [scenarios.run_scenario(n, args.seed) for n in names]
    text = "\n".join(v.to_record() for v in verdicts)
    _emit(args, [v.to_json() for v in verdicts], text)
    return EXIT_OK if all(v.matches_expected for v in verdicts) else EXIT_MISMATCH


def cmd_bench(args) -> int:
    if args.iterations < 1:
        raise UsageError("--iterations must be at least 1")
    supi_len = len(args.supi) if args.supi is not None else args.supi_len
    report = bench.run_bench(args.iterations, args.backend, args.seed, supi_len)
    _emit(args, report.to_json(), report.to_text())
    return EXIT_OK if report.sizes_match else EXIT_MISMATCH


COMMANDS = {"handshake": cmd_handshake, "vectors": cmd_vectors, "attack": cmd_attack,
            "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            cfg = load_config(known.config)
        except UsageError as exc:
            print(f"hpqc-aka: {exc}", file=sys.stderr)
            return EXIT_USAGE
        for sp in subparsers:
            sp.set_defaults(**cfg)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (UsageError, network.ScriptError) as exc:
        print(f"hpqc-aka: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Golden-vector files: emit and verify.

X-Wing file::

    # xwing vectors v1
    <blank>
    mode = draft
    sk = <hex>
    ...
    <blank>

Draft records carry sk, pk, eseed, c, ss. Verbatim records add ``m`` (the
ML-KEM randomness, which the eseed does not cover).

Key-hierarchy file: one record per line, 13 space-separated hex fields in
``HIERARCHY_FIELDS`` order; ``#`` starts a comment.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from . import aka, xwing
from .providers import PrimitiveProvider, get_provider

XWING_HEADER = "# xwing vectors v1"
XWING_FIELDS = {"draft": ("sk", "pk", "eseed", "c", "ss"),
                "verbatim": ("sk", "pk", "eseed", "m", "c", "ss")}
HIERARCHY_FIELDS = ("k", "rand", "hpk", "sqn", "amf", "id_sn", "ck", "ik", "xres",
                    "xres_star", "hxres_star", "k_ausf", "k_seaf")
HIERARCHY_HEADER = "# " + " ".join(HIERARCHY_FIELDS)


class VectorFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Mismatch:
    record: int
    field: str

    def __str__(self) -> str:
        return f"record {self.record}: field {self.field!r} does not match"


# ------------------------------------------------------------ X-Wing


def parse_xwing(text: str) -> list[dict]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != XWING_HEADER:
        raise VectorFormatError(f"missing header {XWING_HEADER!r}")
    records, cur = [], {}
    for n, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            if cur:
                records.append(cur)
                cur = {}
            continue
        if line.startswith("#"):
            continue
        key, sep, value = (p.strip() for p in line.partition("="))
        if not sep:
            raise VectorFormatError(f"line {n}: expected 'key = value'")
        if key == "mode":
            if value not in XWING_FIELDS:
                raise VectorFormatError(f"line {n}: unknown mode {value!r}")
            cur[key] = value
        else:
            try:
                cur[key] = bytes.fromhex(value)
            except ValueError:
                raise VectorFormatError(f"line {n}: field {key!r} is not hex") from None
    if cur:
        records.append(cur)
    for i, r in enumerate(records):
        need = ("mode",) + XWING_FIELDS.get(r.get("mode"), ())
        missing = [f for f in need if f not in r]
        if missing or "mode" not in r:
            raise VectorFormatError(f"record {i}: missing {missing or ['mode']}")
    return records


def format_xwing(records: list[dict]) -> str:
    out = [XWING_HEADER, ""]
    for r in records:
        out.append(f"mode = {r['mode']}")
        out += [f"{k} = {r[k].hex()}" for k in XWING_FIELDS[r["mode"]]]
        out.append("")
    return "\n".join(out) + "\n"


def emit_xwing(seed: int = 0, count: int = 3, provider: PrimitiveProvider | None = None) -> list[dict]:
    provider = provider or get_provider()
    rb = random.Random(seed).randbytes
    records = []
    for _ in range(count):
        sk = rb(32)
        pk = xwing.keygen_from_seed(sk, provider).pk
        eseed = rb(64)
        ss, c = xwing.encapsulate(pk, eseed, provider, mode="draft")
        records.append({"mode": "draft", "sk": sk, "pk": pk, "eseed": eseed, "c": c, "ss": ss})
    for _ in range(count):
        sk = rb(32)
        pk = xwing.keygen_from_seed(sk, provider).pk
        ske = rb(32)
        eseed = ske + provider.x25519_dh(ske, provider.x25519_base_point)
        m = rb(32)
        ss, c = xwing.encapsulate(pk, eseed, provider, mode="verbatim", mlkem_m=m)
        records.append({"mode": "verbatim", "sk": sk, "pk": pk, "eseed": eseed, "m": m,
                        "c": c, "ss": ss})
    return records


def verify_xwing(records: list[dict], provider: PrimitiveProvider | None = None) -> list[Mismatch]:
    provider = provider or get_provider()
    bad = []
    for i, r in enumerate(records):
        if xwing.keygen_from_seed(r["sk"], provider).pk != r["pk"]:
            bad.append(Mismatch(i, "pk"))
            continue
        if r["mode"] == "draft":
            ss, c = xwing.encapsulate(r["pk"], r["eseed"], provider, mode="draft")
        else:
            ss, c = xwing.encapsulate(r["pk"], r["eseed"], provider, mode="verbatim", mlkem_m=r["m"])
        if c != r["c"]:
            bad.append(Mismatch(i, "c"))
        elif ss != r["ss"] or xwing.decapsulate(r["c"], r["sk"], provider) != r["ss"]:
            bad.append(Mismatch(i, "ss"))
    return bad


# ------------------------------------------------------------ key hierarchy


def parse_hierarchy(text: str) -> list[dict]:
    records = []
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != len(HIERARCHY_FIELDS):
            raise VectorFormatError(f"line {n}: {len(parts)} fields, want {len(HIERARCHY_FIELDS)}")
        try:
            records.append({k: bytes.fromhex(v) for k, v in zip(HIERARCHY_FIELDS, parts)})
        except ValueError:
            raise VectorFormatError(f"line {n}: non-hex field") from None
    return records


def format_hierarchy(records: list[dict]) -> str:
    rows = [HIERARCHY_HEADER] + [" ".join(r[k].hex() for k in HIERARCHY_FIELDS) for r in records]
    return "\n".join(rows) + "\n"


def hierarchy_record(k, rand, hpk, sqn, amf, id_sn) -> dict:
    h = aka.derive_hierarchy(k, rand, hpk, sqn, amf, id_sn)
    return {"k": k, "rand": rand, "hpk": hpk, "sqn": sqn, "amf": amf, "id_sn": id_sn,
            "ck": h.ck, "ik": h.ik, "xres": h.res_or_xres, "xres_star": h.res_star,
            "hxres_star": aka.hxres_star(rand, h.res_star), "k_ausf": h.k_ausf,
            "k_seaf": h.k_seaf}


def emit_hierarchy(seed: int = 0, count: int = 3,
                   id_sn: bytes = b"5G:mnc093.mcc208.3gppnetwork.org",
                   amf: bytes = aka.DEFAULT_AMF) -> list[dict]:
    rng = random.Random(seed)
    rb = rng.randbytes
    return [hierarchy_record(rb(32), rb(aka.RAND_LEN), rb(aka.RAND_LEN),
                             aka.sqn_bytes(rng.randrange(1, 2**32)), amf, id_sn)
            for _ in range(count)]


def verify_hierarchy(records: list[dict]) -> list[Mismatch]:
    bad = []
    for i, r in enumerate(records):
        try:
            want = hierarchy_record(r["k"], r["rand"], r["hpk"], r["sqn"], r["amf"], r["id_sn"])
        except ValueError:
            bad.append(Mismatch(i, "rand/hpk/sqn/amf"))
            continue
        for name in HIERARCHY_FIELDS[6:]:
            if want[name] != r[name]:
                bad.append(Mismatch(i, name))
                break
    return bad


# ------------------------------------------------------------ files


def detect(text: str) -> str:
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    if first.strip() == XWING_HEADER:
        return "xwing"
    return "hierarchy"


def verify_file(path: Path, provider: PrimitiveProvider | None = None) -> list[Mismatch]:
    text = Path(path).read_text()
    if detect(text) == "xwing":
        return verify_xwing(parse_xwing(text), provider)
    return verify_hierarchy(parse_hierarchy(text))


def emit_files(out_dir: Path, seed: int = 0, count: int = 3,
               provider: PrimitiveProvider | None = None) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    xw = out_dir / "xwing_vectors.txt"
    hi = out_dir / "hierarchy_golden.txt"
    xw.write_text(format_xwing(emit_xwing(seed, count, provider)))
    hi.write_text(format_hierarchy(emit_hierarchy(seed, count)))
    return [xw, hi]

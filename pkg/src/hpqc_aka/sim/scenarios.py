"""Named attack scenarios and their verdicts.

Secrecy scenarios run the deduction closure over what the adversary saw.
Correspondence scenarios check injective agreement between begin and end
audit events. ``EXPECTED`` holds the verdict each scenario should reach;
only the SUCI-replay variant is expected to fail.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable

from .. import actors
from .deduction import DEFAULT_DEPTH, DeductionEnv, deduction_closure, public_knowledge
from .network import (
    HN,
    SN,
    UE,
    AdversaryScript,
    LeakAtPhase,
    Modify,
    Replay,
    SessionRun,
    Topology,
    run_session,
)


@dataclass(frozen=True)
class ScenarioVerdict:
    name: str
    passed: bool
    expected: bool
    witness: str = ""
    detail: str = ""

    def __post_init__(self):
        if not self.passed and not self.witness:
            raise ValueError("a failing verdict must carry a witness")

    @property
    def matches_expected(self) -> bool:
        return self.passed == self.expected

    def to_record(self) -> str:
        status = "pass" if self.passed else "fail"
        want = "pass" if self.expected else "fail"
        ok = "ok" if self.matches_expected else "MISMATCH"
        first = self.witness.splitlines()[0] if self.witness else "-"
        return f"{self.name}\t{status}\texpected={want}\t{ok}\t{self.detail}\t{first}"

    def to_json(self) -> dict:
        return {"scenario": self.name, "passed": self.passed, "expected": self.expected,
                "matches_expected": self.matches_expected, "detail": self.detail,
                "witness": self.witness}


# ------------------------------------------------------------ helpers


def _closure(run: SessionRun, *, break_mlkem=False, break_x25519=False, depth=DEFAULT_DEPTH):
    env = DeductionEnv(
        run.recorder.inner,
        run.recorder.mlkem_table if break_mlkem else None,
        run.recorder.x25519_table if break_x25519 else None,
    )
    init = public_knowledge(run.pk_hn, run.topology.id_sn, run.topology.amf)
    return deduction_closure(init, run.visible_entries(), depth, env)


def _secrecy(name, expected, knowledge, targets: dict, want_absent=True) -> ScenarioVerdict:
    """``targets`` maps a label to the secret bytes. With ``want_absent`` the
    scenario passes when none is derivable; otherwise when all are."""
    hits = {label: knowledge.find(v) for label, v in targets.items()}
    derived = [label for label, t in hits.items() if t is not None]
    if want_absent:
        if not derived:
            return ScenarioVerdict(name, True, expected,
                                   detail=f"{len(knowledge)} terms, none of {sorted(targets)}")
        label = derived[0]
        return ScenarioVerdict(name, False, expected, f"{label} derived:\n" + hits[label].explain(),
                               f"derived {derived}")
    missing = [label for label in targets if hits[label] is None]
    if not missing:
        label = next(iter(targets))
        return ScenarioVerdict(name, True, expected, detail=f"{label} at depth {hits[label].depth}")
    return ScenarioVerdict(name, False, expected, f"not derivable: {missing}",
                           f"{len(knowledge)} terms")


def _seaf_targets(run: SessionRun, views=(UE, SN, HN)) -> dict:
    out = {}
    for s in run.sessions:
        v = run.k_seaf_views(s.session_id)
        for who in views:
            if who in v:
                out[f"k_seaf[{who}:{s.session_id.hex()[:8]}]"] = v[who]
    return out


def _supi_targets(run: SessionRun) -> dict:
    return {f"supi[{s.session_id.hex()[:8]}]": s.supi for s in run.sessions}


def _trace(events) -> str:
    return "\n".join(f"{seq}\t{ev.to_record()}" for seq, ev in events)


def injective_agreement(run: SessionRun, begin: str, end: str) -> tuple[bool, str]:
    """Every ``end`` event needs its own earlier ``begin`` with the same digest."""
    begins: Counter = Counter()
    for seq, ev in run.events:
        if ev.kind == begin:
            begins[ev.digest] += 1
        elif ev.kind == end:
            if begins[ev.digest] == 0:
                related = [(s, e) for s, e in run.events
                           if e.digest == ev.digest and e.kind in (begin, end)]
                return False, f"{end} without a matching unused {begin}:\n" + _trace(related)
            begins[ev.digest] -= 1
    return True, ""


def anchor_chain(run: SessionRun) -> tuple[bool, str, int]:
    """endSN_ANCHOR_KEY <- middleHN_RES <- middleSN_RES <- beginUE_RES, injectively."""
    used: set = set()
    ends = 0
    for seq, ev in run.events:
        if ev.kind != actors.END_SN_ANCHOR_KEY:
            continue
        ends += 1
        before = [(s, e) for s, e in run.events if s < seq and (s, e.kind) not in used]
        hn = [(s, e) for s, e in before
              if e.kind == actors.MIDDLE_HN_RES and e.session_id == ev.session_id]
        sn = [(s, e) for s, e in before
              if e.kind == actors.MIDDLE_SN_RES and e.session_id == ev.session_id]
        if not hn or not sn:
            return False, "anchor key accepted without HN/SN response check:\n" + _trace([(seq, ev)]), ends
        hs, he = hn[-1]
        ss, _ = sn[-1]
        ue = [(s, e) for s, e in before
              if e.kind == actors.BEGIN_UE_RES and e.digest == he.digest and s < ss]
        if not (ss < hs) or not ue:
            return False, "ordering broken:\n" + _trace([*ue, (ss, sn[-1][1]), (hs, he), (seq, ev)]), ends
        for s, e in (ue[0], sn[-1], hn[-1]):
            used.add((s, e.kind))
    return True, "", ends


# ------------------------------------------------------------ scenarios


def _run(seed, topology=Topology(), actions=()):
    return run_session(topology, AdversaryScript(tuple(actions)), seed)


def s0(seed):
    run = _run(seed, Topology(sessions=2))
    k = _closure(run)
    for s in run.sessions:
        for e in run.visible_entries():
            if s.supi in e.data:
                return ScenarioVerdict("s0", False, True,
                                       f"SUPI bytes appear in transcript entry {e.seq}: {e.summary}")
    return _secrecy("s0", True, k, _supi_targets(run))


def _s_view(name, view):
    def scenario(seed):
        run = _run(seed, Topology(sessions=2))
        return _secrecy(name, True, _closure(run), _seaf_targets(run, (view,)))
    return scenario


def s4(seed):
    run = _run(seed, Topology(sessions=2))
    ok, witness = injective_agreement(run, actors.BEGIN_UE_HN_SUPI, actors.END_UE_HN_SUPI)
    return ScenarioVerdict("s4", ok, True, witness, "honest SUCI correspondence")


def s4_replay(seed):
    # SUCI carries no freshness, so a replayed registration under a new
    # session id is deconcealed a second time by HN
    run = _run(seed, Topology(sessions=1), [Replay(0, SN, "fresh")])
    ok, witness = injective_agreement(run, actors.BEGIN_UE_HN_SUPI, actors.END_UE_HN_SUPI)
    return ScenarioVerdict("s4-replay", ok, False, witness, "registration replayed with fresh session id")


def s5(seed):
    actions = [Replay(3, UE), Replay(3, UE, "fresh"), Replay(10, UE),
               Modify(10, 22 + 3 + 1120 + 3 + 8, b"\x01")]
    run = _run(seed, Topology(sessions=2), actions)
    ok, witness = injective_agreement(run, actors.BEGIN_HN_UE_MAC, actors.END_UE_HN_MAC)
    ends = sum(ev.kind == actors.END_UE_HN_MAC for _, ev in run.events)
    return ScenarioVerdict("s5", ok, True, witness,
                           f"challenge replays and MAC tamper; {ends} UE acceptances")


def s6(seed):
    # sch visible: the adversary sits inside the serving network
    actions = [Modify(5, 22 + 3, b"\x01"), Replay(13, SN), Replay(8, HN), Replay(12, HN)]
    run = _run(seed, Topology(sessions=2, sch_public=True), actions)
    ok, witness, ends = anchor_chain(run)
    if ok and ends == 0:
        return ScenarioVerdict("s6", False, True, "no anchor key was released at all", "liveness")
    return ScenarioVerdict("s6", ok, True, witness, f"{ends} anchor keys accepted")


def _leak_run(seed, keys):
    return _run(seed, Topology(sessions=2), [LeakAtPhase(frozenset(keys))])


def fs(seed):
    cases = [({"sk_hn", "k"}, False), ({"k"}, True), ({"sk_hn"}, False)]
    for keys, supi_too in cases:
        run = _leak_run(seed, keys)
        k = _closure(run)
        targets = _seaf_targets(run)
        if supi_too:
            targets.update(_supi_targets(run))
        v = _secrecy("fs", True, k, targets)
        if not v.passed:
            return ScenarioVerdict("fs", False, True, f"leak {sorted(keys)}: {v.witness}", v.detail)
    return ScenarioVerdict("fs", True, True, detail="leaks {sk_hn,k}, {k}, {sk_hn}")


def fs_sanity(seed):
    run = _leak_run(seed, {"sk_hn", "k", "sk_ue"})
    v = _secrecy("fs-sanity", True, _closure(run), _seaf_targets(run, (UE,)), want_absent=False)
    return v


def _break(name, mlkem, x25519, expect_absent):
    def scenario(seed):
        run = _leak_run(seed, {"sk_hn", "k"})
        k = _closure(run, break_mlkem=mlkem, break_x25519=x25519)
        return _secrecy(name, True, k, _seaf_targets(run, (UE,)), want_absent=expect_absent)
    return scenario


SCENARIOS: dict[str, Callable[[int], ScenarioVerdict]] = {
    "s0": s0,
    "s1": _s_view("s1", UE),
    "s2": _s_view("s2", SN),
    "s3": _s_view("s3", HN),
    "s4": s4,
    "s4-replay": s4_replay,
    "s5": s5,
    "s6": s6,
    "fs": fs,
    "fs-sanity": fs_sanity,
    "break-x25519": _break("break-x25519", False, True, True),
    "break-mlkem": _break("break-mlkem", True, False, True),
    "break-both": _break("break-both", True, True, False),
}

EXPECTED = {name: name != "s4-replay" for name in SCENARIOS}


def run_scenario(name: str, seed: int = 0) -> ScenarioVerdict:
    try:
        fn = SCENARIOS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None
    return fn(seed)

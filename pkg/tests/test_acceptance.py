"""Acceptance gate: one test group per criterion, one printed verdict line each.

Run with ``pytest tests/test_acceptance.py -v``.  Verdict lines go straight
to the terminal (``ACCEPT <n> PASS|FAIL <label>: <detail>``) even when pytest
captures output.  Benchmarks are read from ``$KGPROFILE_DATA/<key>/manifest.ini``
(default ``data/``); a missing benchmark is a failure, not a skip.
"""

import json
import random
import subprocess
import sys
import textwrap
import time
from functools import lru_cache

import numpy as np
import pytest

from kgprofile import build_store, load_dataset
from kgprofile.cli import main
from kgprofile.leakage import DeleakStrategy, audit_splits, deleak
from kgprofile.metapaths import WalkCounter
from kgprofile.metrics import degree_histogram, relation_load, round_half_away, summarize
from kgprofile.relations import (
    CardinalityClass,
    MiningConfig,
    classify_cardinality,
    detect_composite,
    detect_inverse,
    detect_symmetry,
    mine_patterns,
    pattern_distribution,
)
from kgprofile.report import build_report, dumps, without_runtime

import oracles
from conftest import manifest_path

# name, key, #E, #R, #T, deg, -log(d) as tabulated
TABULATED = {
    "Nations": ("nations", 14, 55, 1992, 143, -1.01),
    "Kinships": ("kinships", 104, 25, 10686, 103, 0.01),
    "UMLS": ("umls", 135, 46, 6529, 48, 0.45),
    "Countries": ("countries", 271, 2, 1158, 4, 1.80),
    "CoDExSmall": ("codexsmall", 2034, 42, 36543, 18, 2.05),
    "FB15k-237": ("fb15k237", 14505, 237, 310079, 21, 2.83),
}
SMALL = ["Nations", "Kinships", "UMLS", "Countries", "CoDExSmall"]


@pytest.fixture
def verdict(capsys):
    def emit(criterion, label, ok, detail=""):
        with capsys.disabled():
            print(f"\nACCEPT {criterion} {'PASS' if ok else 'FAIL'} {label}: {detail}", flush=True)
        assert ok, f"criterion {criterion} {label}: {detail}"

    return emit


@lru_cache(maxsize=None)
def store_for(name):
    path = manifest_path(TABULATED[name][0])
    if not path.exists():
        return None
    return load_dataset(path)


@lru_cache(maxsize=None)
def patterns_for(name):
    return mine_patterns(store_for(name))


def require(verdict, criterion, label, name):
    store = store_for(name)
    if store is None:
        verdict(criterion, label, False, f"dataset {name} not found at {manifest_path(TABULATED[name][0])}")
    return store


def check_table_row(name, store):
    _, e, r, t, deg, neg_log = TABULATED[name]
    s = summarize(store)
    got_deg = int(round_half_away(s.avg_degree_table))
    problems = []
    if (s.num_entities, s.num_relations, s.num_triples_raw) != (e, r, t):
        problems.append(f"counts {(s.num_entities, s.num_relations, s.num_triples_raw)} != {(e, r, t)}")
    if abs(got_deg - deg) > 1:
        problems.append(f"deg {got_deg} vs {deg}")
    if abs(s.neg_log10_density - neg_log) > 0.02:
        problems.append(f"-log(d) {s.neg_log10_density:.4f} vs {neg_log}")
    detail = f"E={s.num_entities} R={s.num_relations} T={s.num_triples_raw} deg={got_deg} -log(d)={s.neg_log10_density:.4f}"
    return not problems, "; ".join(problems) or detail


# -- 1 -----------------------------------------------------------------------

@pytest.mark.parametrize("name", SMALL)
def test_1_table_row(name, verdict):
    store = require(verdict, 1, name, name)
    ok, detail = check_table_row(name, store)
    verdict(1, name, ok, detail)


def test_1_runtime(verdict):
    missing = [n for n in SMALL if not manifest_path(TABULATED[n][0]).exists()]
    start = time.perf_counter()
    for name in SMALL:
        if name not in missing:
            summarize(load_dataset(manifest_path(TABULATED[name][0])))
    elapsed = time.perf_counter() - start
    detail = f"{elapsed:.2f}s for {len(SMALL) - len(missing)} datasets"
    if missing:
        detail += f"; missing {', '.join(missing)}"
    verdict(1, "runtime<5s", not missing and elapsed < 5, detail)


# -- 2 -----------------------------------------------------------------------

@pytest.mark.slow
def test_2_fb15k237(verdict, tmp_path):
    store = require(verdict, 2, "FB15k-237", "FB15k-237")
    ok, detail = check_table_row("FB15k-237", store)
    start = time.perf_counter()
    report = build_report(store, "FB15k-237")
    elapsed = time.perf_counter() - start
    sampled = any(w["sampled"] for rel in report["patterns"]["relations"] for w in rel["composite_witnesses"])
    ok = ok and elapsed < 300 and not sampled
    verdict(2, "FB15k-237", ok, f"{detail}; analyze {elapsed:.1f}s; sampled={sampled}")


# -- 3 -----------------------------------------------------------------------

def leading_class(store):
    totals = {c: 0 for c in CardinalityClass}
    for res in classify_cardinality(store).values():
        totals[res.cls] += 1
    best = max(totals.values())
    return [c.value for c, n in totals.items() if n == best], {c.value: n for c, n in totals.items()}


@pytest.mark.parametrize("name, expected", [("Kinships", "M-M"), ("Nations", "M-M"), ("CoDExSmall", "M-1")])
def test_3_cardinality_leader(name, expected, verdict):
    store = require(verdict, 3, name, name)
    leaders, totals = leading_class(store)
    verdict(3, f"{name} leads {expected}", leaders == [expected], f"totals {totals}")


# -- 4 -----------------------------------------------------------------------

def test_4_umls_antisymmetric_leads(verdict):
    store = require(verdict, 4, "UMLS antisymmetric", "UMLS")
    dist = pattern_distribution(store, reports=patterns_for("UMLS"))
    shares = {flag: float(d.triple_share) for flag, d in dist.items()}
    top = max(shares, key=shares.get)
    detail = ", ".join(f"{f} {100 * v:.2f}%" for f, v in shares.items())
    verdict(4, "UMLS antisymmetric leads", top == "antisymmetric" and shares[top] > max(
        v for f, v in shares.items() if f != "antisymmetric"), detail)


@pytest.mark.parametrize("name", ["Nations", "Kinships"])
@pytest.mark.parametrize("flag", ["symmetric", "composite"])
def test_4_flag_nonzero(name, flag, verdict):
    store = require(verdict, 4, f"{name} {flag}", name)
    reports = patterns_for(name)
    count = sum(flag in rep.flags for rep in reports)
    detail = f"{count} relations"
    if flag == "symmetric":
        best = max(reports, key=lambda rep: rep.sym_conf)
        detail += f"; max sym_conf {float(best.sym_conf):.4f} ({store.vocabulary.relation_labels[best.relation]})"
    verdict(4, f"{name} {flag}>0", count > 0, detail)


# -- 5 -----------------------------------------------------------------------

def random_store(rng, max_triples):
    n_e, n_r = rng.randint(1, 12), rng.randint(1, 5)
    n = rng.randint(1, max_triples)
    return build_store([(f"e{rng.randrange(n_e)}", f"r{rng.randrange(n_r)}", f"e{rng.randrange(n_e)}")
                        for _ in range(n)])


def test_5_patterns_match_oracles(verdict):
    rng = random.Random(20240501)
    bad = 0
    for i in range(200):
        s = random_store(rng, 500)
        theta = rng.choice([0.3, 0.5, 0.8, 0.95, 1.0])
        cfg = MiningConfig(confidence_threshold=theta)
        T = {tuple(x) for x in s.triples.tolist()}
        card = {r: (c.cls.value, c.forward_confidence, c.backward_confidence)
                for r, c in classify_cardinality(s, cfg).items()}
        sym = {r: detect_symmetry(s, r)[0] for r in range(s.num_relations)}
        comp = {r: [(w.body, w.confidence, w.support) for w in ws] for r, ws in detect_composite(s, cfg).items()}
        ok = (card == oracles.cardinality(T, theta)
              and sym == oracles.symmetry(T)
              and detect_inverse(s, cfg) == oracles.inverse(T, theta)
              and comp == oracles.composite(T, theta))
        bad += not ok
    verdict(5, "patterns/cardinality vs oracle", bad == 0, f"{200 - bad}/200 stores agree")


def test_5_walks_match_dfs(verdict):
    rng = random.Random(7)
    bad = 0
    for _ in range(200):
        s = random_store(rng, 200)
        T = {tuple(x) for x in s.triples.tolist()}
        counter = WalkCounter(s)
        for e in range(s.num_entities):
            if counter.walk_totals(e, 4)[1:] != [oracles.walks_dfs(T, e, ell) for ell in (1, 2, 3, 4)]:
                bad += 1
                break
    verdict(5, "metapath DP vs DFS", bad == 0, f"{200 - bad}/200 stores agree")


# -- 6 -----------------------------------------------------------------------

def invariant_failures(store):
    out = []
    reports = mine_patterns(store)
    if any(rep.sym_conf + rep.antisym_conf != 1 for rep in reports):
        out.append("sym+antisym")
    hist = degree_histogram(store)
    if hist.num_entities != store.num_entities or hist.degree_mass != 2 * len(store):
        out.append("histogram mass")
    if relation_load(store).total != len(store):
        out.append("relation load")
    classes = classify_cardinality(store)
    if sorted(classes) != list(range(store.num_relations)):
        out.append("cardinality partition")
    loose = mine_patterns(store, MiningConfig(confidence_threshold=0.5))
    if any(not y.flags <= x.flags for x, y in zip(loose, reports)):
        out.append("threshold monotonicity")
    return out


FIXTURES = {
    "three": [("a", "p", "b"), ("b", "p", "a"), ("a", "q", "c")],
    "chain": [("a", "r1", "b"), ("b", "r2", "c"), ("a", "r3", "c")],
    "inverse": [("a", "r", "b"), ("c", "r", "d"), ("b", "s", "a"), ("d", "s", "c"), ("g", "r", "h")],
    "loop": [("a", "p", "a")],
}


def test_6_invariants_on_fixtures(verdict):
    failures = {name: invariant_failures(build_store(t)) for name, t in FIXTURES.items()}
    failures = {k: v for k, v in failures.items() if v}
    verdict(6, "fixtures", not failures, str(failures) if failures else f"{len(FIXTURES)} fixtures")


@pytest.mark.parametrize("name", SMALL)
def test_6_invariants_on_datasets(name, verdict):
    store = require(verdict, 6, name, name)
    failures = invariant_failures(store)
    verdict(6, name, not failures, ", ".join(failures) or "all invariants hold")


# -- 7 -----------------------------------------------------------------------

def tagged(train, test):
    return build_store([(*t, "train") for t in train] + [(*t, "test") for t in test])


LEAK_FIXTURES = {
    "inverse": (tagged(FIXTURES["inverse"], [("h", "s", "g"), ("x", "r", "y")]), MiningConfig(),
                {(("h", "s", "g"), "inverse_partner")}),
    "symmetric": (tagged([("a", "p", "b"), ("b", "p", "a"), ("c", "p", "d")], [("d", "p", "c"), ("x", "p", "y")]),
                  MiningConfig(confidence_threshold=2 / 3), {(("d", "p", "c"), "symmetric_self")}),
}


@pytest.mark.parametrize("name", list(LEAK_FIXTURES))
def test_7_leakage_round_trip(name, verdict):
    store, cfg, planted = LEAK_FIXTURES[name]
    report = audit_splits(store, cfg)
    found = {(store.vocabulary.decode(leak.triple), leak.cause) for leak in report.test_leaks}
    problems = [] if found == planted else [f"found {found}"]
    for strategy in DeleakStrategy:
        once = deleak(store, strategy, cfg)
        repaired = once.to_store()
        left = audit_splits(repaired, cfg).test_leaks
        if strategy is DeleakStrategy.DROP_INVERSE_RELATIONS:
            left = [leak for leak in left if leak.cause == "inverse_partner"]
        if left:
            problems.append(f"{strategy.value}: {len(left)} leaks after repair")
        twice = deleak(repaired, strategy, cfg)
        if twice.removals or twice.splits != once.splits:
            problems.append(f"{strategy.value}: not idempotent")
    verdict(7, name, not problems, "; ".join(problems) or f"{len(found)} planted leak found; both repairs clean")


# -- 8 -----------------------------------------------------------------------

def test_8_determinism(verdict, tmp_path):
    name = next((n for n in ("UMLS", "Nations", "Kinships") if manifest_path(TABULATED[n][0]).exists()), None)
    if name is None:
        verdict(8, "determinism", False, "no benchmark available")
    path = manifest_path(TABULATED[name][0])
    texts = []
    for threads in ("1", "4", "1", "3"):
        out = tmp_path / f"r{len(texts)}.json"
        # a small join cap forces the sampled composite path as well
        args = ["analyze", "--input", str(path), "--threads", threads, "--seed", "7",
                "--join-cap", "2000", "--out", str(out)]
        assert main(args) == 0
        texts.append(dumps(without_runtime(json.loads(out.read_text(encoding="utf-8")))))
    sampled = '"sampled": true' in texts[0]
    verdict(8, f"determinism ({name})", len(set(texts)) == 1 and sampled,
            f"{len(texts)} runs at threads 1/4/1/3, {len(set(texts))} distinct reports, sampling exercised={sampled}")


# -- 9 -----------------------------------------------------------------------

@pytest.mark.slow
def test_9_ingest_performance(verdict, tmp_path):
    # BioKG-shaped synthetic: 105,524 entities, 17 relations, ~2.07M lines
    n_e, n_r, n_t = 105_524, 17, 2_067_997
    rng = np.random.default_rng(0)
    h = rng.zipf(1.6, n_t) % n_e
    t = rng.integers(0, n_e, n_t)
    r = rng.integers(0, n_r, n_t)
    path = tmp_path / "big.tsv"
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(0, n_t, 200_000):
            sl = slice(i, i + 200_000)
            fh.write("".join(f"ENT:{a:07d}\trel_{b}\tENT:{c:07d}\n" for a, b, c in zip(h[sl], r[sl], t[sl])))
    script = textwrap.dedent(f"""
        import json, resource, sys, time
        from kgprofile import DatasetManifest, load_dataset
        start = time.perf_counter()
        store = load_dataset(DatasetManifest("big", [({str(path)!r}, "unsplit")]))
        store.contains((0, 0, 0)); store.out_neighbors(0); store.pair_relation_ranges([0], [1])
        elapsed = time.perf_counter() - start
        peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * (1 if sys.platform == "darwin" else 1024)
        print(json.dumps({{"seconds": elapsed, "peak_bytes": peak, "triples": store.raw_triple_count}}))
    """)
    proc = subprocess.run([sys.executable, "-c", script], capture_output=True, text=True, check=True)
    stats = json.loads(proc.stdout.strip().splitlines()[-1])
    gb = stats["peak_bytes"] / 2**30
    ok = stats["triples"] == n_t and stats["seconds"] < 60 and gb < 4
    verdict(9, "2M-triple ingest", ok, f"{stats['triples']} triples in {stats['seconds']:.1f}s, peak RSS {gb:.2f} GB")

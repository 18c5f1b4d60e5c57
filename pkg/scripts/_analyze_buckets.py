"""Estimate merge cost: fingerprint all checkpointed candidates, report bucket sizes."""
import sys
import time
from collections import Counter, defaultdict
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
import generate_lattice as gl

T0 = time.time()


def log(msg):
    print(f"[{time.time()-T0:7.1f}s] {msg}", flush=True)


def main():
    work = Path(__file__).parent / "_lattice_work"
    cands = []
    for npz in sorted(work.glob("cand_*.npz")):
        data = np.load(npz)
        sizes = data["sizes"]
        codes = data["codes"]
        off = 0
        for s in sizes:
            cands.append(codes[off:off + s])
            off += s
        log(f"{npz.name}: {len(sizes)} candidates")
    log(f"total {len(cands)} candidates")

    buckets = defaultdict(list)
    for i, codes in enumerate(cands):
        fp = gl.fingerprint(codes)
        buckets[(len(codes), fp)].append(i)
        if (i + 1) % 250 == 0:
            log(f"fingerprinted {i+1}/{len(cands)}")
    log(f"{len(buckets)} distinct (size, fingerprint) buckets")

    hist = Counter(len(v) for v in buckets.values())
    log(f"bucket-size histogram: {dict(sorted(hist.items()))}")
    # worst case pairwise tests if every candidate in a bucket is a distinct class
    worst = sum(n * (n - 1) // 2 for n in hist.elements())
    log(f"worst-case pairwise conjugacy tests: {worst}")
    big = sorted(buckets.items(), key=lambda kv: -len(kv[1]))[:12]
    for (size, fp), idxs in big:
        log(f"bucket order={size} members={len(idxs)}")


if __name__ == "__main__":
    main()

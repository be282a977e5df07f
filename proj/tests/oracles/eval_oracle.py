"""Independent reference for the evaluator fixtures.

Brute-force greedy matching plus explicit 101-point interpolation, written
without reference to the C++ implementation. Run once; the printed values are
frozen into tests/test_eval.cpp and tests/acceptance.cpp.
"""
from fractions import Fraction

THRESHOLDS = [Fraction(50 + 5 * k, 100) for k in range(10)]


def area(b):
    return max(0.0, b[2] - b[0]) * max(0.0, b[3] - b[1])


def iou(a, b):
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (area(a) + area(b) - inter)


def band(b):
    a = area(b)
    return "small" if a < 32 * 32 else ("medium" if a < 96 * 96 else "large")


def ap101(flags, n_gt):
    """flags: TP booleans already in score order."""
    tp = 0
    prec, rec = [], []
    for i, f in enumerate(flags, 1):
        tp += f
        prec.append(tp / i)
        rec.append(tp / n_gt)
    env = prec[:]
    for i in range(len(env) - 2, -1, -1):
        env[i] = max(env[i], env[i + 1])
    total = 0.0
    for j in range(101):
        r = j / 100.0
        q = 0.0
        for i in range(len(rec)):
            if rec[i] >= r:
                q = env[i]
                break
        total += q
    return total / 101.0


def match(dets, gts, thr, want_band=None):
    """Greedy: dets in score order. Returns list of 'tp' / 'fp' / 'ign'."""
    ignore = [want_band is not None and band(g) != want_band for g in gts]
    taken = [False] * len(gts)
    out = []
    for d in dets:
        pick = None
        for wanted in (False, True):
            best, best_iou = None, None
            for gi, g in enumerate(gts):
                if taken[gi] or ignore[gi] != wanted:
                    continue
                o = iou(d["box"], g)
                if o >= float(thr) and (best is None or o > best_iou):
                    best, best_iou = gi, o
            if best is not None:
                pick = (best, wanted)
                break
        if pick is None:
            out.append("ign" if want_band is not None and band(d["box"]) != want_band else "fp")
        else:
            taken[pick[0]] = True
            out.append("ign" if pick[1] else "tp")
    return out


def evaluate(dets, gts, max_dets=100):
    classes = sorted({g["cls"] for g in gts})
    images = sorted({g["img"] for g in gts})
    ap = {}
    ar = {1: [], 10: [], 100: []}
    for b in (None, "small", "medium", "large"):
        for t in THRESHOLDS:
            vals = []
            for c in classes:
                scored = []
                n_gt = 0
                for im in images:
                    cg = [g["box"] for g in gts if g["cls"] == c and g["img"] == im]
                    n_gt += sum(1 for g in cg if b is None or band(g) == b)
                    cd = [d for d in dets if d["cls"] == c and d["img"] == im]
                    cd.sort(key=lambda d: (-d["score"], *d["box"]))
                    cd = cd[:max_dets]
                    for d, o in zip(cd, match(cd, cg, t, b)):
                        if o != "ign":
                            scored.append((d["score"], o == "tp"))
                if n_gt == 0:
                    continue
                # stable sort by score, images visited in ascending id order
                scored.sort(key=lambda s: -s[0])
                vals.append(ap101([f for _, f in scored], n_gt))
            ap[(b, t)] = vals
    for cap in (1, 10, 100):
        for c in classes:
            rs = []
            for t in THRESHOLDS:
                tp = n = 0
                for im in images:
                    cg = [g["box"] for g in gts if g["cls"] == c and g["img"] == im]
                    n += len(cg)
                    cd = sorted([d for d in dets if d["cls"] == c and d["img"] == im],
                                key=lambda d: (-d["score"], *d["box"]))[:cap]
                    tp += match(cd, cg, t).count("tp")
                rs.append(tp / n)
            ar[cap].append(sum(rs) / len(rs))

    def mean(v):
        return sum(v) / len(v) if v else -1.0

    def over_t(b):
        per_t = [mean(ap[(b, t)]) for t in THRESHOLDS if ap[(b, t)]]
        return mean(per_t)

    at = lambda p: mean(ap[(None, Fraction(p, 100))])
    return {
        "AP": over_t(None), "AP50": at(50), "AP60": at(60), "AP70": at(70), "AP75": at(75),
        "AP80": at(80), "AP90": at(90), "APs": over_t("small"), "APm": over_t("medium"),
        "APl": over_t("large"), "AR1": mean(ar[1]), "AR10": mean(ar[10]), "AR100": mean(ar[100]),
    }


GTS = [
    dict(img=1, cls=1, box=(10, 10, 60, 60)),
    dict(img=1, cls=1, box=(100, 100, 300, 300)),
    dict(img=1, cls=2, box=(5, 5, 25, 25)),
    dict(img=2, cls=1, box=(0, 0, 100, 100)),
    dict(img=2, cls=2, box=(50, 50, 70, 70)),
    dict(img=2, cls=2, box=(200, 200, 250, 260)),
    dict(img=3, cls=1, box=(30, 30, 50, 50)),
    dict(img=3, cls=2, box=(0, 0, 200, 150)),
]
DETS = [
    dict(img=1, cls=1, box=(12, 10, 60, 62), score=0.9),
    dict(img=1, cls=1, box=(100, 100, 290, 300), score=0.8),
    dict(img=1, cls=1, box=(10, 10, 60, 60), score=0.3),
    dict(img=1, cls=1, box=(400, 400, 450, 450), score=0.6),
    dict(img=1, cls=2, box=(5, 5, 25, 27), score=0.7),
    dict(img=2, cls=1, box=(0, 0, 80, 100), score=0.85),
    dict(img=2, cls=1, box=(0, 0, 100, 100), score=0.4),
    dict(img=2, cls=2, box=(52, 50, 70, 70), score=0.95),
    dict(img=2, cls=2, box=(200, 200, 250, 240), score=0.5),
    dict(img=2, cls=2, box=(0, 0, 10, 10), score=0.2),
    dict(img=3, cls=1, box=(31, 30, 50, 50), score=0.65),
    dict(img=3, cls=2, box=(0, 0, 200, 120), score=0.75),
    dict(img=3, cls=2, box=(10, 0, 200, 150), score=0.55),
]

# 20-sample TP/FP sequence (already score-descending), 12 ground truths.
SEQ20 = [1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 0, 1]

if __name__ == "__main__":
    print("seq20 AP (n_gt=12): %.17g" % ap101([bool(f) for f in SEQ20], 12))
    print("seq20 AP (n_gt=10): %.17g" % ap101([bool(f) for f in SEQ20], 10))
    for k, v in evaluate(DETS, GTS).items():
        print("%-6s %.17g" % (k, v))
    print("perfect:")
    perfect = [dict(img=g["img"], cls=g["cls"], box=g["box"], score=1.0) for g in GTS]
    print(evaluate(perfect, GTS))

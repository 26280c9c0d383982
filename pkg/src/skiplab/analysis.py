"""Skipping-behavior analyses over a trained checkpoint: per-block skip
ratios, per-class statistics, easy/hard example export, multi-scale testing."""

import csv
import os

import numpy as np

from .costs import block_and_gate_costs
from .data.transforms import resize_scale
from .errors import ConfigurationError
from .training.loops import evaluate

SCALES = (0.5, 0.75, 1.0, 1.25, 1.5)
ANALYSES = ("skip-ratio", "per-class", "easy-hard", "multi-scale")


def _forward_decisions(net, dataset, batch_size=256):
    parts = []
    for lo in range(0, len(dataset), batch_size):
        _, trace = net.forward(dataset.images[lo : lo + batch_size], mode="inference")
        parts.append(trace.decisions)
    return np.concatenate(parts)


def write_csv(path, fieldnames, rows):
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fieldnames)
        w.writeheader()
        for r in rows:
            w.writerow(r)


def skew(values):
    v = np.asarray(values, dtype=np.float64)
    if len(v) < 2:
        return 0.0
    s = v.std()
    if s == 0:
        return 0.0
    return float(((v - v.mean()) ** 3).mean() / s**3)


def analyze_skip_ratio(net, dataset, out_dir):
    from .svgplot import Plot

    dec = _forward_decisions(net, dataset)
    ratios = 1.0 - dec.mean(axis=0)
    groups = [g for _, g, _, _, _ in net.layout]
    rows = [
        {"block": i, "group": groups[i], "skip_ratio": f"{ratios[i]:.6f}"}
        for i in range(len(ratios))
    ]
    write_csv(os.path.join(out_dir, "skip_ratio.csv"), ["block", "group", "skip_ratio"], rows)
    Plot("Skip ratio per block", "block", "skip ratio").line(
        range(len(ratios)), ratios
    ).render(os.path.join(out_dir, "skip_ratio.svg"))
    return {"ratios": ratios.tolist()}


def analyze_per_class(net, dataset, out_dir, batch_size=256):
    from .svgplot import Plot

    dec = _forward_decisions(net, dataset, batch_size)
    skipped = dec.shape[1] - dec.sum(axis=1)
    correct = np.zeros(len(dataset), dtype=bool)
    for lo in range(0, len(dataset), batch_size):
        logits, _ = net.forward(dataset.images[lo : lo + batch_size], mode="inference")
        correct[lo : lo + batch_size] = (
            logits.data.argmax(axis=1) == dataset.labels[lo : lo + batch_size]
        )
    rows = []
    classes = sorted(set(int(v) for v in dataset.labels))
    med, acc = [], []
    for k in classes:
        sel = dataset.labels == k
        name = dataset.class_names[k] if dataset.class_names else str(k)
        rows.append(
            {
                "class": k,
                "name": name,
                "median_skipped": float(np.median(skipped[sel])),
                "accuracy": f"{correct[sel].mean():.6f}",
                "skew_skipped": f"{skew(skipped[sel]):.6f}",
            }
        )
        med.append(float(np.median(skipped[sel])))
        acc.append(correct[sel].mean())
    write_csv(
        os.path.join(out_dir, "per_class.csv"),
        ["class", "name", "median_skipped", "accuracy", "skew_skipped"],
        rows,
    )
    Plot("Per-class skipping vs accuracy", "class accuracy", "median skipped blocks").scatter(
        acc, med
    ).render(os.path.join(out_dir, "per_class.svg"))
    return {"rows": rows}


def analyze_easy_hard(net, dataset, out_dir, k=16, dump_png=False):
    dec = _forward_decisions(net, dataset)
    skipped = dec.shape[1] - dec.sum(axis=1)
    order = np.argsort(skipped, kind="stable")
    hard = order[:k]          # least skipped
    easy = order[::-1][:k]    # most skipped
    rows = [
        {"kind": "easy", "index": int(i), "skipped_blocks": int(skipped[i])}
        for i in easy
    ] + [
        {"kind": "hard", "index": int(i), "skipped_blocks": int(skipped[i])}
        for i in hard
    ]
    write_csv(os.path.join(out_dir, "easy_hard.csv"),
              ["kind", "index", "skipped_blocks"], rows)
    if dump_png:
        from .data.dataset import denormalize

        for kind, idx in (("easy", easy), ("hard", hard)):
            for rank, i in enumerate(idx):
                img = dataset.images[i]
                if dataset.channel_stats is not None:
                    img = denormalize(img[None], dataset.channel_stats)[0]
                write_ppm(
                    os.path.join(out_dir, f"{kind}_{rank:02d}_idx{int(i)}.ppm"), img
                )
    return {"easy": easy.tolist(), "hard": hard.tolist()}


def write_ppm(path, img_chw):
    """Binary PPM (P6). Grayscale input is replicated across RGB."""
    img = np.clip(np.rint(np.asarray(img_chw, dtype=np.float64)), 0, 255).astype(np.uint8)
    if img.shape[0] == 1:
        img = np.repeat(img, 3, axis=0)
    if img.shape[0] != 3:
        raise ConfigurationError(f"PPM needs 1 or 3 channels, got {img.shape[0]}")
    c, h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(img.transpose(1, 2, 0).tobytes())


def analyze_multi_scale(net, dataset, out_dir, batch_size=256, scales=SCALES):
    from .svgplot import Plot

    per_scale = {}
    for s in scales:
        counts = []
        for lo in range(0, len(dataset), batch_size):
            xb = resize_scale(dataset.images[lo : lo + batch_size], s)
            _, trace = net.forward(xb, mode="inference")
            counts.append(trace.executed_counts())
        per_scale[s] = np.concatenate(counts)
    base = per_scale.get(1.0)
    rows = []
    for s in scales:
        rel = per_scale[s] - base
        rows.append(
            {
                "scale": s,
                "mean_executed": f"{per_scale[s].mean():.6f}",
                "mean_relative_to_scale1": f"{rel.mean():.6f}",
                "p25_relative": f"{np.percentile(rel, 25):.6f}",
                "p75_relative": f"{np.percentile(rel, 75):.6f}",
            }
        )
    write_csv(
        os.path.join(out_dir, "multi_scale.csv"),
        ["scale", "mean_executed", "mean_relative_to_scale1", "p25_relative", "p75_relative"],
        rows,
    )
    Plot("Executed blocks vs input scale", "scale", "mean executed blocks").line(
        list(scales), [per_scale[s].mean() for s in scales]
    ).render(os.path.join(out_dir, "multi_scale.svg"))
    return {"mean_executed": {s: float(per_scale[s].mean()) for s in scales}}


def run_analysis(name, net, dataset, out_dir, **kw):
    if name == "skip-ratio":
        return analyze_skip_ratio(net, dataset, out_dir)
    if name == "per-class":
        return analyze_per_class(net, dataset, out_dir)
    if name == "easy-hard":
        return analyze_easy_hard(net, dataset, out_dir, dump_png=kw.get("dump_png", False))
    if name == "multi-scale":
        return analyze_multi_scale(net, dataset, out_dir)
    raise ConfigurationError(f"unknown analysis {name!r}; choose from {ANALYSES}")

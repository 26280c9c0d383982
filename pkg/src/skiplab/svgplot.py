"""Minimal dependency-free SVG line/scatter plots for analysis reports."""

W, H = 640, 420
ML, MR, MT, MB = 70, 20, 40, 55
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** __import__("math").floor(__import__("math").log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    t = []
    v = step * __import__("math").ceil(lo / step)
    while v <= hi + 1e-12:
        t.append(v)
        v += step
    return t


def _fmt(v):
    return f"{v:.6g}"


class Plot:
    def __init__(self, title, xlabel, ylabel):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.series = []  # (kind, xs, ys, label)

    def line(self, xs, ys, label=""):
        self.series.append(("line", list(xs), list(ys), label))
        return self

    def scatter(self, xs, ys, label=""):
        self.series.append(("scatter", list(xs), list(ys), label))
        return self

    def _bounds(self):
        xs = [x for _, sx, _, _ in self.series for x in sx]
        ys = [y for _, _, sy, _ in self.series for y in sy]
        if not xs:
            xs, ys = [0, 1], [0, 1]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if x0 == x1:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y0 == y1:
            y0, y1 = y0 - 0.5, y1 + 0.5
        padx, pady = 0.04 * (x1 - x0), 0.06 * (y1 - y0)
        return x0 - padx, x1 + padx, y0 - pady, y1 + pady

    def render(self, path):
        x0, x1, y0, y1 = self._bounds()

        def px(x):
            return ML + (x - x0) / (x1 - x0) * (W - ML - MR)

        def py(y):
            return H - MB - (y - y0) / (y1 - y0) * (H - MT - MB)

        el = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'font-family="sans-serif" font-size="12">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W/2}" y="22" text-anchor="middle" font-size="15">{self.title}</text>',
            f'<text x="{(ML+W-MR)/2}" y="{H-12}" text-anchor="middle">{self.xlabel}</text>',
            f'<text x="16" y="{(MT+H-MB)/2}" text-anchor="middle" '
            f'transform="rotate(-90 16 {(MT+H-MB)/2})">{self.ylabel}</text>',
            f'<rect x="{ML}" y="{MT}" width="{W-ML-MR}" height="{H-MT-MB}" '
            f'fill="none" stroke="#444"/>',
        ]
        for t in _ticks(x0, x1):
            el.append(f'<line x1="{px(t):.1f}" y1="{H-MB}" x2="{px(t):.1f}" '
                      f'y2="{H-MB+5}" stroke="#444"/>')
            el.append(f'<text x="{px(t):.1f}" y="{H-MB+18}" text-anchor="middle">{_fmt(t)}</text>')
        for t in _ticks(y0, y1):
            el.append(f'<line x1="{ML-5}" y1="{py(t):.1f}" x2="{ML}" '
                      f'y2="{py(t):.1f}" stroke="#444"/>')
            el.append(f'<text x="{ML-8}" y="{py(t)+4:.1f}" text-anchor="end">{_fmt(t)}</text>')
        for si, (kind, xs, ys, label) in enumerate(self.series):
            color = COLORS[si % len(COLORS)]
            pts = [(px(x), py(y)) for x, y in zip(xs, ys)]
            if kind == "line" and len(pts) > 1:
                d = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
                el.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.6"/>')
            for x, y in pts:
                el.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" fill="{color}"/>')
            if label:
                ly = MT + 16 + 15 * si
                el.append(f'<circle cx="{ML+12}" cy="{ly-4}" r="4" fill="{color}"/>')
                el.append(f'<text x="{ML+22}" y="{ly}">{label}</text>')
        el.append("</svg>")
        with open(path, "w") as f:
            f.write("\n".join(el) + "\n")

"""Minimal deterministic SVG 1.1 charts (no plotting dependency).

Numbers are formatted with fixed precision and elements are emitted in input
order, so the same data always yields byte-identical files.
"""

from __future__ import annotations

from pathlib import Path

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#17becf", "#7f7f7f")

_FONT = 'font-family="Helvetica,Arial,sans-serif"'


def _esc(s: str) -> str:
    return (str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _frame(width, height, margin, title, xlabel, ylabel):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="15" {_FONT}>'
        f'{_esc(title)}</text>',
        f'<text x="{width / 2:.1f}" y="{height - 6}" text-anchor="middle" font-size="12" '
        f'{_FONT}>{_esc(xlabel)}</text>',
        f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" font-size="12" {_FONT} '
        f'transform="rotate(-90 14 {height / 2:.1f})">{_esc(ylabel)}</text>',
    ]
    x0, y0 = margin, height - margin
    x1, y1 = width - margin // 2, margin
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#000000"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#000000"/>')
    return parts, (x0, y0, x1, y1)


def line_chart(series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
               width: int = 720, height: int = 440) -> str:
    """series maps name -> (xs, ys); both sequences of numbers."""
    if not series:
        raise ValueError("line_chart needs at least one series")
    margin = 56
    parts, (x0, y0, x1, y1) = _frame(width, height, margin, title, xlabel, ylabel)
    xs_all = [float(x) for _, (xs, _) in series.items() for x in xs]
    ys_all = [float(y) for _, (_, ys) in series.items() for y in ys]
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    xlo, xhi = min(xs_all), max(xs_all)
    ylo, yhi = min(ys_all), max(ys_all)
    if xhi <= xlo:
        xhi = xlo + 1.0
    if yhi <= ylo:
        yhi = ylo + 1.0

    def px(x):
        return x0 + (float(x) - xlo) / (xhi - xlo) * (x1 - x0)

    def py(y):
        return y0 - (float(y) - ylo) / (yhi - ylo) * (y0 - y1)

    for tx in _ticks(xlo, xhi):
        parts.append(f'<line x1="{px(tx):.2f}" y1="{y0}" x2="{px(tx):.2f}" y2="{y0 + 4}" '
                     f'stroke="#000000"/>')
        parts.append(f'<text x="{px(tx):.2f}" y="{y0 + 16}" text-anchor="middle" '
                     f'font-size="10" {_FONT}>{tx:.6g}</text>')
    for ty in _ticks(ylo, yhi):
        parts.append(f'<line x1="{x0 - 4}" y1="{py(ty):.2f}" x2="{x0}" y2="{py(ty):.2f}" '
                     f'stroke="#000000"/>')
        parts.append(f'<text x="{x0 - 6}" y="{py(ty) + 3:.2f}" text-anchor="end" '
                     f'font-size="10" {_FONT}>{ty:.6g}</text>')
    for i, (name, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        ly = y1 + 14 + 16 * i
        parts.append(f'<line x1="{x1 - 150}" y1="{ly - 4}" x2="{x1 - 126}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{x1 - 120}" y="{ly}" font-size="11" {_FONT}>'
                     f'{_esc(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart(labels, values, title: str = "", xlabel: str = "", ylabel: str = "",
              width: int = 720, height: int = 440) -> str:
    if not values:
        raise ValueError("bar_chart needs at least one bar")
    margin = 56
    parts, (x0, y0, x1, y1) = _frame(width, height, margin, title, xlabel, ylabel)
    values = [float(v) for v in values]
    ylo = min(0.0, min(values)) if values else 0.0
    yhi = max(values) if values else 1.0
    if yhi <= ylo:
        yhi = ylo + 1.0

    def py(y):
        return y0 - (y - ylo) / (yhi - ylo) * (y0 - y1)

    for ty in _ticks(ylo, yhi):
        parts.append(f'<line x1="{x0 - 4}" y1="{py(ty):.2f}" x2="{x0}" y2="{py(ty):.2f}" '
                     f'stroke="#000000"/>')
        parts.append(f'<text x="{x0 - 6}" y="{py(ty) + 3:.2f}" text-anchor="end" '
                     f'font-size="10" {_FONT}>{ty:.6g}</text>')
    n = max(len(values), 1)
    slot = (x1 - x0) / n
    for i, (label, v) in enumerate(zip(labels, values)):
        color = PALETTE[i % len(PALETTE)]
        bx = x0 + slot * (i + 0.15)
        bw = slot * 0.7
        top = py(max(v, 0.0))
        bh = abs(py(0.0) - py(v))
        parts.append(f'<rect x="{bx:.2f}" y="{top:.2f}" width="{bw:.2f}" '
                     f'height="{bh:.2f}" fill="{color}"/>')
        parts.append(f'<text x="{bx + bw / 2:.2f}" y="{y0 + 16}" text-anchor="middle" '
                     f'font-size="10" {_FONT}>{_esc(label)}</text>')
        parts.append(f'<text x="{bx + bw / 2:.2f}" y="{top - 4:.2f}" text-anchor="middle" '
                     f'font-size="10" {_FONT}>{v:.6g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_svg(path, svg: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(svg.encode("utf-8"))

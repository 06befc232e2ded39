"""Hand-rolled SVG figures: deterministic bytes, no plotting library.

Two figure kinds cover every tool: a polyline chart for series and a colored
cell grid for maps. Each figure gets a sidecar <name>.svg.meta.json declaring
title, axis labels, and units.
"""

import json
import os

W, H = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50

# Five-stop blue->red ramp; linear interpolation between stops.
_STOPS = [
    (33, 102, 172),
    (146, 197, 222),
    (247, 247, 247),
    (244, 165, 130),
    (178, 24, 43),
]


def _fmt(v):
    return "%.2f" % v


def _color(frac):
    if frac != frac:
        return "#999999"
    frac = min(1.0, max(0.0, frac))
    pos = frac * (len(_STOPS) - 1)
    i = min(int(pos), len(_STOPS) - 2)
    t = pos - i
    r0, g0, b0 = _STOPS[i]
    r1, g1, b1 = _STOPS[i + 1]
    return "#%02x%02x%02x" % (
        round(r0 + (r1 - r0) * t),
        round(g0 + (g1 - g0) * t),
        round(b0 + (b1 - b0) * t),
    )


def _frame(title, xlabel, ylabel, body):
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (W, H, W, H),
        '<rect width="%d" height="%d" fill="#ffffff"/>' % (W, H),
        '<text x="%d" y="24" font-family="sans-serif" font-size="16" '
        'text-anchor="middle">%s</text>' % (W // 2, _esc(title)),
        '<text x="%d" y="%d" font-family="sans-serif" font-size="12" '
        'text-anchor="middle">%s</text>' % (W // 2, H - 12, _esc(xlabel)),
        '<text x="18" y="%d" font-family="sans-serif" font-size="12" '
        'text-anchor="middle" transform="rotate(-90 18 %d)">%s</text>'
        % (H // 2, H // 2, _esc(ylabel)),
    ]
    parts.extend(body)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _esc(text):
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _scale(lo, hi):
    if hi == lo:
        hi = lo + 1.0
    return lo, hi


def line_chart(xs, ys, title, xlabel, ylabel):
    x0, x1 = _scale(min(xs), max(xs))
    y0, y1 = _scale(min(ys), max(ys))
    iw = W - MARGIN_L - MARGIN_R
    ih = H - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + iw * (x - x0) / (x1 - x0)

    def py(y):
        return MARGIN_T + ih * (1.0 - (y - y0) / (y1 - y0))

    points = " ".join("%s,%s" % (_fmt(px(x)), _fmt(py(y))) for x, y in zip(xs, ys))
    body = [
        '<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="#333333"/>'
        % (MARGIN_L, MARGIN_T, iw, ih),
        '<polyline points="%s" fill="none" stroke="#2166ac" stroke-width="1.5"/>' % points,
    ]
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = y0 + frac * (y1 - y0)
        body.append(
            '<text x="%s" y="%d" font-family="sans-serif" font-size="10" '
            'text-anchor="middle">%s</text>'
            % (_fmt(px(xv)), H - MARGIN_B + 16, _fmt(xv))
        )
        body.append(
            '<text x="%d" y="%s" font-family="sans-serif" font-size="10" '
            'text-anchor="end">%s</text>'
            % (MARGIN_L - 6, _fmt(py(yv) + 3), _fmt(yv))
        )
    return _frame(title, xlabel, ylabel, body)


def scatter_chart(xs, ys, fit, title, xlabel, ylabel):
    """Scatter with an overlaid fitted line; fit = (slope, intercept)."""
    x0, x1 = _scale(min(xs), max(xs))
    y_all = list(ys) + [fit[1] + fit[0] * x for x in (x0, x1)]
    y0, y1 = _scale(min(y_all), max(y_all))
    iw = W - MARGIN_L - MARGIN_R
    ih = H - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + iw * (x - x0) / (x1 - x0)

    def py(y):
        return MARGIN_T + ih * (1.0 - (y - y0) / (y1 - y0))

    body = [
        '<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="#333333"/>'
        % (MARGIN_L, MARGIN_T, iw, ih),
        '<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#b2182b" stroke-width="1.5"/>'
        % (
            _fmt(px(x0)),
            _fmt(py(fit[1] + fit[0] * x0)),
            _fmt(px(x1)),
            _fmt(py(fit[1] + fit[0] * x1)),
        ),
    ]
    for x, y in zip(xs, ys):
        body.append(
            '<circle cx="%s" cy="%s" r="3" fill="#2166ac"/>' % (_fmt(px(x)), _fmt(py(y)))
        )
    return _frame(title, xlabel, ylabel, body)


def map_chart(values, lats, lons, title, xlabel, ylabel):
    """Flat row-major [lat, lon] field as a colored cell grid."""
    finite = [v for v in values if v == v]
    lo = min(finite) if finite else 0.0
    hi = max(finite) if finite else 1.0
    lo, hi = _scale(lo, hi)
    iw = W - MARGIN_L - MARGIN_R
    ih = H - MARGIN_T - MARGIN_B
    cw = iw / len(lons)
    ch = ih / len(lats)
    body = []
    for i in range(len(lats)):
        for j in range(len(lons)):
            v = values[i * len(lons) + j]
            # Row 0 is the southernmost latitude; draw it at the bottom.
            x = MARGIN_L + j * cw
            y = MARGIN_T + (len(lats) - 1 - i) * ch
            body.append(
                '<rect x="%s" y="%s" width="%s" height="%s" fill="%s"/>'
                % (_fmt(x), _fmt(y), _fmt(cw + 0.5), _fmt(ch + 0.5),
                   _color((v - lo) / (hi - lo)))
            )
    body.append(
        '<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="#333333"/>'
        % (MARGIN_L, MARGIN_T, iw, ih)
    )
    body.append(
        '<text x="%d" y="%d" font-family="sans-serif" font-size="10">min %s  max %s</text>'
        % (MARGIN_L, H - MARGIN_B + 16, _fmt(lo), _fmt(hi))
    )
    return _frame(title, xlabel, ylabel, body)


def save_figure(ws, name, svg_text, title, xlabel, ylabel, units):
    """Write outputs/<name>.svg plus its metadata sidecar; return manifest refs."""
    rel_svg = os.path.join("outputs", name + ".svg")
    rel_meta = rel_svg + ".meta.json"
    path = os.path.join(ws, rel_svg)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg_text)
    with open(os.path.join(ws, rel_meta), "w", encoding="utf-8") as fh:
        json.dump(
            {"title": title, "xlabel": xlabel, "ylabel": ylabel, "units": units},
            fh,
            sort_keys=True,
            indent=1,
        )
        fh.write("\n")
    return {"path": rel_svg, "sidecar": rel_meta}

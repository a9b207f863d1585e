//! Line plots as standalone SVG: axes, ticks, one polyline per series.

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLOURS: [&str; 4] = ["#1f5fa8", "#c0392b", "#2e8b57", "#8e44ad"];

pub struct Plot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<(&'a str, Vec<(f64, f64)>)>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

impl Plot<'_> {
    /// SVG text; `comment` lines go into a leading XML comment.
    pub fn render(&self, comment: &[String]) -> String {
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|(_, s)| {
                s.iter()
                    .filter(|(x, y)| (!self.log_x || *x > 0.0) && (!self.log_y || *y > 0.0) && x.is_finite() && y.is_finite())
                    .map(|&(x, y)| (tx(x), ty(y)))
                    .collect()
            })
            .collect();
        let all = pts.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut s = String::new();
        s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        for c in comment {
            s.push_str(&format!("<!-- {} -->\n", esc(c)));
        }
        s.push_str(&format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"));
        s.push_str(&format!("<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"));
        s.push_str(&format!("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", W / 2.0, esc(self.title)));
        let (ax0, ax1, ay0, ay1) = (px(x0), px(x1), py(y0), py(y1));
        s.push_str(&format!("<path d=\"M{ax0:.1},{ay1:.1} L{ax0:.1},{ay0:.1} L{ax1:.1},{ay0:.1}\" fill=\"none\" stroke=\"black\"/>\n"));
        let label = |v: f64, log: bool| if log { format!("1e{v}") } else { format!("{v}") };
        for t in ticks(x0, x1) {
            let x = px(t);
            s.push_str(&format!("<line x1=\"{x:.1}\" y1=\"{ay0:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n", ay0 + 5.0));
            s.push_str(&format!("<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n", ay0 + 18.0, label(t, self.log_x)));
        }
        for t in ticks(y0, y1) {
            let y = py(t);
            s.push_str(&format!("<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{ax0:.1}\" y2=\"{y:.1}\" stroke=\"black\"/>\n", ax0 - 5.0));
            s.push_str(&format!("<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n", ax0 - 8.0, y + 4.0, label(t, self.log_y)));
        }
        s.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (ax0 + ax1) / 2.0, H - 12.0, esc(self.x_label)));
        s.push_str(&format!(
            "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {0})\">{1}</text>\n",
            (ay0 + ay1) / 2.0,
            esc(self.y_label)
        ));
        for (k, (p, (name, _))) in pts.iter().zip(&self.series).enumerate() {
            let colour = COLOURS[k % COLOURS.len()];
            if !p.is_empty() {
                let d: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                s.push_str(&format!("<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"/>\n", d.join(" ")));
            }
            if self.series.len() > 1 {
                let ly = TOP + 14.0 * k as f64;
                s.push_str(&format!("<text x=\"{:.1}\" y=\"{ly:.1}\" fill=\"{colour}\" text-anchor=\"end\">{}</text>\n", ax1, esc(name)));
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

use std::fmt::Write as _;

pub(crate) const WIDTH: f64 = 720.0;
pub(crate) const HEIGHT: f64 = 440.0;

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

#[inline]
pub(crate) fn n(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Up to about six round tick values covering `[lo, hi]`.
pub(crate) fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| (hi - lo) / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

pub(crate) fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Linear or log10 mapping from data to pixels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub px_lo: f64,
    pub px_hi: f64,
    pub log: bool,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64, log: bool) -> Self {
        let (lo, hi) = if log {
            let lo = lo.max(1e-12);
            (lo, hi.max(lo * 10.0))
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        };
        Axis {
            lo,
            hi,
            px_lo,
            px_hi,
            log,
        }
    }

    pub fn map(&self, v: f64) -> f64 {
        let f = if self.log {
            (v.max(self.lo).log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        };
        self.px_lo + f * (self.px_hi - self.px_lo)
    }

    pub fn ticks(&self) -> Vec<f64> {
        if self.log {
            let a = self.lo.log10().ceil() as i32;
            let b = self.hi.log10().floor() as i32;
            (a..=b).map(|e| 10f64.powi(e)).collect()
        } else {
            nice_ticks(self.lo, self.hi)
        }
    }
}

pub(crate) struct Doc {
    pub body: String,
}

impl Doc {
    pub fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = WIDTH,
            h = HEIGHT
        );
        let _ = writeln!(body, "<title>{}</title>", escape(title));
        let _ = writeln!(body, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        Doc { body }
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, attrs: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" {attrs}/>"#,
            n(x1),
            n(y1),
            n(x2),
            n(y2)
        );
    }

    pub fn text(&mut self, x: f64, y: f64, s: &str, attrs: &str) {
        let _ = writeln!(self.body, r#"<text x="{}" y="{}" {attrs}>{}</text>"#, n(x), n(y), escape(s));
    }

    pub fn raw(&mut self, s: &str) {
        self.body.push_str(s);
        self.body.push('\n');
    }

    /// Frame, ticks and axis titles for a plot area.
    pub fn axes(&mut self, x: &Axis, y: &Axis, x_title: &str, y_title: &str) {
        let (left, right) = (x.px_lo, x.px_hi);
        let (bottom, top) = (y.px_lo, y.px_hi);
        self.raw(r#"<g class="axes" stroke="black" stroke-width="1">"#);
        self.line(left, bottom, right, bottom, "");
        self.line(left, bottom, left, top, "");
        self.raw("</g>");
        for t in x.ticks() {
            let px = x.map(t);
            self.line(px, bottom, px, bottom + 5.0, r#"stroke="black""#);
            self.text(px, bottom + 18.0, &tick_label(t), r#"text-anchor="middle""#);
        }
        for t in y.ticks() {
            let py = y.map(t);
            self.line(left - 5.0, py, left, py, r#"stroke="black""#);
            self.text(left - 8.0, py + 4.0, &tick_label(t), r#"text-anchor="end""#);
        }
        self.text((left + right) / 2.0, bottom + 38.0, x_title, r#"class="x-label" text-anchor="middle""#);
        let (cx, cy) = (left - 48.0, (top + bottom) / 2.0);
        self.text(
            cx,
            cy,
            y_title,
            &format!(r#"class="y-label" text-anchor="middle" transform="rotate(-90 {} {})""#, n(cx), n(cy)),
        );
    }

    pub fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

//! Minimal static SVG emitters for `diagnose --plot`: index timeline with
//! coverage band, PIT histogram, QQ scatter and event-shaded timeline.
//! Everything is plain generated XML with fixed two-decimal coordinates.

use hydroindex::{coverage_interval, ExtremeEvent, IndexEntry};

const W: f64 = 860.0;
const H: f64 = 360.0;
const ML: f64 = 60.0; // left margin
const MR: f64 = 20.0;
const MT: f64 = 34.0;
const MB: f64 = 44.0;

struct Frame {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        let pad = 0.04 * (ymax - ymin).max(1e-9);
        Self { xmin, xmax, ymin: ymin - pad, ymax: ymax + pad }
    }

    fn x(&self, v: f64) -> f64 {
        ML + (v - self.xmin) / (self.xmax - self.xmin).max(1e-12) * (W - ML - MR)
    }

    fn y(&self, v: f64) -> f64 {
        MT + (1.0 - (v - self.ymin) / (self.ymax - self.ymin).max(1e-12)) * (H - MT - MB)
    }
}

fn header(title: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n\
         <rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{:.2}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(frame: &Frame, out: &mut String, x_labels: &[(f64, String)]) {
    let x0 = ML;
    let x1 = W - MR;
    let y0 = H - MB;
    let y1 = MT;
    out.push_str(&format!(
        "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n\
         <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\" stroke=\"black\"/>\n"
    ));
    for i in 0..=4 {
        let v = frame.ymin + (frame.ymax - frame.ymin) * i as f64 / 4.0;
        let y = frame.y(v);
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"end\">{:.2}</text>\n",
            x0 - 4.0,
            x0 - 6.0,
            y + 3.0,
            v
        ));
    }
    for (v, label) in x_labels {
        let x = frame.x(*v);
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{y0:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n\
             <text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"middle\">{}</text>\n",
            y0 + 4.0,
            y0 + 16.0,
            escape(label)
        ));
    }
}

fn date_ticks(entries: &[IndexEntry]) -> Vec<(f64, String)> {
    let n = entries.len();
    let count = 6.min(n);
    (0..count)
        .map(|i| {
            let t = if count == 1 { 0 } else { i * (n - 1) / (count - 1) };
            (t as f64, entries[t].date.format("%Y-%m").to_string())
        })
        .collect()
}

fn polyline(points: &[(f64, f64)], stroke: &str, width: f64) -> String {
    if points.len() < 2 {
        return String::new();
    }
    let coords: Vec<String> =
        points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>\n",
        coords.join(" ")
    )
}

/// Moving average with the fitted mean curve and 95% coverage band.
pub fn timeline_svg(entries: &[IndexEntry], label: &str) -> String {
    let n = entries.len();
    let bands: Vec<Option<(f64, f64, f64)>> = entries
        .iter()
        .map(|e| {
            e.params.as_ref().and_then(|p| {
                coverage_interval(p, 0.95).ok().map(|(lo, hi)| (lo, hi, p.mean()))
            })
        })
        .collect();
    let mut ymax = 0.0f64;
    for e in entries {
        if let Some(v) = e.ma {
            ymax = ymax.max(v);
        }
    }
    for b in bands.iter().flatten() {
        ymax = ymax.max(b.1);
    }
    let frame = Frame::new(0.0, (n - 1).max(1) as f64, 0.0, ymax.max(1e-9));

    let mut out = header(&format!("{label}: moving average with 95% coverage"));

    // coverage band as one polygon: upper edge forward, lower edge back
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (t, b) in bands.iter().enumerate() {
        if let Some((lo, hi, _)) = b {
            upper.push((frame.x(t as f64), frame.y(*hi)));
            lower.push((frame.x(t as f64), frame.y(*lo)));
        }
    }
    if upper.len() >= 2 {
        let mut path = String::from("<polygon points=\"");
        for (x, y) in upper.iter().chain(lower.iter().rev()) {
            path.push_str(&format!("{x:.2},{y:.2} "));
        }
        path.push_str("\" fill=\"lightsteelblue\" fill-opacity=\"0.6\" stroke=\"none\"/>\n");
        out.push_str(&path);
    }

    let mean_pts: Vec<(f64, f64)> = bands
        .iter()
        .enumerate()
        .filter_map(|(t, b)| b.map(|(_, _, m)| (frame.x(t as f64), frame.y(m))))
        .collect();
    out.push_str(&polyline(&mean_pts, "steelblue", 1.5));

    for (t, e) in entries.iter().enumerate() {
        if let Some(v) = e.ma {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.6\" fill=\"dimgray\"/>\n",
                frame.x(t as f64),
                frame.y(v)
            ));
        }
    }

    axes(&frame, &mut out, &date_ticks(entries));
    out.push_str("</svg>\n");
    out
}

/// PIT histogram with the uniform-expectation line.
pub fn pit_histogram_svg(counts: &[usize], n: usize, label: &str) -> String {
    let bins = counts.len();
    let top = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
    let frame = Frame::new(0.0, 1.0, 0.0, top);
    let mut out = header(&format!("{label}: PIT histogram"));
    for (i, &c) in counts.iter().enumerate() {
        let x0 = frame.x(i as f64 / bins as f64);
        let x1 = frame.x((i + 1) as f64 / bins as f64);
        let y = frame.y(c as f64);
        let base = frame.y(0.0);
        out.push_str(&format!(
            "<rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"steelblue\" stroke=\"white\"/>\n",
            (x1 - x0).max(0.0),
            (base - y).max(0.0)
        ));
    }
    let expected = n as f64 / bins as f64;
    let y = frame.y(expected);
    out.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"crimson\" \
         stroke-dasharray=\"5,3\"/>\n",
        frame.x(0.0),
        frame.x(1.0)
    ));
    let ticks: Vec<(f64, String)> =
        (0..=4).map(|i| (i as f64 / 4.0, format!("{:.2}", i as f64 / 4.0))).collect();
    axes(&frame, &mut out, &ticks);
    out.push_str("</svg>\n");
    out
}

/// Normal QQ scatter with the identity line.
pub fn qq_svg(points: &[(f64, f64)], label: &str) -> String {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(t, e) in points {
        lo = lo.min(t).min(e);
        hi = hi.max(t).max(e);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = -1.0;
        hi = 1.0;
    }
    let frame = Frame::new(lo, hi, lo, hi);
    let mut out = header(&format!("{label}: normal QQ"));
    out.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"crimson\"/>\n",
        frame.x(lo),
        frame.y(lo),
        frame.x(hi),
        frame.y(hi)
    ));
    for &(t, e) in points {
        out.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.8\" fill=\"steelblue\" \
             fill-opacity=\"0.7\"/>\n",
            frame.x(t),
            frame.y(e)
        ));
    }
    let ticks: Vec<(f64, String)> = (0..=4)
        .map(|i| {
            let v = lo + (hi - lo) * i as f64 / 4.0;
            (v, format!("{v:.1}"))
        })
        .collect();
    axes(&frame, &mut out, &ticks);
    out.push_str("</svg>\n");
    out
}

/// Standardized values with detected events shaded.
pub fn events_svg(
    entries: &[IndexEntry],
    events: &[ExtremeEvent],
    threshold: f64,
    label: &str,
) -> String {
    let n = entries.len();
    let mut lo = -1.0f64;
    let mut hi = 1.0f64;
    for e in entries {
        if let Some(z) = e.z {
            lo = lo.min(z);
            hi = hi.max(z);
        }
    }
    lo = lo.min(-threshold - 0.5);
    hi = hi.max(threshold + 0.5);
    let frame = Frame::new(0.0, (n - 1).max(1) as f64, lo, hi);
    let mut out = header(&format!("{label}: standardized values, threshold {threshold}"));

    // shade events first so the series draws on top
    for ev in events {
        let t0 = entries.iter().position(|e| e.date == ev.start).unwrap_or(0);
        let t1 = entries.iter().position(|e| e.date == ev.end).unwrap_or(t0);
        let x0 = frame.x(t0 as f64) - 1.0;
        let x1 = frame.x(t1 as f64) + 1.0;
        let color = match ev.kind {
            hydroindex::EventKind::Flood => "lightskyblue",
            hydroindex::EventKind::Drought => "navajowhite",
        };
        out.push_str(&format!(
            "<rect x=\"{x0:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" \
             fill-opacity=\"0.8\"/>\n",
            MT,
            (x1 - x0).max(1.0),
            H - MT - MB
        ));
    }

    for level in [threshold, -threshold, 0.0] {
        let y = frame.y(level);
        let dash = if level == 0.0 { "2,2" } else { "5,3" };
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"gray\" \
             stroke-dasharray=\"{dash}\"/>\n",
            frame.x(0.0),
            frame.x((n - 1).max(1) as f64)
        ));
    }

    // break the polyline at undefined entries
    let mut segment: Vec<(f64, f64)> = Vec::new();
    for (t, e) in entries.iter().enumerate() {
        match e.z {
            Some(z) => segment.push((frame.x(t as f64), frame.y(z))),
            None => {
                out.push_str(&polyline(&segment, "black", 1.0));
                segment.clear();
            }
        }
    }
    out.push_str(&polyline(&segment, "black", 1.0));

    axes(&frame, &mut out, &date_ticks(entries));
    out.push_str("</svg>\n");
    out
}

//! Deterministic SVG renderers for the crate's CSV artifacts.
//!
//! Four figure kinds cover every table the pipeline emits: `heatmap` for
//! square dissimilarity matrices, `lines` for accuracy-vs-depth grids,
//! `histogram` for paired correct/incorrect counts, and `violin` for binned
//! value distributions. Each renderer checks its input schema and produces a
//! standalone SVG string; identical inputs give identical bytes (fixed
//! canvas, fixed palette, fixed-precision coordinates, no timestamps or
//! randomness), so rendered figures can be golden-tested byte for byte.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::table::{read_metadata, read_table, Table};

/// Which renderer to apply to a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Heatmap,
    Lines,
    Histogram,
    Violin,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] =
        [PlotKind::Heatmap, PlotKind::Lines, PlotKind::Histogram, PlotKind::Violin];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Heatmap => "heatmap",
            PlotKind::Lines => "lines",
            PlotKind::Histogram => "histogram",
            PlotKind::Violin => "violin",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heatmap" => Ok(PlotKind::Heatmap),
            "lines" => Ok(PlotKind::Lines),
            "histogram" => Ok(PlotKind::Histogram),
            "violin" => Ok(PlotKind::Violin),
            other => Err(Error::InvalidInput(format!(
                "unknown plot kind {other:?}; expected heatmap, lines, histogram, or violin"
            ))),
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 52.0;
const MARGIN_BOTTOM: f64 = 64.0;
const PLOT_W: f64 = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
const PLOT_H: f64 = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

/// Fixed series palette (colorblind-safe-ish, order stable).
const PALETTE: [&str; 10] = [
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377", "#bbbbbb", "#000000",
    "#99ddff", "#ee8866",
];

/// Fixed-precision coordinate formatting keeps the output byte-stable.
fn fx(v: f64) -> String {
    format!("{v:.2}")
}

/// Short numeric label for ticks: up to three decimals, trailing zeros cut.
fn tick_label(v: f64) -> String {
    let mut s = format!("{v:.3}");
    while s.contains('.') && (s.ends_with('0') || s.ends_with('.')) {
        s.pop();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Five-stop dark-to-bright color scale, linearly interpolated per channel.
fn heat_color(t: f64) -> String {
    const STOPS: [(f64, [u8; 3]); 5] = [
        (0.00, [0x44, 0x01, 0x54]),
        (0.25, [0x3b, 0x52, 0x8b]),
        (0.50, [0x21, 0x91, 0x8c]),
        (0.75, [0x5e, 0xc9, 0x62]),
        (1.00, [0xfd, 0xe7, 0x25]),
    ];
    let t = t.clamp(0.0, 1.0);
    let mut rgb = STOPS[STOPS.len() - 1].1;
    for w in STOPS.windows(2) {
        let ((a, ca), (b, cb)) = (w[0], w[1]);
        if t <= b {
            let u = if b > a { (t - a) / (b - a) } else { 0.0 };
            for k in 0..3 {
                rgb[k] = (ca[k] as f64 + u * (cb[k] as f64 - ca[k] as f64)).round() as u8;
            }
            break;
        }
    }
    format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
}

fn meta_str<'a>(meta: &'a serde_json::Value, key: &str) -> Option<&'a str> {
    meta.get(key).and_then(|v| v.as_str())
}

struct Canvas {
    out: String,
}

impl Canvas {
    fn new(title: &str) -> Canvas {
        let mut out = String::with_capacity(16 * 1024);
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
        ));
        out.push_str(&format!(
            "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
        ));
        if !title.is_empty() {
            out.push_str(&format!(
                "<text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
                fx(WIDTH / 2.0),
                esc(title)
            ));
        }
        Canvas { out }
    }

    fn text(&mut self, x: f64, y: f64, size: u32, anchor: &str, extra: &str, s: &str) {
        self.out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"{size}\" text-anchor=\"{anchor}\"{extra}>{}</text>\n",
            fx(x),
            fx(y),
            esc(s)
        ));
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, width: f64) {
        self.out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{}\"/>\n",
            fx(x1),
            fx(y1),
            fx(x2),
            fx(y2),
            fx(width)
        ));
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        self.out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>\n",
            fx(x),
            fx(y),
            fx(w),
            fx(h)
        ));
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }

    /// X/Y axis lines, ticks, tick labels, and optional axis titles.
    fn axes(
        &mut self,
        x_range: (f64, f64),
        y_range: (f64, f64),
        x_label: &str,
        y_label: &str,
    ) {
        let x0 = MARGIN_LEFT;
        let y0 = MARGIN_TOP + PLOT_H;
        self.line(x0, y0, x0 + PLOT_W, y0, "#000000", 1.0);
        self.line(x0, MARGIN_TOP, x0, y0, "#000000", 1.0);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x_range.0 + f * (x_range.1 - x_range.0);
            let yv = y_range.0 + f * (y_range.1 - y_range.0);
            let xp = x0 + f * PLOT_W;
            let yp = y0 - f * PLOT_H;
            self.line(xp, y0, xp, y0 + 5.0, "#000000", 1.0);
            self.text(xp, y0 + 20.0, 11, "middle", "", &tick_label(xv));
            self.line(x0 - 5.0, yp, x0, yp, "#000000", 1.0);
            self.text(x0 - 9.0, yp + 4.0, 11, "end", "", &tick_label(yv));
        }
        if !x_label.is_empty() {
            self.text(x0 + PLOT_W / 2.0, HEIGHT - 16.0, 12, "middle", "", x_label);
        }
        if !y_label.is_empty() {
            let x = 22.0;
            let y = MARGIN_TOP + PLOT_H / 2.0;
            self.out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>\n",
                fx(x), fx(y), fx(x), fx(y), esc(y_label)
            ));
        }
    }

    fn legend(&mut self, entries: &[(String, &str)]) {
        let x = MARGIN_LEFT + PLOT_W + 14.0;
        for (i, (name, color)) in entries.iter().enumerate() {
            let y = MARGIN_TOP + 10.0 + i as f64 * 18.0;
            self.rect(x, y - 8.0, 12.0, 10.0, color);
            self.text(x + 17.0, y, 11, "start", "", name);
        }
    }
}

fn parse_cell(table_cell: &str, what: &str) -> Result<f64> {
    let v: f64 = table_cell
        .parse()
        .map_err(|_| Error::InvalidInput(format!("{what}: {table_cell:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::InvalidInput(format!("{what}: {table_cell:?} is not finite")));
    }
    Ok(v)
}

fn title_of(meta: &serde_json::Value) -> String {
    meta_str(meta, "title").unwrap_or("").to_string()
}

/// Square matrix with a leading row-label column → colored grid.
///
/// Schema: `label, c1..cn` with exactly as many value columns as rows. The
/// color scale is min-max over the data; its endpoints are printed under the
/// gradient legend.
pub fn render_heatmap(table: &Table, meta: &serde_json::Value) -> Result<String> {
    let n = table.rows().len();
    if n == 0 {
        return Err(Error::InvalidInput("heatmap needs at least one row".into()));
    }
    if table.columns().len() != n + 1 {
        return Err(Error::InvalidInput(format!(
            "heatmap needs a square matrix with one label column: got {} rows but {} columns",
            n,
            table.columns().len()
        )));
    }
    let labels: Vec<String> = table.rows().iter().map(|r| r[0].clone()).collect();
    let mut values = Vec::with_capacity(n * n);
    for (i, row) in table.rows().iter().enumerate() {
        for (j, cell) in row[1..].iter().enumerate() {
            values.push(parse_cell(cell, &format!("heatmap cell ({i},{j})"))?);
        }
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };

    let mut c = Canvas::new(&title_of(meta));
    let side = PLOT_W.min(PLOT_H);
    let cell = side / n as f64;
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP;
    for i in 0..n {
        for j in 0..n {
            let t = (values[i * n + j] - lo) / span;
            c.rect(x0 + j as f64 * cell, y0 + i as f64 * cell, cell, cell, &heat_color(t));
        }
    }
    // Tick labels: rows on the left, columns on top (rotated).
    for (i, lab) in labels.iter().enumerate() {
        let yc = y0 + (i as f64 + 0.5) * cell;
        c.text(x0 - 6.0, yc + 3.0, 9, "end", "", lab);
        let xc = x0 + (i as f64 + 0.5) * cell;
        c.out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"start\" transform=\"rotate(-60 {} {})\">{}</text>\n",
            fx(xc), fx(y0 - 5.0), fx(xc), fx(y0 - 5.0), esc(lab)
        ));
    }
    // Gradient legend: 64 thin slabs beside the grid.
    let gx = x0 + side + 24.0;
    let gh = side * 0.6;
    let gy = y0 + (side - gh) / 2.0;
    for s in 0..64 {
        let t = s as f64 / 63.0;
        c.rect(gx, gy + gh - (s + 1) as f64 * gh / 64.0, 14.0, gh / 64.0 + 0.5, &heat_color(t));
    }
    c.text(gx + 18.0, gy + gh + 4.0, 10, "start", "", &tick_label(lo));
    c.text(gx + 18.0, gy + 7.0, 10, "start", "", &tick_label(hi));
    Ok(c.finish())
}

/// Series table → one polyline per row.
///
/// Schema: first column holds series names; a column literally named `n` is
/// ignored; every other column header must end in a number (e.g. `t5` or
/// `30`), which becomes the x coordinate.
pub fn render_lines(table: &Table, meta: &serde_json::Value) -> Result<String> {
    if table.columns().len() < 2 {
        return Err(Error::InvalidInput("lines needs a series column plus value columns".into()));
    }
    if table.rows().is_empty() {
        return Err(Error::InvalidInput("lines needs at least one series row".into()));
    }
    let mut xs = Vec::new();
    let mut cols = Vec::new();
    for (ci, name) in table.columns().iter().enumerate().skip(1) {
        if name == "n" {
            continue;
        }
        let digits: String = name.chars().skip_while(|ch| !ch.is_ascii_digit() && *ch != '-').collect();
        let x: f64 = digits.parse().map_err(|_| {
            Error::InvalidInput(format!("lines: column {name:?} has no numeric suffix to use as x"))
        })?;
        xs.push(x);
        cols.push(ci);
    }
    if xs.is_empty() {
        return Err(Error::InvalidInput("lines found no numeric value columns".into()));
    }

    let mut series: Vec<(String, Vec<f64>)> = Vec::with_capacity(table.rows().len());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in table.rows() {
        let mut ys = Vec::with_capacity(cols.len());
        for (&ci, x) in cols.iter().zip(&xs) {
            let v = parse_cell(&row[ci], &format!("lines series {:?} at x={x}", row[0]))?;
            lo = lo.min(v);
            hi = hi.max(v);
            ys.push(v);
        }
        series.push((row[0].clone(), ys));
    }
    let (xmin, xmax) = (xs.iter().cloned().fold(f64::INFINITY, f64::min), xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    let pad = if hi > lo { (hi - lo) * 0.05 } else { 0.5 };
    let (ymin, ymax) = (lo - pad, hi + pad);
    let xspan = if xmax > xmin { xmax - xmin } else { 1.0 };

    let mut c = Canvas::new(&title_of(meta));
    c.axes(
        (xmin, xmax),
        (ymin, ymax),
        meta_str(meta, "x_label").unwrap_or("x"),
        meta_str(meta, "y_label").unwrap_or("value"),
    );
    let to_px = |x: f64, y: f64| {
        (
            MARGIN_LEFT + (x - xmin) / xspan * PLOT_W,
            MARGIN_TOP + PLOT_H - (y - ymin) / (ymax - ymin) * PLOT_H,
        )
    };
    let mut legend = Vec::new();
    for (si, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let (px, py) = to_px(x, y);
                format!("{},{}", fx(px), fx(py))
            })
            .collect();
        c.out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            pts.join(" ")
        ));
        for (&x, &y) in xs.iter().zip(ys) {
            let (px, py) = to_px(x, y);
            c.out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.6\" fill=\"{color}\"/>\n",
                fx(px),
                fx(py)
            ));
        }
        legend.push((name.clone(), color));
    }
    c.legend(&legend);
    Ok(c.finish())
}

/// Paired-count table → side-by-side bars per bin.
///
/// Schema: exactly `bin_lo, bin_hi, correct, incorrect`.
pub fn render_histogram(table: &Table, meta: &serde_json::Value) -> Result<String> {
    let want = ["bin_lo", "bin_hi", "correct", "incorrect"];
    if table.columns() != want {
        return Err(Error::InvalidInput(format!(
            "histogram needs columns {want:?}, got {:?}",
            table.columns()
        )));
    }
    if table.rows().is_empty() {
        return Err(Error::InvalidInput("histogram needs at least one bin".into()));
    }
    let mut bins = Vec::new();
    let mut max_count = 0.0f64;
    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    for (i, row) in table.rows().iter().enumerate() {
        let lo = parse_cell(&row[0], &format!("histogram bin {i} lower edge"))?;
        let hi = parse_cell(&row[1], &format!("histogram bin {i} upper edge"))?;
        let good = parse_cell(&row[2], &format!("histogram bin {i} correct count"))?;
        let bad = parse_cell(&row[3], &format!("histogram bin {i} incorrect count"))?;
        if hi <= lo {
            return Err(Error::InvalidInput(format!("histogram bin {i} has no width")));
        }
        xmin = xmin.min(lo);
        xmax = xmax.max(hi);
        max_count = max_count.max(good).max(bad);
        bins.push((lo, hi, good, bad));
    }
    let ymax = if max_count > 0.0 { max_count * 1.05 } else { 1.0 };

    let mut c = Canvas::new(&title_of(meta));
    c.axes(
        (xmin, xmax),
        (0.0, ymax),
        meta_str(meta, "x_label").unwrap_or("left-right correlation"),
        meta_str(meta, "y_label").unwrap_or("images"),
    );
    let xspan = xmax - xmin;
    for &(lo, hi, good, bad) in &bins {
        let x_lo = MARGIN_LEFT + (lo - xmin) / xspan * PLOT_W;
        let x_hi = MARGIN_LEFT + (hi - xmin) / xspan * PLOT_W;
        let w = (x_hi - x_lo) * 0.42;
        let base = MARGIN_TOP + PLOT_H;
        let gh = good / ymax * PLOT_H;
        let bh = bad / ymax * PLOT_H;
        c.rect(x_lo + (x_hi - x_lo) * 0.05, base - gh, w, gh, PALETTE[0]);
        c.rect(x_lo + (x_hi - x_lo) * 0.53, base - bh, w, bh, PALETTE[1]);
    }
    c.legend(&[("correct".to_string(), PALETTE[0]), ("incorrect".to_string(), PALETTE[1])]);
    Ok(c.finish())
}

/// Binned value lists → one mirrored density silhouette per bin.
///
/// Schema: exactly `bin, value`. Bins keep first-appearance order; each
/// silhouette is a 25-point histogram density smoothed with a [1,2,1]/4
/// kernel, mirrored around the bin's center line, with a median tick.
pub fn render_violin(table: &Table, meta: &serde_json::Value) -> Result<String> {
    let want = ["bin", "value"];
    if table.columns() != want {
        return Err(Error::InvalidInput(format!(
            "violin needs columns {want:?}, got {:?}",
            table.columns()
        )));
    }
    if table.rows().is_empty() {
        return Err(Error::InvalidInput("violin needs at least one value".into()));
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for (i, row) in table.rows().iter().enumerate() {
        let v = parse_cell(&row[1], &format!("violin value in row {i}"))?;
        match order.iter().position(|b| *b == row[0]) {
            Some(g) => groups[g].push(v),
            None => {
                order.push(row[0].clone());
                groups.push(vec![v]);
            }
        }
    }
    let lo = groups.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let hi = groups.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo { (hi - lo) * 0.05 } else { 0.5 };
    let (ymin, ymax) = (lo - pad, hi + pad);

    let mut c = Canvas::new(&title_of(meta));
    // Y axis only; bins get categorical x labels.
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + PLOT_H;
    c.line(x0, y0, x0 + PLOT_W, y0, "#000000", 1.0);
    c.line(x0, MARGIN_TOP, x0, y0, "#000000", 1.0);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let yv = ymin + f * (ymax - ymin);
        let yp = y0 - f * PLOT_H;
        c.line(x0 - 5.0, yp, x0, yp, "#000000", 1.0);
        c.text(x0 - 9.0, yp + 4.0, 11, "end", "", &tick_label(yv));
    }
    let ylab = meta_str(meta, "y_label").unwrap_or("dissimilarity");
    let yx = 22.0;
    let yy = MARGIN_TOP + PLOT_H / 2.0;
    c.out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>\n",
        fx(yx), fx(yy), fx(yx), fx(yy), esc(ylab)
    ));

    const STRIPS: usize = 25;
    let slot = PLOT_W / order.len() as f64;
    let to_py = |v: f64| MARGIN_TOP + PLOT_H - (v - ymin) / (ymax - ymin) * PLOT_H;
    for (g, (name, values)) in order.iter().zip(&groups).enumerate() {
        let color = PALETTE[g % PALETTE.len()];
        let xc = x0 + (g as f64 + 0.5) * slot;
        // Histogram density over the full y range, then one smoothing pass.
        let mut dens = [0.0f64; STRIPS];
        let span = ymax - ymin;
        for &v in values {
            let mut s = ((v - ymin) / span * STRIPS as f64) as usize;
            if s >= STRIPS {
                s = STRIPS - 1;
            }
            dens[s] += 1.0;
        }
        let mut smooth = [0.0f64; STRIPS];
        for i in 0..STRIPS {
            let prev = if i > 0 { dens[i - 1] } else { dens[i] };
            let next = if i + 1 < STRIPS { dens[i + 1] } else { dens[i] };
            smooth[i] = (prev + 2.0 * dens[i] + next) / 4.0;
        }
        let peak = smooth.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
        let half_w = slot * 0.38;
        let mut left = Vec::with_capacity(STRIPS);
        let mut right = Vec::with_capacity(STRIPS);
        for (i, &d) in smooth.iter().enumerate() {
            let yv = ymin + (i as f64 + 0.5) / STRIPS as f64 * span;
            let py = to_py(yv);
            let w = d / peak * half_w;
            left.push(format!("{},{}", fx(xc - w), fx(py)));
            right.push(format!("{},{}", fx(xc + w), fx(py)));
        }
        right.reverse();
        let pts = [left, right].concat().join(" ");
        c.out.push_str(&format!(
            "<polygon points=\"{pts}\" fill=\"{color}\" fill-opacity=\"0.55\" stroke=\"{color}\" stroke-width=\"1\"/>\n"
        ));
        // Median tick.
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("violin values are finite"));
        let m = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[m]
        } else {
            0.5 * (sorted[m - 1] + sorted[m])
        };
        let py = to_py(median);
        c.line(xc - half_w, py, xc + half_w, py, "#000000", 1.2);
        c.text(xc, y0 + 20.0, 11, "middle", "", name);
    }
    Ok(c.finish())
}

/// Renders an in-memory table with the chosen renderer.
pub fn render(table: &Table, meta: &serde_json::Value, kind: PlotKind) -> Result<String> {
    match kind {
        PlotKind::Heatmap => render_heatmap(table, meta),
        PlotKind::Lines => render_lines(table, meta),
        PlotKind::Histogram => render_histogram(table, meta),
        PlotKind::Violin => render_violin(table, meta),
    }
}

/// Reads `csv_path` (+ its metadata sidecar if present) and writes the SVG
/// to `out_path`. Missing sidecars fall back to the file stem as the title.
pub fn plot_table(csv_path: &Path, kind: PlotKind, out_path: &Path) -> Result<()> {
    let table = read_table(csv_path)?;
    let mut meta = match read_metadata(csv_path) {
        Ok(m) => m,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::NotFound => serde_json::Value::Null,
        Err(e) => return Err(e),
    };
    if meta_str(&meta, "title").is_none() {
        let stem = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        if !meta.is_object() {
            meta = serde_json::json!({});
        }
        meta.as_object_mut()
            .expect("just ensured object")
            .insert("title".into(), serde_json::Value::String(stem));
    }
    let svg = render(&table, &meta, kind)?;
    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out_path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{fmt_f64, write_table};
    use serde_json::json;

    fn heat_table(n: usize) -> Table {
        let mut cols = vec!["family".to_string()];
        cols.extend((0..n).map(|i| format!("f{i}")));
        let mut t = Table::new(cols);
        for i in 0..n {
            let mut row = vec![format!("f{i}")];
            row.extend((0..n).map(|j| fmt_f64((i + j) as f64 / (2 * n) as f64)));
            t.push_row(row).unwrap();
        }
        t
    }

    #[test]
    fn every_kind_renders_and_is_byte_deterministic() {
        let heat = heat_table(4);

        let mut lines = Table::new(vec!["family", "n", "t1", "t5", "t30"]);
        lines
            .push_row(vec!["stripe2", "100", "0.5", "0.55", "0.97"])
            .unwrap();
        lines.push_row(vec!["stripe10", "100", "0.52", "0.96", "0.99"]).unwrap();

        let mut hist = Table::new(vec!["bin_lo", "bin_hi", "correct", "incorrect"]);
        hist.push_row(vec!["-1", "0", "3", "1"]).unwrap();
        hist.push_row(vec!["0", "1", "17", "2"]).unwrap();

        let mut violin = Table::new(vec!["bin", "value"]);
        for (b, v) in [("sym", 0.1), ("sym", 0.2), ("AC", 0.9), ("AC", 0.8), ("AC", 0.85)] {
            violin.push_row(vec![b.to_string(), fmt_f64(v)]).unwrap();
        }

        for (table, kind) in [
            (&heat, PlotKind::Heatmap),
            (&lines, PlotKind::Lines),
            (&hist, PlotKind::Histogram),
            (&violin, PlotKind::Violin),
        ] {
            let meta = json!({"title": "test", "x_label": "x", "y_label": "y"});
            let a = render(table, &meta, kind).unwrap();
            let b = render(table, &meta, kind).unwrap();
            assert_eq!(a, b, "{kind} must be byte-deterministic");
            assert!(a.starts_with("<?xml"), "{kind} must be a standalone document");
            assert!(a.contains("</svg>"), "{kind} must be well-formed");
            assert!(a.contains("test"), "{kind} must carry the title");
        }
    }

    #[test]
    fn schema_mismatches_are_rejected() {
        let heat = heat_table(3);
        // Heatmap fed to a renderer wanting a different schema and vice versa.
        assert!(render_histogram(&heat, &json!({})).is_err());
        assert!(render_violin(&heat, &json!({})).is_err());

        let mut not_square = Table::new(vec!["family", "a", "b"]);
        not_square.push_row(vec!["x", "0.1", "0.2"]).unwrap();
        not_square.push_row(vec!["y", "0.3", "0.4"]).unwrap();
        not_square.push_row(vec!["z", "0.5", "0.6"]).unwrap();
        assert!(render_heatmap(&not_square, &json!({})).is_err(), "3 rows × 2 value columns");

        let mut bad_cell = Table::new(vec!["family", "a", "b"]);
        bad_cell.push_row(vec!["x", "0.1", "0.2"]).unwrap();
        bad_cell.push_row(vec!["y", "not_a_number", "0.4"]).unwrap();
        assert!(render_heatmap(&bad_cell, &json!({})).is_err(), "non-numeric cell");

        let mut lines_no_x = Table::new(vec!["family", "accuracy"]);
        lines_no_x.push_row(vec!["a", "0.5"]).unwrap();
        assert!(render_lines(&lines_no_x, &json!({})).is_err(), "column without numeric suffix");

        let mut zero_width = Table::new(vec!["bin_lo", "bin_hi", "correct", "incorrect"]);
        zero_width.push_row(vec!["0", "0", "1", "1"]).unwrap();
        assert!(render_histogram(&zero_width, &json!({})).is_err());
    }

    #[test]
    fn heatmap_draws_every_cell_and_the_family_labels() {
        let svg = render_heatmap(&heat_table(16), &json!({"title": "rdm"})).unwrap();
        let rects = svg.matches("<rect").count();
        // 16×16 cells + 64 legend slabs + background.
        assert_eq!(rects, 256 + 64 + 1);
        assert!(svg.contains(">f0<") && svg.contains(">f15<"));
    }

    #[test]
    fn lines_emits_one_polyline_per_series() {
        let mut t = Table::new(vec!["family", "t2", "t4"]);
        t.push_row(vec!["a", "0.5", "0.9"]).unwrap();
        t.push_row(vec!["b", "0.6", "0.7"]).unwrap();
        t.push_row(vec!["c", "0.4", "0.5"]).unwrap();
        let svg = render_lines(&t, &json!({})).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("<circle").count(), 6);
    }

    #[test]
    fn plot_table_round_trips_from_disk_with_and_without_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("grid.csv");
        let mut t = Table::new(vec!["family", "t1", "t3"]);
        t.push_row(vec!["s", "0.5", "0.8"]).unwrap();
        write_table(&csv, &t, &json!({"title": "sweep grid"})).unwrap();

        let out = dir.path().join("grid.svg");
        plot_table(&csv, PlotKind::Lines, &out).unwrap();
        let svg = std::fs::read_to_string(&out).unwrap();
        assert!(svg.contains("sweep grid"));

        // No sidecar → file stem becomes the title.
        std::fs::remove_file(crate::table::meta_path(&csv)).unwrap();
        plot_table(&csv, PlotKind::Lines, &out).unwrap();
        let svg = std::fs::read_to_string(&out).unwrap();
        assert!(svg.contains(">grid<"));
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in PlotKind::ALL {
            assert_eq!(kind.name().parse::<PlotKind>().unwrap(), kind);
        }
        assert!("scatter".parse::<PlotKind>().is_err());
    }
}

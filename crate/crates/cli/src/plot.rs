//! Log-log convergence plots of `exploit_avg` against `episode`.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::CliError;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 220.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// One (game, algo) curve: per episode, the values of every seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub game: String,
    pub algo: String,
    pub points: BTreeMap<u64, Vec<f64>>,
}

impl Series {
    pub fn label(&self) -> String {
        format!("{} / {}", self.game, self.algo)
    }

    /// (log10 episode, log10 mean, log10 min, log10 max) on plottable points.
    fn summary(&self) -> Vec<(f64, f64, f64, f64)> {
        self.points
            .iter()
            .filter(|(&e, _)| e > 0)
            .filter_map(|(&e, vs)| {
                let vs: Vec<f64> = vs.iter().copied().filter(|v| v.is_finite() && *v > 0.0).collect();
                if vs.is_empty() {
                    return None;
                }
                let mean = vs.iter().sum::<f64>() / vs.len() as f64;
                let lo = vs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Some(((e as f64).log10(), mean.log10(), lo.log10(), hi.log10()))
            })
            .collect()
    }
}

fn malformed(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("malformed CSV {path}: {msg}"))
}

pub fn read_series(paths: &[String]) -> Result<Vec<Series>, CliError> {
    let mut out: Vec<Series> = Vec::new();
    for path in paths {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| malformed(path, e))?;
        let headers = rdr.headers().map_err(|e| malformed(path, e))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| malformed(path, format!("missing column {name:?}")))
        };
        let (g, a, e, v) = (col("game")?, col("algo")?, col("episode")?, col("exploit_avg")?);
        for (i, row) in rdr.records().enumerate() {
            let row = row.map_err(|err| malformed(path, err))?;
            let field = |k: usize| row.get(k).ok_or_else(|| malformed(path, format!("row {} is short", i + 2)));
            let episode: u64 = field(e)?
                .parse()
                .map_err(|_| malformed(path, format!("row {}: bad episode", i + 2)))?;
            let value: f64 = field(v)?
                .parse()
                .map_err(|_| malformed(path, format!("row {}: bad exploit_avg", i + 2)))?;
            let (game, algo) = (field(g)?, field(a)?);
            let idx = match out.iter().position(|s| s.game == game && s.algo == algo) {
                Some(k) => k,
                None => {
                    out.push(Series {
                        game: game.to_string(),
                        algo: algo.to_string(),
                        points: BTreeMap::new(),
                    });
                    out.len() - 1
                }
            };
            out[idx].points.entry(episode).or_default().push(value);
        }
    }
    Ok(out)
}

/// Axis ranges in log10 units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let m = 0.05 * (hi - lo);
        (lo - m, hi + m)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Data extent with 5% margins on each side.
pub fn frame(summaries: &[Vec<(f64, f64, f64, f64)>]) -> Option<Frame> {
    let pts = summaries.iter().flatten();
    let mut x = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y = (f64::INFINITY, f64::NEG_INFINITY);
    for &(lx, _, lo, hi) in pts {
        x = (x.0.min(lx), x.1.max(lx));
        y = (y.0.min(lo), y.1.max(hi));
    }
    if !x.0.is_finite() {
        return None;
    }
    Some(Frame {
        x: padded(x.0, x.1),
        y: padded(y.0, y.1),
    })
}

impl Frame {
    fn px(&self, lx: f64) -> f64 {
        LEFT + (lx - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, ly: f64) -> f64 {
        HEIGHT - BOTTOM - (ly - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn ticks(range: (f64, f64)) -> Vec<f64> {
    let t: Vec<f64> = (range.0.ceil() as i64..=range.1.floor() as i64).map(|k| k as f64).collect();
    if t.is_empty() {
        vec![range.0, range.1]
    } else {
        t
    }
}

fn tick_label(l: f64) -> String {
    if (l - l.round()).abs() < 1e-9 {
        format!("1e{}", l.round() as i64)
    } else {
        format!("{:.3}", 10f64.powf(l))
    }
}

/// Renders the plot. Series without a plottable point are dropped and
/// named in the returned warnings.
pub fn render_svg(series: &[Series]) -> (String, Vec<String>) {
    let mut warnings = Vec::new();
    let mut kept = Vec::new();
    for s in series {
        let summary = s.summary();
        if summary.is_empty() {
            warnings.push(format!("skipping empty series {}", s.label()));
        } else {
            kept.push((s, summary));
        }
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let summaries: Vec<_> = kept.iter().map(|(_, s)| s.clone()).collect();
    if let Some(fr) = frame(&summaries) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            svg,
            r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for t in ticks(fr.x) {
            let x = fr.px(t);
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
                y0 + 5.0,
                y0 + 18.0,
                tick_label(t)
            );
        }
        for t in ticks(fr.y) {
            let y = fr.py(t);
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">episodes</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 10.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">exploitability of the average profile</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0
        );
        for (i, (s, summary)) in kept.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            if summary.iter().any(|p| p.3 > p.2) {
                let upper = summary.iter().map(|p| format!("{:.2},{:.2}", fr.px(p.0), fr.py(p.3)));
                let lower = summary.iter().rev().map(|p| format!("{:.2},{:.2}", fr.px(p.0), fr.py(p.2)));
                let pts: Vec<String> = upper.chain(lower).collect();
                let _ = writeln!(
                    svg,
                    r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                    pts.join(" ")
                );
            }
            let pts: Vec<String> = summary.iter().map(|p| format!("{:.2},{:.2}", fr.px(p.0), fr.py(p.1))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                x1 + 10.0,
                x1 + 30.0,
                x1 + 35.0,
                ly + 4.0,
                escape(&s.label())
            );
        }
    }
    svg.push_str("</svg>\n");
    (svg, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(points: &[(u64, f64)]) -> Series {
        let mut map = BTreeMap::new();
        for &(e, v) in points {
            map.entry(e).or_insert_with(Vec::new).push(v);
        }
        Series {
            game: "kuhn".into(),
            algo: "tweaked".into(),
            points: map,
        }
    }

    #[test]
    fn frame_has_five_percent_margins() {
        let s = series(&[(10, 1.0), (1000, 0.01)]);
        let fr = frame(&[s.summary()]).unwrap();
        assert!((fr.x.0 - 0.9).abs() < 1e-12 && (fr.x.1 - 3.1).abs() < 1e-12);
        assert!((fr.y.0 + 2.1).abs() < 1e-12 && (fr.y.1 - 0.1).abs() < 1e-12);
        let span = WIDTH - LEFT - RIGHT;
        assert!((fr.px(1.0) - (LEFT + span * 0.1 / 2.2)).abs() < 1e-9);
    }

    #[test]
    fn one_series_one_polyline() {
        let (svg, warnings) = render_svg(&[series(&[(10, 0.5), (100, 0.1)])]);
        assert!(warnings.is_empty());
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<polygon").count(), 0);
    }

    #[test]
    fn empty_series_are_dropped() {
        let (svg, warnings) = render_svg(&[series(&[(10, f64::NAN)]), series(&[(10, 0.5), (20, 0.4)])]);
        assert_eq!(warnings.len(), 1);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn seeds_become_a_band() {
        let (svg, _) = render_svg(&[series(&[(10, 0.5), (10, 0.3), (100, 0.1), (100, 0.05)])]);
        assert_eq!(svg.matches("<polygon").count(), 1);
    }
}

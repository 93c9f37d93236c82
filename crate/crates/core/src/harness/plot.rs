use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::MetricRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    Return,
}

impl Metric {
    fn of(self, r: &MetricRow) -> f64 {
        match self {
            Metric::Rmse => r.rmse,
            Metric::Return => r.ret,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Rmse => "RMSE",
            Metric::Return => "return",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmse" => Ok(Metric::Rmse),
            "return" => Ok(Metric::Return),
            _ => Err(Error::UnknownName { kind: "metric", name: s.to_string() }),
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

struct Point {
    episode: usize,
    mean: f64,
    lo: f64,
    hi: f64,
}

fn series_key(r: &MetricRow) -> String {
    format!(
        "{} {} av={} am={} g={} l={} e={}",
        r.algo, r.env, r.alpha_v, r.alpha_m, r.gamma, r.lambda, r.eta
    )
}

fn aggregate(rows: &[MetricRow], metric: Metric) -> BTreeMap<String, Vec<Point>> {
    let mut groups: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        let x = metric.of(r);
        if x.is_finite() {
            groups.entry(series_key(r)).or_default().entry(r.episode).or_default().push(x);
        }
    }
    groups
        .into_iter()
        .map(|(k, by_ep)| {
            let pts = by_ep
                .into_iter()
                .map(|(episode, mut xs)| {
                    xs.sort_by(f64::total_cmp);
                    Point {
                        episode,
                        mean: xs.iter().sum::<f64>() / xs.len() as f64,
                        lo: xs[0],
                        hi: xs[xs.len() - 1],
                    }
                })
                .collect();
            (k, pts)
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Mean learning curve per hyperparameter setting, with a min/max band
/// across seeds. Diagnostic (non-finite) values are skipped. Output
/// depends only on the multiset of rows, not their order.
pub fn emit_learning_curves(rows: &[MetricRow], metric: Metric) -> Result<String> {
    let series = aggregate(rows, metric);
    if series.is_empty() {
        return Err(Error::InvalidConfig("no finite values to plot".into()));
    }
    let all = series.values().flatten();
    let (mut x_max, mut y_min, mut y_max) = (1usize, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        x_max = x_max.max(p.episode);
        y_min = y_min.min(p.lo);
        y_max = y_max.max(p.hi);
    }
    if metric == Metric::Rmse {
        y_min = y_min.min(0.0);
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |e: usize| LEFT + pw * e as f64 / x_max as f64;
    let sy = |y: f64| TOP + ph * (1.0 - (y - y_min) / (y_max - y_min));

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    writeln!(
        svg,
        "<path d=\"M{LEFT:.2},{TOP:.2} V{:.2} H{:.2}\" fill=\"none\" stroke=\"black\"/>",
        TOP + ph,
        LEFT + pw
    )
    .unwrap();
    for k in 0..=4 {
        let y = y_min + (y_max - y_min) * k as f64 / 4.0;
        writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{y:.3}</text>", LEFT - 6.0, sy(y) + 4.0).unwrap();
        let e = (x_max as f64 * k as f64 / 4.0).round() as usize;
        writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{e}</text>", sx(e), TOP + ph + 16.0).unwrap();
    }
    writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">episode</text>", LEFT + pw / 2.0, HEIGHT - 10.0).unwrap();
    writeln!(
        svg,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        metric.label()
    )
    .unwrap();

    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut band = String::new();
        for p in pts {
            write!(band, "{:.2},{:.2} ", sx(p.episode), sy(p.hi)).unwrap();
        }
        for p in pts.iter().rev() {
            write!(band, "{:.2},{:.2} ", sx(p.episode), sy(p.lo)).unwrap();
        }
        writeln!(svg, "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"none\"/>", band.trim_end()).unwrap();
        let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.episode), sy(p.mean))).collect();
        writeln!(svg, "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>", line.join(" ")).unwrap();

        let ly = TOP + 14.0 * k as f64 + 6.0;
        let lx = LEFT + pw + 12.0;
        writeln!(svg, "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>", lx + 16.0).unwrap();
        writeln!(svg, "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>", lx + 20.0, ly + 4.0, escape(name)).unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

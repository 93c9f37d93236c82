use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::episode::{tail_horizon, EPISODE_TAIL};
use crate::error::{Error, Result};
use crate::oracle::{expected_trace, successor_matrix, true_values, visit_probabilities, SrConvention};

use super::EnvSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleQuantity {
    Value,
    SrInclusive,
    SrStrict,
    ZTrace,
    Visits,
}

impl FromStr for OracleQuantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "value" => Ok(OracleQuantity::Value),
            "sr-inclusive" => Ok(OracleQuantity::SrInclusive),
            "sr-strict" => Ok(OracleQuantity::SrStrict),
            "ztrace" => Ok(OracleQuantity::ZTrace),
            "visits" => Ok(OracleQuantity::Visits),
            _ => Err(Error::UnknownName { kind: "oracle quantity", name: s.to_string() }),
        }
    }
}

fn vector_csv(name: &str, xs: impl Iterator<Item = f64>) -> String {
    let mut out = format!("state,{name}\n");
    for (s, x) in xs.enumerate() {
        writeln!(out, "{s},{x}").unwrap();
    }
    out
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::from("state");
    for j in 0..m.ncols() {
        write!(out, ",{j}").unwrap();
    }
    out.push('\n');
    for i in 0..m.nrows() {
        write!(out, "{i}").unwrap();
        for j in 0..m.ncols() {
            write!(out, ",{}", m[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Oracle quantity as CSV with a header row and one labelled row per state.
///
/// Traces and visits are summed out to the episode length guard.
/// `kappa` is the discount: `γ` for values, `κ` for the SR and traces.
/// Matrix exports put state `i` in row `i` and column `j` in column `j`;
/// for `ztrace` column `j` is `z(j)` and never-visited columns are `NaN`.
pub fn export_oracle(env: EnvSpec, what: OracleQuantity, kappa: f64) -> Result<String> {
    let mdp = env.build()?;
    let horizon = tail_horizon(&mdp, EPISODE_TAIL);
    Ok(match what {
        OracleQuantity::Value => vector_csv("value", true_values(&mdp, kappa)?.as_slice().iter().copied()),
        OracleQuantity::Visits => vector_csv("visits", visit_probabilities(&mdp, horizon).iter().copied()),
        OracleQuantity::SrInclusive => matrix_csv(&successor_matrix(&mdp, kappa, SrConvention::Inclusive)?.m),
        OracleQuantity::SrStrict => matrix_csv(&successor_matrix(&mdp, kappa, SrConvention::Strict)?.m),
        OracleQuantity::ZTrace => {
            let z = expected_trace(&mdp, kappa, horizon);
            let mut m = z.matrix().clone();
            for j in 0..m.ncols() {
                if !z.is_defined(crate::types::StateId(j)) {
                    m.column_mut(j).fill(f64::NAN);
                }
            }
            matrix_csv(&m)
        }
    })
}

/// Square-grid rendering of a per-state vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Heatmap {
    pub svg: String,
    pub csv: String,
}

const CELL: usize = 40;

/// Lays out `values` row-major on a square grid. Cells are shaded by
/// `|x| / max|x|`; a zero vector renders as a blank grid.
pub fn export_heatmap(values: &[f64]) -> Result<Heatmap> {
    let side = (values.len() as f64).sqrt().round() as usize;
    if side == 0 || side * side != values.len() {
        return Err(Error::NotSquare(values.len()));
    }
    let scale = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut csv = String::new();
    for row in values.chunks(side) {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        csv.push_str(&line.join(","));
        csv.push('\n');
    }

    let size = side * CELL;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n"
    );
    for (k, &x) in values.iter().enumerate() {
        let (r, c) = (k / side, k % side);
        let opacity = if scale > 0.0 { x.abs() / scale } else { 0.0 };
        let fill = if x < 0.0 { "#b2182b" } else { "#2166ac" };
        writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{fill}\" fill-opacity=\"{opacity:.4}\" stroke=\"#999999\" stroke-width=\"1\"/>",
            c * CELL,
            r * CELL
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(Heatmap { svg, csv })
}

use crate::error::{Error, Result};

use super::MetricRow;

pub const CSV_HEADER: &str = "algo,env,seed,episode,rmse,return,alpha_v,alpha_m,gamma,lambda,eta";

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("CSV: {e}"))
}

/// Serializes rows under [`CSV_HEADER`] with LF line endings. Floats use
/// shortest round-trip formatting, so output is identical on every platform.
pub fn to_csv(rows: &[MetricRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("writing to memory");
    }
    let body = String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV output is UTF-8");
    format!("{CSV_HEADER}\n{body}")
}

pub fn parse_csv(text: &str) -> Result<Vec<MetricRow>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_error)?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::InvalidConfig(format!("unexpected CSV header `{header}`")));
    }
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

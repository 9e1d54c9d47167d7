//! Row-major JSON form of `DMatrix`: `{"rows": r, "cols": c, "data": [..]}`.

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct RowMajor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let data = (0..m.nrows()).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect();
    RowMajor { rows: m.nrows(), cols: m.ncols(), data }.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
    let r = RowMajor::deserialize(d)?;
    if r.rows * r.cols != r.data.len() {
        return Err(serde::de::Error::custom(format!(
            "{}x{} matrix needs {} entries, got {}",
            r.rows,
            r.cols,
            r.rows * r.cols,
            r.data.len()
        )));
    }
    Ok(DMatrix::from_row_slice(r.rows, r.cols, &r.data))
}

//! JSON layouts for nalgebra matrices: row-major nested arrays of [re, im].

use serde::ser::{SerializeSeq, Serializer};

use crate::models::{CMatrix, CVector};

pub fn ser_cmatrix<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<[f64; 2]> = (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

pub fn ser_opt_cmatrix<S: Serializer>(m: &Option<CMatrix>, s: S) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => ser_cmatrix(m, s),
        None => s.serialize_none(),
    }
}

pub fn ser_cvector<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v.iter() {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

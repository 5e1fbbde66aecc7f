//! JSON encoding of complex matrices and vectors.
//!
//! Matrices are row-major lists of rows; every entry is an `[re, im]` pair.
//! Vectors are flat lists of `[re, im]` pairs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{CMat, CVec, C64};

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| pair(&m[(i, j)])).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(CMat::from_fn(nrows, ncols, |i, j| {
            C64::new(rows[i][j][0], rows[i][j][1])
        }))
    }
}

pub mod cvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<[f64; 2]> = v.iter().map(pair).collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        let entries: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(CVec::from_iterator(
            entries.len(),
            entries.iter().map(|e| C64::new(e[0], e[1])),
        ))
    }
}

pub mod cmat_list {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Wrapped(#[serde(with = "super::cmat")] CMat);

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> Result<S::Ok, S::Error> {
        let wrapped: Vec<Wrapped> = ms.iter().cloned().map(Wrapped).collect();
        wrapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMat>, D::Error> {
        let wrapped: Vec<Wrapped> = Vec::deserialize(d)?;
        Ok(wrapped.into_iter().map(|w| w.0).collect())
    }
}

/// Pretty-printed JSON with a trailing newline; field order follows struct
/// declaration order, so output is byte-stable.
pub fn to_pretty<T: Serialize>(value: &T) -> crate::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Holder {
        #[serde(with = "cmat")]
        m: CMat,
    }

    #[test]
    fn matrix_layout_is_row_major_pairs() {
        let h = Holder {
            m: CMat::from_row_slice(1, 2, &[C64::new(1.0, 2.0), C64::new(3.0, -4.0)]),
        };
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, r#"{"m":[[[1.0,2.0],[3.0,-4.0]]]}"#);
        let back: Holder = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
    }
}

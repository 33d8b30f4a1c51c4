//! Action-distance matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TRIANGLE_SLACK: f64 = 1e-12;

/// Named cost matrix constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostPreset {
    /// 0 on the diagonal, 1 elsewhere.
    ZeroOne,
    /// Actions (left, right, pickup): 1 between left and right, 4 otherwise.
    GridWorld,
    /// Taxi actions: 1 inside the movement set, 1 between pickup and dropoff, 4 across.
    TaxiControl,
    /// `|i - j|` on action indices.
    L1Index,
}

impl CostPreset {
    pub const ALL: [CostPreset; 4] = [
        CostPreset::ZeroOne,
        CostPreset::GridWorld,
        CostPreset::TaxiControl,
        CostPreset::L1Index,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostPreset::ZeroOne => "zero-one",
            CostPreset::GridWorld => "grid-world",
            CostPreset::TaxiControl => "taxi-control",
            CostPreset::L1Index => "l1-index",
        }
    }

    pub fn build(self, n: usize) -> Result<CostMatrix> {
        let fixed = match self {
            CostPreset::GridWorld => Some(3),
            CostPreset::TaxiControl => Some(6),
            _ => None,
        };
        if n == 0 || fixed.is_some_and(|m| m != n) {
            return Err(Error::PresetSize {
                preset: self.name(),
                n,
            });
        }
        let entry = |i: usize, j: usize| -> f64 {
            if i == j {
                return 0.0;
            }
            match self {
                CostPreset::ZeroOne => 1.0,
                CostPreset::GridWorld => {
                    if i + j == 1 {
                        1.0
                    } else {
                        4.0
                    }
                }
                CostPreset::TaxiControl => {
                    if (i < 4) == (j < 4) {
                        1.0
                    } else {
                        4.0
                    }
                }
                CostPreset::L1Index => i.abs_diff(j) as f64,
            }
        };
        let d = (0..n * n).map(|k| entry(k / n, k % n)).collect();
        let mut m = CostMatrix::from_flat(n, d, true)?;
        m.preset = Some(self);
        Ok(m)
    }
}

impl fmt::Display for CostPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CostPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Symmetric nonnegative cost matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostMatrixRepr", into = "CostMatrixRepr")]
pub struct CostMatrix {
    n: usize,
    d: Vec<f64>,
    inf_norm: f64,
    preset: Option<CostPreset>,
}

impl CostMatrix {
    /// Validates a nested-array matrix, including the triangle inequality.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_triangle_check(rows, true)
    }

    pub fn with_triangle_check(rows: Vec<Vec<f64>>, check_triangle: bool) -> Result<Self> {
        let n = rows.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    row,
                    len: r.len(),
                });
            }
        }
        Self::from_flat(n, rows.into_iter().flatten().collect(), check_triangle)
    }

    fn from_flat(n: usize, d: Vec<f64>, check_triangle: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyVector);
        }
        let at = |i: usize, j: usize| d[i * n + j];
        for i in 0..n {
            for j in 0..n {
                let v = at(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFinite("cost matrix"));
                }
                if v < 0.0 {
                    return Err(Error::NegativeCost { i, j, value: v });
                }
            }
        }
        for i in 0..n {
            if at(i, i) != 0.0 {
                return Err(Error::NonzeroDiagonal { i });
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if at(i, j) != at(j, i) {
                    return Err(Error::Asymmetric { i, j });
                }
            }
        }
        if check_triangle {
            for i in 0..n {
                for j in i + 1..n {
                    for k in 0..n {
                        if at(i, j) > at(i, k) + at(k, j) + TRIANGLE_SLACK {
                            return Err(Error::TriangleViolation { i, j, k });
                        }
                    }
                }
            }
        }
        let inf_norm = d.iter().fold(0.0f64, |m, &v| m.max(v));
        Ok(Self {
            n,
            d,
            inf_norm,
            preset: None,
        })
    }

    pub fn zero_one(n: usize) -> Self {
        CostPreset::ZeroOne.build(n).expect("zero-one is defined for n >= 1")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    /// Largest entry.
    pub fn inf_norm(&self) -> f64 {
        self.inf_norm
    }

    pub fn preset(&self) -> Option<CostPreset> {
        self.preset
    }

    /// True when every off-diagonal entry equals one, whatever the provenance.
    pub fn is_zero_one(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == if i == j { 0.0 } else { 1.0 }))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.d.chunks(self.n).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct CostMatrixRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    preset: Option<CostPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing)]
    no_triangle_check: bool,
}

impl TryFrom<CostMatrixRepr> for CostMatrix {
    type Error = Error;

    fn try_from(r: CostMatrixRepr) -> Result<Self> {
        match (r.d, r.preset) {
            (Some(rows), preset) => {
                let mut m = CostMatrix::with_triangle_check(rows, !r.no_triangle_check)?;
                if let Some(p) = preset {
                    if p.build(m.n).ok().as_ref().map(|b| &b.d) == Some(&m.d) {
                        m.preset = Some(p);
                    }
                }
                Ok(m)
            }
            (None, Some(p)) => {
                let n = r.n.ok_or_else(|| {
                    Error::InvalidConfig(format!("preset {p} needs an action count \"n\""))
                })?;
                p.build(n)
            }
            (None, None) => Err(Error::InvalidConfig(
                "cost matrix needs \"d\" or \"preset\"".into(),
            )),
        }
    }
}

impl From<CostMatrix> for CostMatrixRepr {
    fn from(m: CostMatrix) -> Self {
        Self {
            preset: m.preset,
            n: None,
            d: Some(m.rows()),
            no_triangle_check: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_is_valid() {
        let m = CostMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(m.inf_norm(), 1.0);
    }

    #[test]
    fn rejects_asymmetric() {
        let e = CostMatrix::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap_err();
        assert_eq!(e, Error::Asymmetric { i: 0, j: 1 });
    }

    #[test]
    fn rejects_triangle_violation() {
        let rows = vec![
            vec![0.0, 5.0, 1.0],
            vec![5.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        let e = CostMatrix::new(rows.clone()).unwrap_err();
        assert_eq!(e, Error::TriangleViolation { i: 0, j: 1, k: 2 });
        assert!(CostMatrix::with_triangle_check(rows, false).is_ok());
    }

    #[test]
    fn rejects_diagonal_and_negative() {
        assert_eq!(
            CostMatrix::new(vec![vec![1.0]]).unwrap_err(),
            Error::NonzeroDiagonal { i: 0 }
        );
        assert!(matches!(
            CostMatrix::new(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(Error::NegativeCost { .. })
        ));
        assert!(matches!(
            CostMatrix::new(vec![vec![0.0, 1.0], vec![1.0]]),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn presets() {
        let g = CostPreset::GridWorld.build(3).unwrap();
        assert_eq!(g.get(0, 1), 1.0);
        assert_eq!(g.get(0, 2), 4.0);
        assert_eq!(g.get(2, 1), 4.0);
        let t = CostPreset::TaxiControl.build(6).unwrap();
        assert_eq!(t.get(0, 3), 1.0);
        assert_eq!(t.get(4, 5), 1.0);
        assert_eq!(t.get(3, 4), 4.0);
        assert_eq!(CostPreset::L1Index.build(4).unwrap().get(0, 3), 3.0);
        assert!(CostPreset::ZeroOne.build(5).unwrap().is_zero_one());
        assert!(CostPreset::GridWorld.build(4).is_err());
        assert_eq!("taxi-control".parse::<CostPreset>().unwrap(), CostPreset::TaxiControl);
    }

    #[test]
    fn serde_round_trip() {
        let m = CostPreset::GridWorld.build(3).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"preset\":\"grid-world\""));
        let back: CostMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        let from_preset: CostMatrix =
            serde_json::from_str(r#"{"preset":"zero-one","n":3}"#).unwrap();
        assert!(from_preset.is_zero_one());
    }
}

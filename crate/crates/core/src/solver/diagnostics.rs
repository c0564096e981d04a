use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sample of the monitored quantities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    /// `|U|_{H^{s+1}}`
    pub u_norm: f64,
    /// `|d_t U|_{H^s}`
    pub v_norm: f64,
    /// `|G|_{H^s}`
    pub g_norm: f64,
    /// `|d_t G|_{H^{s-1}}`
    pub gt_norm: f64,
    /// `max |det F - 1|`
    pub det_drift: f64,
    pub pressure_residual: f64,
    pub pressure_iterations: usize,
    /// `max(|G - grad U|, |d_t G - grad V|)`, relative
    pub compatibility: f64,
    /// `|d_t G|_inf + |grad G|_inf`
    pub df_inf: f64,
    /// `|d_t V|_inf`
    pub dv_inf: f64,
    /// `(int_0^t |dF|_inf^q)^{1/q}` so far
    pub strichartz_df: f64,
    /// `(int_0^t |dv|_inf^q)^{1/q}` so far
    pub strichartz_dv: f64,
}

impl DiagnosticsRow {
    /// Column names, in [`values`](Self::values) order.
    pub const COLUMNS: [&'static str; 13] = [
        "t",
        "u_hs1",
        "v_hs",
        "g_hs",
        "gt_hs_minus1",
        "det_drift",
        "pressure_residual",
        "pressure_iterations",
        "compatibility",
        "df_inf",
        "dv_inf",
        "strichartz_df",
        "strichartz_dv",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.u_norm,
            self.v_norm,
            self.g_norm,
            self.gt_norm,
            self.det_drift,
            self.pressure_residual,
            self.pressure_iterations as f64,
            self.compatibility,
            self.df_inf,
            self.dv_inf,
            self.strichartz_df,
            self.strichartz_dv,
        ]
    }

    /// Inverse of [`values`](Self::values).
    pub fn from_values(v: &[f64; 13]) -> Self {
        Self {
            t: v[0],
            u_norm: v[1],
            v_norm: v[2],
            g_norm: v[3],
            gt_norm: v[4],
            det_drift: v[5],
            pressure_residual: v[6],
            pressure_iterations: v[7] as usize,
            compatibility: v[8],
            df_inf: v[9],
            dv_inf: v[10],
            strichartz_df: v[11],
            strichartz_dv: v[12],
        }
    }
}

/// Time series of a run plus the Picard contraction factors, if any.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub dim: usize,
    pub s: f64,
    /// Strichartz time exponent
    pub q: f64,
    pub rows: Vec<DiagnosticsRow>,
    pub picard_factors: Vec<f64>,
}

impl DiagnosticsRecord {
    pub fn new(dim: usize, s: f64) -> Self {
        Self { dim, s, q: strichartz_exponent(dim), rows: Vec::new(), picard_factors: Vec::new() }
    }

    /// Appends a row; times must increase strictly in the direction of the
    /// run and every entry must be finite.
    pub fn push(&mut self, row: DiagnosticsRow) -> Result<()> {
        if row.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: row.t });
        }
        if let [.., a, b] = self.rows.as_slice() {
            let dir = b.t - a.t;
            if (row.t - b.t) * dir <= 0.0 {
                return Err(Error::Parameter(format!("diagnostics time {} is not monotone after {}", row.t, b.t)));
            }
        } else if let Some(last) = self.rows.last() {
            if row.t == last.t {
                return Err(Error::Parameter(format!("repeated diagnostics time {}", row.t)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&DiagnosticsRow> {
        self.rows.last()
    }
}

/// Time exponent of the Strichartz norms: 4 in two dimensions, 2 in three.
pub fn strichartz_exponent(dim: usize) -> f64 {
    if dim == 2 {
        4.0
    } else {
        2.0
    }
}

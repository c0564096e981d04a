use crate::error::{Error, Result};

/// Scaling-critical exponent `s_c = n/2` and the upper regularity `s_0(n)`
/// of the rough-data theorem.
pub fn critical_exponents(n: usize) -> Result<(f64, f64)> {
    match n {
        2 => Ok((1.0, 7.0 / 4.0)),
        3 => Ok((1.5, 2.0)),
        _ => Err(Error::Parameter(format!("dimension {n} not in {{2, 3}}"))),
    }
}

/// Which well-posedness regime a run claims.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TheoremMode {
    /// `(n+1)/2 < s <= s_0(n)`, general data on a short interval
    Rough,
    /// `s > s_0(n)`, general data on a short interval
    Smooth,
    /// `s > n/2` with data of size at most `eta`
    SmallData { eta: f64 },
}

/// Checks `s` against the regime.
pub fn validate_regularity(n: usize, s: f64, mode: TheoremMode) -> Result<()> {
    let (sc, s0) = critical_exponents(n)?;
    match mode {
        TheoremMode::Rough => {
            let lower = (n as f64 + 1.0) / 2.0;
            if !(s > lower && s <= s0) {
                let hint = if lower >= s0 { " (an empty range; use the smooth regime)" } else { "" };
                return Err(Error::Parameter(format!(
                    "s = {s}: the rough-data regime needs {lower} < s <= {s0} for n = {n}{hint}"
                )));
            }
        }
        TheoremMode::Smooth => {
            if !(s > s0) {
                return Err(Error::Parameter(format!("s = {s}: the smooth regime needs s > {s0} for n = {n}")));
            }
        }
        TheoremMode::SmallData { eta } => {
            if !(s > sc) {
                return Err(Error::Parameter(format!("s = {s}: the small-data regime needs s > {sc} for n = {n}")));
            }
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::Parameter(format!("eta = {eta} must be positive")));
            }
        }
    }
    Ok(())
}

/// Checks `theta in (1/2, 1)` and `epsilon in (0, 1 - theta]`.
pub fn validate_space_time(theta: f64, epsilon: f64) -> Result<()> {
    if !(theta > 0.5 && theta < 1.0) {
        return Err(Error::Parameter(format!("theta = {theta} must lie in (1/2, 1)")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0 - theta + 1e-12) {
        return Err(Error::Parameter(format!("epsilon = {epsilon} must lie in (0, 1 - theta] = (0, {}]", 1.0 - theta)));
    }
    Ok(())
}

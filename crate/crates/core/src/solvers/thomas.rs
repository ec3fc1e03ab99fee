use super::SolverError;

/// Forward elimination and back substitution for one tridiagonal line.
///
/// `lower[0]` and `upper[len - 1]` are ignored. `rhs` is overwritten with the
/// solution; `cprime` is scratch of at least `len` entries.
pub(crate) fn thomas_in_place(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    cprime: &mut [f64],
) -> Result<(), SolverError> {
    let len = rhs.len();
    if len == 0 {
        return Ok(());
    }
    let pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(SolverError::SingularLine { row: 0, len });
    }
    cprime[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for i in 1..len {
        let pivot = diag[i] - lower[i] * cprime[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(SolverError::SingularLine { row: i, len });
        }
        cprime[i] = if i + 1 < len { upper[i] / pivot } else { 0.0 };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..len - 1).rev() {
        rhs[i] -= cprime[i] * rhs[i + 1];
    }
    Ok(())
}

/// Solves the tridiagonal system with sub-diagonal `lower`, diagonal `diag`
/// and super-diagonal `upper`. A zero pivot is reported as
/// [`SolverError::SingularLine`] rather than masked.
pub fn thomas_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs_line: &[f64]) -> Result<Vec<f64>, SolverError> {
    let len = rhs_line.len();
    if len == 0 || diag.len() != len || lower.len() != len || upper.len() != len {
        return Err(SolverError::InvalidConfiguration(format!(
            "tridiagonal line needs matching non-empty bands, got lower={}, diag={}, upper={}, rhs={}",
            lower.len(),
            diag.len(),
            upper.len(),
            len
        )));
    }
    let mut x = rhs_line.to_vec();
    let mut scratch = vec![0.0; len];
    thomas_in_place(lower, diag, upper, &mut x, &mut scratch)?;
    Ok(x)
}

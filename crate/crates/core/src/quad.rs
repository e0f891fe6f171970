//! Adaptive Simpson quadrature over fallible integrands.

const MAX_DEPTH: u32 = 48;

/// `∫_a^b f` to absolute tolerance `tol` (Richardson-corrected Simpson).
///
/// Reversed limits give the negated integral. Intervals that hit the
/// recursion limit are accepted as they are.
pub fn adaptive_simpson<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, E> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(&mut f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn step<E>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, E> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Running integrals `∫_{xs[0]}^{xs[i]} f` on a monotone node list.
pub fn cumulative<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    xs: &[f64],
    tol: f64,
) -> Result<Vec<f64>, E> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            // Each piece gets a share of the budget so the total stays within tol.
            let share = tol / (xs.len().max(2) - 1) as f64;
            acc += adaptive_simpson(&mut f, xs[i - 1], x, share)?;
        }
        out.push(acc);
    }
    Ok(out)
}

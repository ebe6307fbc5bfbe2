//! Adaptive Gauss–Legendre quadrature.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const ORDER: usize = 10;

/// Deepest bisection level before giving up.
pub const MAX_LEVELS: u32 = 20;

fn rule() -> &'static ([f64; ORDER], [f64; ORDER]) {
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(legendre_rule::<ORDER>)
}

/// Nodes and weights on [-1, 1] by Newton iteration on `P_n`.
fn legendre_rule<const N: usize>() -> ([f64; N], [f64; N]) {
    let mut x = [0.0; N];
    let mut w = [0.0; N];
    let n = N as f64;
    for i in 0..N {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=N {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn fixed<F>(f: &mut F, a: f64, b: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (x, w) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        sum += wi * f(mid + half * xi)?;
    }
    Ok(sum * half)
}

struct Panel {
    lo: f64,
    hi: f64,
    left: f64,
    right: f64,
    err: f64,
    level: u32,
}

impl Panel {
    fn new<F>(f: &mut F, lo: f64, hi: f64, coarse: f64, level: u32) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let mid = 0.5 * (lo + hi);
        let left = fixed(f, lo, mid)?;
        let right = fixed(f, mid, hi)?;
        Ok(Self { lo, hi, left, right, err: (left + right - coarse).abs(), level })
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Globally adaptive: the panel with the largest error estimate (difference
/// between the whole-panel rule and the sum over its halves) is bisected
/// until the estimates sum to at most `tol`. Fails with
/// [`Error::QuadratureNoConvergence`] rather than returning a loose value
/// when a panel would need more than [`MAX_LEVELS`] bisections.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let whole = fixed(&mut f, a, b)?;
    let mut panels = vec![Panel::new(&mut f, a, b, whole, 0)?];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= tol {
            return Ok(panels.iter().map(|p| p.left + p.right).sum());
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        if p.level + 1 >= MAX_LEVELS || !p.err.is_finite() {
            return Err(Error::QuadratureNoConvergence { tol, levels: MAX_LEVELS });
        }
        let mid = 0.5 * (p.lo + p.hi);
        panels.push(Panel::new(&mut f, p.lo, mid, p.left, p.level + 1)?);
        panels.push(Panel::new(&mut f, mid, p.hi, p.right, p.level + 1)?);
    }
}

use crate::error::{Error, Result};

const MAX_ITER: usize = 10;

/// Principal branch `W0(y)` for `y >= 0`: the `x >= 0` with `x e^x = y`.
///
/// Halley iteration from `ln(1 + y)` for small arguments and the two-term
/// asymptotic `L1 - L2 + L2/L1` above 3.
pub fn lambert_w0(y: f64) -> Result<f64> {
    if !(y >= 0.0) || y.is_infinite() {
        return Err(Error::Domain(y));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut x = if y <= 3.0 {
        y.ln_1p()
    } else {
        let l1 = y.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..MAX_ITER {
        let ex = x.exp();
        let f = x * ex - y;
        let fp = ex * (x + 1.0);
        let step = f / (fp - (x + 2.0) * f / (2.0 * x + 2.0));
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1e-300) {
            break;
        }
    }
    Ok(x)
}

use crate::error::{invalid, Result};
use crate::signal_core::MimoSignal;
use crate::C64;

/// Data-aided carrier-phase recovery with one phase shared by all
/// tributaries (common LO).
///
/// `phi(n)` is the argument of `sum_m sum_k f_eq[m][k] conj(f_in[m][k])`
/// over a window of `window` samples centered on `n`, truncated at the
/// capture edges. Returns `f_eq * exp(-j phi)`.
pub fn phase_recovery(f_in: &MimoSignal, f_eq: &MimoSignal, window: usize) -> Result<MimoSignal> {
    f_in.check_same_shape(f_eq)?;
    if window == 0 {
        return Err(invalid("phase window must be at least 1"));
    }
    let n = f_in.len();
    let mut prefix = vec![C64::new(0.0, 0.0); n + 1];
    for k in 0..n {
        let mut s = C64::new(0.0, 0.0);
        for (e, r) in f_eq.tributaries().iter().zip(f_in.tributaries()) {
            s += e[k] * r[k].conj();
        }
        prefix[k + 1] = prefix[k] + s;
    }
    let back = window / 2;
    let rot: Vec<C64> = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(back);
            let hi = (k + window - back).min(n);
            let s = prefix[hi] - prefix[lo];
            if s == C64::new(0.0, 0.0) {
                C64::new(1.0, 0.0)
            } else {
                (s / s.norm()).conj()
            }
        })
        .collect();
    Ok(f_eq.map_tributaries(|t| t.iter().zip(&rot).map(|(v, r)| v * r).collect()))
}

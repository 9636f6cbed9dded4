//! Central finite-difference oracle for tape gradients.

use serde::Serialize;

use crate::autograd::params::{ParamId, ParamKind, ParamStore};
use crate::autograd::tape::{Tape, Var};
use crate::error::Result;

/// Step for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Lower bound on the denominator of the relative error, so that gradients
/// that are zero up to rounding compare on an absolute scale.
pub const DENOM_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, Default, Serialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// (parameter name, flat index, imaginary plane) of the worst entry.
    pub worst: Option<(String, usize, bool)>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOM_FLOOR)
}

/// Compares the tape gradient of `loss` against central differences over
/// every real and imaginary entry of `ids`.
pub fn check_params<F>(store: &mut ParamStore, ids: &[ParamId], h: f64, mut loss: F) -> Result<GradCheckReport>
where
    F: FnMut(&mut Tape, &ParamStore) -> Result<Var>,
{
    let mut tape = Tape::new();
    let l = loss(&mut tape, store)?;
    tape.backward_into(l, store)?;

    let mut eval = |store: &ParamStore| -> Result<f64> {
        let mut t = Tape::new();
        let v = loss(&mut t, store)?;
        t.scalar(v)
    };

    let mut report = GradCheckReport::default();
    for &id in ids {
        let p = store.get(id);
        let grad = p.grad().cloned().expect("backward_into sets every gradient");
        let n = p.value().len();
        let planes: &[bool] = match p.kind() {
            ParamKind::Complex => &[false, true],
            ParamKind::Real => &[false],
        };
        let name = p.name().to_string();
        for &imag in planes {
            let analytic = if imag { grad.g_i.data() } else { grad.g_r.data() };
            for i in 0..n {
                let orig = store.entry(id, i, imag);
                store.set_entry(id, i, imag, orig + h);
                let up = eval(store)?;
                store.set_entry(id, i, imag, orig - h);
                let down = eval(store)?;
                store.set_entry(id, i, imag, orig);
                let numeric = (up - down) / (2.0 * h);
                let rel = relative_error(analytic[i], numeric);
                let abs = (analytic[i] - numeric).abs();
                report.checked += 1;
                report.max_abs_error = report.max_abs_error.max(abs);
                if rel > report.max_rel_error || report.worst.is_none() {
                    report.max_rel_error = report.max_rel_error.max(rel);
                    report.worst = Some((name.clone(), i, imag));
                }
            }
        }
    }
    Ok(report)
}

use crate::error::{Error, Result};
use crate::param::ParamStore;
use crate::tape::{Tape, Var};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub passed: bool,
    pub worst: f64,
    /// `(parameter name, flat index)` of the worst coordinate.
    pub worst_at: Option<(String, usize)>,
    pub checked: usize,
}

/// `|a − n| / max(floor, |a| + |n|)`
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(floor)
}

/// Smallest denominator worth dividing by: a central difference of `f`
/// with step `eps` carries round-off of about `ε·|f|/eps`, so gradients
/// below that over `tol` cannot be resolved to relative `tol` at all.
pub fn resolution_floor(f: f64, eps: f64, tol: f64) -> f64 {
    (f64::EPSILON * f.abs() / (eps * tol)).max(1e-8)
}

fn eval<F>(store: &ParamStore, f: &F) -> Result<f64>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    let mut tape = Tape::new(store);
    let loss = f(&mut tape)?;
    let v = tape.value(loss);
    if v.len() != 1 {
        return Err(Error::Shape("gradient check needs a scalar function".into()));
    }
    let x = v.item();
    if !x.is_finite() {
        return Err(Error::Numeric(format!("function value {x} is not finite")));
    }
    Ok(x)
}

/// Compare reverse-mode gradients of `f` with central differences at every
/// coordinate of every parameter in `store`. Errors are relative, with the
/// denominator held at or above [`resolution_floor`].
pub fn grad_check<F>(store: &mut ParamStore, eps: f64, tol: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    if eps <= 0.0 {
        return Err(Error::Numeric("eps must be positive".into()));
    }
    let floor = resolution_floor(eval(store, &f)?, eps, tol);
    let grads = {
        let mut tape = Tape::new(store);
        let loss = f(&mut tape)?;
        tape.backward(loss)?
    };
    let mut report = GradCheck {
        passed: true,
        worst: 0.0,
        worst_at: None,
        checked: 0,
    };
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    for id in ids {
        for i in 0..store.tensor(id).len() {
            let orig = store.tensor(id).data()[i];
            store.get_mut(id).tensor.data_mut()[i] = orig + eps;
            let plus = eval(store, &f);
            store.get_mut(id).tensor.data_mut()[i] = orig - eps;
            let minus = eval(store, &f);
            store.get_mut(id).tensor.data_mut()[i] = orig;
            let numeric = (plus? - minus?) / (2.0 * eps);
            let analytic = grads.get(id).map_or(0.0, |g| g.data()[i]);
            let err = relative_error(analytic, numeric, floor);
            report.checked += 1;
            if err > report.worst {
                report.worst = err;
                report.worst_at = Some((store.get(id).name.clone(), i));
            }
        }
    }
    report.passed = report.worst <= tol;
    Ok(report)
}

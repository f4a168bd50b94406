//! Bidirectional tanh RNN over one sequence, with hand-written BPTT.
//!
//! Shapes for hidden size `h`, input width `k`, output width `o`:
//! `wf`, `wb`: `h × (h + k)` acting on `[state; input]`; `w`: `o × 2h`; `b`: `o`.

use crate::error::{shape_err, Result};
use crate::param::{ParamId, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BrnnParams {
    pub wf: ParamId,
    pub wb: ParamId,
    pub w: ParamId,
    pub b: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Dims {
    pub h: usize,
    pub k: usize,
    pub o: usize,
}

impl BrnnParams {
    /// Register a parameter set named `{prefix}.wf` etc.
    pub fn register(store: &mut ParamStore, prefix: &str, k: usize, h: usize, o: usize, bound: f64, seed: u64) -> Result<Self> {
        Ok(Self {
            wf: store.add_uniform(&format!("{prefix}.wf"), &[h, h + k], bound, seed)?,
            wb: store.add_uniform(&format!("{prefix}.wb"), &[h, h + k], bound, seed)?,
            w: store.add_uniform(&format!("{prefix}.w"), &[o, 2 * h], bound, seed)?,
            b: store.add_uniform(&format!("{prefix}.b"), &[o], bound, seed)?,
        })
    }

    pub(crate) fn dims(&self, store: &ParamStore, k: usize) -> Result<Dims> {
        let (wf, wb, w, b) = (
            store.tensor(self.wf).shape(),
            store.tensor(self.wb).shape(),
            store.tensor(self.w).shape(),
            store.tensor(self.b).shape(),
        );
        if wf.len() != 2 || wf != wb || w.len() != 2 || b.len() != 1 {
            return shape_err("malformed BRNN parameters");
        }
        let h = wf[0];
        let o = w[0];
        if wf[1] != h + k {
            return shape_err(format!("BRNN weights of width {} do not fit hidden {h} plus input {k}", wf[1]));
        }
        if w[1] != 2 * h || b[0] != o {
            return shape_err("BRNN output projection does not match hidden size");
        }
        Ok(Dims { h, k, o })
    }
}

/// `C = alpha·A·B + beta·C` over strided row-major views.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: (&[f64], usize, isize, isize),
    b: (&[f64], usize, isize, isize),
    beta: f64,
    c: (&mut [f64], usize, isize, isize),
) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    let extent = |off: usize, r: isize, s: isize, rows: usize, cols: usize| {
        off + (rows - 1) * r as usize + (cols - 1) * s as usize
    };
    assert!(extent(a.1, a.2, a.3, m, k) < a.0.len());
    assert!(extent(b.1, b.2, b.3, k, n) < b.0.len());
    assert!(extent(c.1, c.2, c.3, m, n) < c.0.len());
    // SAFETY: the asserts above keep every strided access inside its slice.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr().add(a.1),
            a.2,
            a.3,
            b.0.as_ptr().add(b.1),
            b.2,
            b.3,
            beta,
            c.0.as_mut_ptr().add(c.1),
            c.2,
            c.3,
        );
    }
}

/// Returns the output (`len × o`) and the concatenated states `[h⃗_t; h⃖_t]`
/// (`len × 2h`) needed for the backward pass.
pub(crate) fn forward(x: &[f64], len: usize, d: Dims, wf: &[f64], wb: &[f64], w: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let Dims { h, k, o } = d;
    let row = h + k;
    let mut hcat = vec![0.0; len * 2 * h];
    let mut proj = vec![0.0; len * h];
    for (dir, wd) in [(0usize, wf), (1, wb)] {
        // input part of the pre-activation for every step at once
        gemm(len, k, h, (x, 0, k as isize, 1), (wd, h, 1, row as isize), 0.0, (&mut proj, 0, h as isize, 1));
        let steps: Vec<usize> = if dir == 0 { (0..len).collect() } else { (0..len).rev().collect() };
        let mut prev: Option<usize> = None;
        for t in steps {
            for j in 0..h {
                let mut a = proj[t * h + j];
                if let Some(p) = prev {
                    let hp = &hcat[p * 2 * h + dir * h..p * 2 * h + dir * h + h];
                    let wr = &wd[j * row..j * row + h];
                    a += wr.iter().zip(hp).map(|(w, s)| w * s).sum::<f64>();
                }
                hcat[t * 2 * h + dir * h + j] = a.tanh();
            }
            prev = Some(t);
        }
    }
    let mut out = vec![0.0; len * o];
    for t in 0..len {
        out[t * o..(t + 1) * o].copy_from_slice(b);
    }
    gemm(len, 2 * h, o, (&hcat, 0, (2 * h) as isize, 1), (w, 0, 1, (2 * h) as isize), 1.0, (&mut out, 0, o as isize, 1));
    (out, hcat)
}

pub(crate) struct BrnnGrads {
    pub dx: Vec<f64>,
    pub dwf: Vec<f64>,
    pub dwb: Vec<f64>,
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn backward(dout: &[f64], x: &[f64], hcat: &[f64], len: usize, d: Dims, wf: &[f64], wb: &[f64], w: &[f64]) -> BrnnGrads {
    let Dims { h, k, o } = d;
    let row = h + k;
    let h2 = 2 * h;
    let mut g = BrnnGrads {
        dx: vec![0.0; len * k],
        dwf: vec![0.0; h * row],
        dwb: vec![0.0; h * row],
        dw: vec![0.0; o * h2],
        db: vec![0.0; o],
    };
    for t in 0..len {
        for (acc, v) in g.db.iter_mut().zip(&dout[t * o..(t + 1) * o]) {
            *acc += v;
        }
    }
    gemm(o, len, h2, (dout, 0, 1, o as isize), (hcat, 0, h2 as isize, 1), 0.0, (&mut g.dw, 0, h2 as isize, 1));
    let mut dh = vec![0.0; len * h2];
    gemm(len, o, h2, (dout, 0, o as isize, 1), (w, 0, h2 as isize, 1), 0.0, (&mut dh, 0, h2 as isize, 1));

    let mut da = vec![0.0; len * h];
    for dir in 0..2 {
        let (wd, dwd) = if dir == 0 { (wf, &mut g.dwf) } else { (wb, &mut g.dwb) };
        let steps: Vec<usize> = if dir == 0 { (0..len).rev().collect() } else { (0..len).collect() };
        let mut carry = vec![0.0; h];
        for t in steps {
            for j in 0..h {
                let s = hcat[t * h2 + dir * h + j];
                da[t * h + j] = (dh[t * h2 + dir * h + j] + carry[j]) * (1.0 - s * s);
            }
            carry.fill(0.0);
            for j in 0..h {
                let a = da[t * h + j];
                for (c, wv) in carry.iter_mut().zip(&wd[j * row..j * row + h]) {
                    *c += wv * a;
                }
            }
        }
        if len > 1 {
            // recurrent weights: step t saw the state of its predecessor
            let (a_off, b_off) = if dir == 0 { (h, 0) } else { (0, h2 + h) };
            gemm(
                h,
                len - 1,
                h,
                (&da, a_off, 1, h as isize),
                (hcat, b_off, h2 as isize, 1),
                1.0,
                (dwd, 0, row as isize, 1),
            );
        }
        gemm(h, len, k, (&da, 0, 1, h as isize), (x, 0, k as isize, 1), 1.0, (dwd, h, row as isize, 1));
        gemm(len, h, k, (&da, 0, h as isize, 1), (wd, h, row as isize, 1), 1.0, (&mut g.dx, 0, k as isize, 1));
    }
    g
}

use crate::param::{Gradients, ParamStore};

/// Plain SGD with global gradient-norm clipping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sgd {
    pub lr: f64,
    pub clip: f64,
}

impl Default for Sgd {
    fn default() -> Self {
        Self { lr: 0.05, clip: 5.0 }
    }
}

impl Sgd {
    /// Apply one update; returns the gradient norm before clipping.
    pub fn step(&self, store: &mut ParamStore, grads: &Gradients) -> f64 {
        store.load_grads(grads);
        let norm = grads.norm();
        let scale = if norm > self.clip { self.clip / norm } else { 1.0 };
        for id in grads.touched().collect::<Vec<_>>() {
            let p = store.get_mut(id);
            let step = self.lr * scale;
            for (w, g) in p.tensor.data_mut().iter_mut().zip(p.grad.data()) {
                *w -= step * g;
            }
        }
        norm
    }
}


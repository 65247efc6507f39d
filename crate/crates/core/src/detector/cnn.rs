//! Two-layer convolutional classifier over a word window.
//!
//! conv1 filters span every input row, so each produces a single time
//! series; conv2 convolves over time across all conv1 maps. Both use valid
//! padding and ReLU. Each conv2 map is max-pooled over time and the pooled
//! vector feeds a two-way softmax.

use super::window::{WordWindowMatrix, N_ROWS, W_MAX};
use super::EventKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnnShape {
    pub rows: usize,
    pub width: usize,
    pub k1: usize,
    pub kw1: usize,
    pub k2: usize,
    pub kw2: usize,
}

impl CnnShape {
    pub const DEFAULT: CnnShape = CnnShape {
        rows: N_ROWS,
        width: W_MAX,
        k1: 32,
        kw1: 6,
        k2: 32,
        kw2: 4,
    };

    pub fn conv1_len(&self) -> usize {
        self.width + 1 - self.kw1
    }

    pub fn conv2_len(&self) -> usize {
        self.conv1_len() + 1 - self.kw2
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.k1 == 0 || self.k2 == 0 || self.kw1 == 0 || self.kw2 == 0 {
            return Err(Error::Config(format!("degenerate CNN shape {self:?}")));
        }
        if self.width < self.kw1 + self.kw2 - 1 {
            return Err(Error::Config(format!(
                "window width {} too small for kernels {} and {}",
                self.width, self.kw1, self.kw2
            )));
        }
        Ok(())
    }
}

impl Default for CnnShape {
    fn default() -> Self {
        CnnShape::DEFAULT
    }
}

/// All trainable tensors, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams {
    /// `[k1][rows][kw1]`
    pub conv1_w: Vec<f64>,
    pub conv1_b: Vec<f64>,
    /// `[k2][k1][kw2]`
    pub conv2_w: Vec<f64>,
    pub conv2_b: Vec<f64>,
    /// `[2][k2]`
    pub fc_w: Vec<f64>,
    pub fc_b: Vec<f64>,
}

impl CnnParams {
    pub fn zeros(s: &CnnShape) -> Self {
        CnnParams {
            conv1_w: vec![0.0; s.k1 * s.rows * s.kw1],
            conv1_b: vec![0.0; s.k1],
            conv2_w: vec![0.0; s.k2 * s.k1 * s.kw2],
            conv2_b: vec![0.0; s.k2],
            fc_w: vec![0.0; 2 * s.k2],
            fc_b: vec![0.0; 2],
        }
    }

    pub fn tensors(&self) -> [&Vec<f64>; 6] {
        [
            &self.conv1_w,
            &self.conv1_b,
            &self.conv2_w,
            &self.conv2_b,
            &self.fc_w,
            &self.fc_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.fc_w,
            &mut self.fc_b,
        ]
    }

    pub fn fill(&mut self, v: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x = v);
        }
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &CnnParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += alpha * y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProsodyModel {
    pub event_kind: EventKind,
    pub version: u32,
    pub shape: CnnShape,
    pub params: CnnParams,
}

pub const MODEL_VERSION: u32 = 1;

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub pooled: Vec<f64>,
    pub argmax: Vec<usize>,
    pub logits: [f64; 2],
    pub probs: [f64; 2],
}

fn softmax(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

impl ProsodyModel {
    pub fn zeros(event_kind: EventKind, shape: CnnShape) -> Self {
        ProsodyModel {
            event_kind,
            version: MODEL_VERSION,
            shape,
            params: CnnParams::zeros(&shape),
        }
    }

    fn check_input(&self, m: &WordWindowMatrix) -> Result<()> {
        let s = &self.shape;
        if m.width != s.width || m.values.len() != s.rows * s.width {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", s.rows, s.width),
                got: format!("{}x{}", m.values.len() / m.width.max(1), m.width),
            });
        }
        Ok(())
    }

    pub fn forward_activations(&self, m: &WordWindowMatrix) -> Result<Activations> {
        self.check_input(m)?;
        let s = &self.shape;
        let p = &self.params;
        let (l1, l2) = (s.conv1_len(), s.conv2_len());
        let x = &m.values;

        let mut h1 = vec![0.0; s.k1 * l1];
        for k in 0..s.k1 {
            let out = &mut h1[k * l1..(k + 1) * l1];
            out.iter_mut().for_each(|v| *v = p.conv1_b[k]);
            for r in 0..s.rows {
                let xrow = &x[r * s.width..(r + 1) * s.width];
                for j in 0..s.kw1 {
                    let w = p.conv1_w[(k * s.rows + r) * s.kw1 + j];
                    for (o, &xv) in out.iter_mut().zip(&xrow[j..j + l1]) {
                        *o += w * xv;
                    }
                }
            }
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }

        let mut h2 = vec![0.0; s.k2 * l2];
        for m2 in 0..s.k2 {
            let out = &mut h2[m2 * l2..(m2 + 1) * l2];
            out.iter_mut().for_each(|v| *v = p.conv2_b[m2]);
            for k in 0..s.k1 {
                let hrow = &h1[k * l1..(k + 1) * l1];
                for j in 0..s.kw2 {
                    let w = p.conv2_w[(m2 * s.k1 + k) * s.kw2 + j];
                    if w == 0.0 {
                        continue;
                    }
                    for (o, &hv) in out.iter_mut().zip(&hrow[j..j + l2]) {
                        *o += w * hv;
                    }
                }
            }
            out.iter_mut().for_each(|v| *v = v.max(0.0));
        }

        let mut pooled = vec![0.0; s.k2];
        let mut argmax = vec![0; s.k2];
        for m2 in 0..s.k2 {
            let row = &h2[m2 * l2..(m2 + 1) * l2];
            let mut best = 0;
            for (t, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = t;
                }
            }
            pooled[m2] = row[best];
            argmax[m2] = best;
        }

        let mut logits = [p.fc_b[0], p.fc_b[1]];
        for (c, z) in logits.iter_mut().enumerate() {
            *z += p.fc_w[c * s.k2..(c + 1) * s.k2]
                .iter()
                .zip(&pooled)
                .map(|(w, v)| w * v)
                .sum::<f64>();
        }
        Ok(Activations {
            h1,
            h2,
            pooled,
            argmax,
            logits,
            probs: softmax(logits),
        })
    }

    /// `(p_no_event, p_event)`
    pub fn forward(&self, m: &WordWindowMatrix) -> Result<(f64, f64)> {
        let a = self.forward_activations(m)?;
        Ok((a.probs[0], a.probs[1]))
    }

    pub fn loss(&self, m: &WordWindowMatrix, gold: bool) -> Result<f64> {
        let a = self.forward_activations(m)?;
        Ok(-a.probs[gold as usize].ln())
    }

    /// Gradient of `-ln p(gold)`, accumulated into `grad`. Returns the loss.
    /// When `input_grad` is given it receives the gradient with respect to
    /// the input matrix (same layout as `m.values`).
    pub fn backward(
        &self,
        m: &WordWindowMatrix,
        gold: bool,
        grad: &mut CnnParams,
        input_grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        let a = self.forward_activations(m)?;
        Ok(self.backward_from(m, &a, gold, grad, input_grad))
    }

    pub(crate) fn backward_from(
        &self,
        m: &WordWindowMatrix,
        a: &Activations,
        gold: bool,
        grad: &mut CnnParams,
        mut input_grad: Option<&mut [f64]>,
    ) -> f64 {
        let s = &self.shape;
        let p = &self.params;
        let (l1, l2) = (s.conv1_len(), s.conv2_len());
        let x = &m.values;
        let y = gold as usize;

        let dz = [
            a.probs[0] - (y == 0) as u8 as f64,
            a.probs[1] - (y == 1) as u8 as f64,
        ];
        for c in 0..2 {
            grad.fc_b[c] += dz[c];
            for m2 in 0..s.k2 {
                grad.fc_w[c * s.k2 + m2] += dz[c] * a.pooled[m2];
            }
        }

        // Max pooling routes each map's gradient to a single position.
        let mut d1 = vec![0.0; s.k1 * l1];
        for m2 in 0..s.k2 {
            let t = a.argmax[m2];
            if a.h2[m2 * l2 + t] <= 0.0 {
                continue;
            }
            let g = dz[0] * p.fc_w[m2] + dz[1] * p.fc_w[s.k2 + m2];
            if g == 0.0 {
                continue;
            }
            grad.conv2_b[m2] += g;
            for k in 0..s.k1 {
                let base = (m2 * s.k1 + k) * s.kw2;
                for j in 0..s.kw2 {
                    grad.conv2_w[base + j] += g * a.h1[k * l1 + t + j];
                    d1[k * l1 + t + j] += g * p.conv2_w[base + j];
                }
            }
        }

        for k in 0..s.k1 {
            for t in 0..l1 {
                let g = d1[k * l1 + t];
                if g == 0.0 || a.h1[k * l1 + t] <= 0.0 {
                    continue;
                }
                grad.conv1_b[k] += g;
                for r in 0..s.rows {
                    let wbase = (k * s.rows + r) * s.kw1;
                    let xbase = r * s.width + t;
                    for j in 0..s.kw1 {
                        grad.conv1_w[wbase + j] += g * x[xbase + j];
                    }
                    if let Some(dx) = input_grad.as_deref_mut() {
                        for j in 0..s.kw1 {
                            dx[xbase + j] += g * p.conv1_w[wbase + j];
                        }
                    }
                }
            }
        }
        -a.probs[y].ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(seed: u64, shape: CnnShape) -> ProsodyModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = ProsodyModel::zeros(EventKind::Accent, shape);
        for t in m.params.tensors_mut() {
            t.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
        }
        m
    }

    fn random_input(seed: u64, shape: &CnnShape) -> WordWindowMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = WordWindowMatrix::zeros(shape.width);
        w.values
            .iter_mut()
            .for_each(|v| *v = rng.gen_range(-1.0..1.0));
        w
    }

    #[test]
    fn zero_model_is_indifferent() {
        let m = ProsodyModel::zeros(EventKind::Accent, CnnShape::DEFAULT);
        let x = random_input(1, &CnnShape::DEFAULT);
        assert_eq!(m.forward(&x).unwrap(), (0.5, 0.5));
    }

    #[test]
    fn toy_model_matches_hand_computation() {
        // one filter of width 1 on a single column: every stage is scalar
        let shape = CnnShape {
            rows: 6,
            width: 1,
            k1: 1,
            kw1: 1,
            k2: 1,
            kw2: 1,
        };
        let mut m = ProsodyModel::zeros(EventKind::Accent, shape);
        m.params.conv1_w = vec![0.5, -1.0, 0.25, 0.0, 2.0, 1.0];
        m.params.conv1_b = vec![0.1];
        m.params.conv2_w = vec![3.0];
        m.params.conv2_b = vec![-0.2];
        m.params.fc_w = vec![0.4, -0.6];
        m.params.fc_b = vec![0.05, 0.3];
        let mut x = WordWindowMatrix::zeros(1);
        x.values = vec![1.0, 0.5, 2.0, 9.0, 0.25, 1.0];
        // conv1 = 0.1 + 0.5 - 0.5 + 0.5 + 0 + 0.5 + 1.0 = 2.1
        // conv2 = 3 * 2.1 - 0.2 = 6.1
        // logits = (0.05 + 0.4 * 6.1, 0.3 - 0.6 * 6.1) = (2.49, -3.36)
        let (p0, p1) = m.forward(&x).unwrap();
        let expected_p1 = 1.0 / (1.0 + (2.49f64 + 3.36).exp());
        assert!((p1 - expected_p1).abs() < 1e-12, "{p1} vs {expected_p1}");
        assert!((p0 + p1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let m = ProsodyModel::zeros(EventKind::Accent, CnnShape::DEFAULT);
        let x = WordWindowMatrix::zeros(60);
        assert!(matches!(m.forward(&x), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn confident_correct_prediction_has_no_softmax_gradient() {
        let shape = CnnShape {
            width: 12,
            k1: 2,
            k2: 2,
            ..CnnShape::DEFAULT
        };
        let mut m = random_model(3, shape);
        m.params.fc_b = vec![-1000.0, 1000.0];
        let x = random_input(4, &shape);
        let mut g = CnnParams::zeros(&shape);
        let loss = m.backward(&x, true, &mut g, None).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.fc_w.iter().chain(&g.fc_b).all(|&v| v == 0.0));
    }

    #[test]
    fn indicator_row_receives_gradient() {
        let shape = CnnShape {
            width: 12,
            k1: 2,
            k2: 2,
            ..CnnShape::DEFAULT
        };
        let m = random_model(11, shape);
        let mut x = random_input(12, &shape);
        for c in 0..shape.width {
            x.set(
                super::super::window::INDICATOR_ROW,
                c,
                if (4..8).contains(&c) { 1.0 } else { 0.0 },
            );
        }
        let mut g = CnnParams::zeros(&shape);
        let mut dx = vec![0.0; x.values.len()];
        m.backward(&x, true, &mut g, Some(&mut dx)).unwrap();
        let row = super::super::window::INDICATOR_ROW;
        let norm: f64 = dx[row * shape.width..(row + 1) * shape.width]
            .iter()
            .map(|v| v.abs())
            .sum();
        assert!(norm > 0.0);

        // and it agrees with a finite-difference probe
        let h = 1e-5;
        let col = (0..shape.width)
            .max_by(|&a, &b| {
                dx[row * shape.width + a]
                    .abs()
                    .total_cmp(&dx[row * shape.width + b].abs())
            })
            .unwrap();
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp.set(row, col, x.get(row, col) + h);
        xm.set(row, col, x.get(row, col) - h);
        let fd = (m.loss(&xp, true).unwrap() - m.loss(&xm, true).unwrap()) / (2.0 * h);
        let an = dx[row * shape.width + col];
        assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0), "{fd} vs {an}");
    }
}

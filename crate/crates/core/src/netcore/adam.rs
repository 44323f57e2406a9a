use crate::error::NetError;

/// Adam optimiser state for one parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Adam {
    /// Moments sized after `shapes`, one entry per parameter tensor.
    pub fn new(shapes: &[usize], lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_params(params: &[&[f64]], lr: f64) -> Self {
        let shapes: Vec<usize> = params.iter().map(|p| p.len()).collect();
        Self::new(&shapes, lr)
    }

    /// One bias-corrected step: `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &[&[f64]]) -> Result<(), NetError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NetError::shape(
                format!("{} tensors", self.m.len()),
                format!("{} params / {} grads", params.len(), grads.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(NetError::shape(
                    format!("tensor {i} of length {}", self.m[i].len()),
                    format!("{} / {}", p.len(), g.len()),
                ));
            }
        }
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powf(self.t as f64);
        let c2 = 1.0 - b2.powf(self.t as f64);
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..p.len() {
                let gj = g[j];
                m[j] = b1 * m[j] + (1.0 - b1) * gj;
                v[j] = b2 * v[j] + (1.0 - b2) * gj * gj;
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().chain(&self.v).all(|s| s.iter().all(|x| x.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_grad_leaves_params() {
        let mut p = vec![0.5, -0.25];
        let mut adam = Adam::new(&[2], 1e-3);
        adam.step(vec![&mut p], &[&[0.0, 0.0]]).unwrap();
        assert_eq!(p, vec![0.5, -0.25]);
        assert_eq!(adam.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let mut p = vec![1.0, 1.0, 1.0];
        let mut adam = Adam::new(&[3], 1e-3);
        adam.step(vec![&mut p], &[&[0.3, -7.0, 1e3]]).unwrap();
        assert_abs_diff_eq!(p[0], 1.0 - 1e-3, epsilon = 1e-10);
        assert_abs_diff_eq!(p[1], 1.0 + 1e-3, epsilon = 1e-10);
        assert_abs_diff_eq!(p[2], 1.0 - 1e-3, epsilon = 1e-10);
    }

    #[test]
    fn two_steps_match_hand_recurrence() {
        let (lr, b1, b2, eps, g) = (1e-3f64, 0.9f64, 0.999f64, 1e-8f64, 0.42f64);
        let mut p = vec![0.1];
        let mut adam = Adam::new(&[1], lr);
        adam.step(vec![&mut p], &[&[g]]).unwrap();
        adam.step(vec![&mut p], &[&[g]]).unwrap();

        let mut x = 0.1f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        assert_abs_diff_eq!(p[0], x, epsilon = 1e-12);
    }

    #[test]
    fn mismatched_shapes_fail() {
        let mut p = vec![0.0; 3];
        let mut adam = Adam::new(&[2], 1e-3);
        assert!(adam.step(vec![&mut p], &[&[0.0; 3]]).is_err());
        assert_eq!(adam.t, 0);
    }
}

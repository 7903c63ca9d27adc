use ndarray::Zip;

use super::params::ModelParameters;

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: ModelParameters,
    v: ModelParameters,
    t: i32,
}

impl Adam {
    pub fn new(like: &ModelParameters, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            beta1,
            beta2,
            eps,
            m: like.zeros_like(),
            v: like.zeros_like(),
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.t
    }

    pub fn step(&mut self, params: &mut ModelParameters, grads: &ModelParameters, lr: f64) {
        self.t += 1;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for ((((_, mut p), (_, g)), (_, mut m)), (_, mut v)) in tensors {
            Zip::from(&mut p)
                .and(&g)
                .and(&mut m)
                .and(&mut v)
                .for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqmodel::ModelDims;

    #[test]
    fn first_step_moves_each_coordinate_by_lr() {
        let dims = ModelDims {
            vocab_size: 5,
            embed_dim: 2,
            hidden: 3,
            latent: 2,
            layers: 1,
        };
        let mut p = ModelParameters::zeros(dims);
        let mut g = p.zeros_like();
        g.b_out[0] = 4.0;
        g.b_out[1] = -0.001;
        let mut opt = Adam::new(&p, 0.9, 0.999, 1e-8);
        opt.step(&mut p, &g, 0.01);
        assert!((p.b_out[0] + 0.01).abs() < 1e-9);
        assert!((p.b_out[1] - 0.01).abs() < 1e-6);
        assert_eq!(p.b_out[2], 0.0);
        assert_eq!(opt.steps_taken(), 1);
    }
}

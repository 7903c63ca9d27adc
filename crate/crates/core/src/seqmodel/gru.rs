//! GRU cell, batched over rows, with its exact backward pass.
//!
//! ```text
//! r = σ(x W_r + h U_r + b_r)
//! u = σ(x W_u + h U_u + b_u)
//! v = tanh(x W_h + (r ⊙ h) U_h + b_h)
//! h' = u ⊙ h + (1 - u) ⊙ v
//! ```

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};

use super::params::GruLayerParams;
use super::ModelError;

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Values saved by the forward step for the backward step.
#[derive(Clone, Debug)]
pub struct GruCache {
    pub x: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub r: Array2<f64>,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

pub fn gru_forward(
    p: &GruLayerParams,
    x: ArrayView2<f64>,
    h_prev: ArrayView2<f64>,
) -> (Array2<f64>, GruCache) {
    let mut r = x.dot(&p.w_r) + h_prev.dot(&p.u_r) + &p.b_r;
    r.mapv_inplace(sigmoid);
    let mut u = x.dot(&p.w_u) + h_prev.dot(&p.u_u) + &p.b_u;
    u.mapv_inplace(sigmoid);
    let rh = &r * &h_prev;
    let mut v = x.dot(&p.w_h) + rh.dot(&p.u_h) + &p.b_h;
    v.mapv_inplace(f64::tanh);
    let mut h = Array2::zeros(h_prev.raw_dim());
    Zip::from(&mut h)
        .and(&u)
        .and(&h_prev)
        .and(&v)
        .for_each(|o, &u, &hp, &v| *o = u * hp + (1.0 - u) * v);
    let cache = GruCache {
        x: x.to_owned(),
        h_prev: h_prev.to_owned(),
        r,
        u,
        v,
    };
    (h, cache)
}

/// Accumulates parameter gradients into `g`; returns `(dx, dh_prev)`.
pub fn gru_backward(
    p: &GruLayerParams,
    c: &GruCache,
    dh: ArrayView2<f64>,
    g: &mut GruLayerParams,
) -> (Array2<f64>, Array2<f64>) {
    let mut dv_pre = Array2::zeros(dh.raw_dim());
    let mut du_pre = Array2::zeros(dh.raw_dim());
    let mut dh_prev = Array2::zeros(dh.raw_dim());
    Zip::from(&mut dv_pre)
        .and(&mut dh_prev)
        .and(&dh)
        .and(&c.u)
        .and(&c.v)
        .for_each(|dvp, dhp, &dh, &u, &v| {
            *dvp = dh * (1.0 - u) * (1.0 - v * v);
            *dhp = dh * u;
        });
    Zip::from(&mut du_pre)
        .and(&dh)
        .and(&c.u)
        .and(&c.v)
        .and(&c.h_prev)
        .for_each(|dup, &dh, &u, &v, &hp| *dup = dh * (hp - v) * u * (1.0 - u));
    let rh = &c.r * &c.h_prev;
    g.w_h += &c.x.t().dot(&dv_pre);
    g.u_h += &rh.t().dot(&dv_pre);
    g.b_h += &dv_pre.sum_axis(Axis(0));
    let d_rh = dv_pre.dot(&p.u_h.t());
    let mut dr_pre = Array2::zeros(dh.raw_dim());
    Zip::from(&mut dr_pre)
        .and(&mut dh_prev)
        .and(&d_rh)
        .and(&c.r)
        .and(&c.h_prev)
        .for_each(|drp, dhp, &drh, &r, &hp| {
            *drp = drh * hp * r * (1.0 - r);
            *dhp += drh * r;
        });
    g.w_u += &c.x.t().dot(&du_pre);
    g.u_u += &c.h_prev.t().dot(&du_pre);
    g.b_u += &du_pre.sum_axis(Axis(0));
    g.w_r += &c.x.t().dot(&dr_pre);
    g.u_r += &c.h_prev.t().dot(&dr_pre);
    g.b_r += &dr_pre.sum_axis(Axis(0));
    let dx = dv_pre.dot(&p.w_h.t()) + du_pre.dot(&p.w_u.t()) + dr_pre.dot(&p.w_r.t());
    dh_prev += &du_pre.dot(&p.u_u.t());
    dh_prev += &dr_pre.dot(&p.u_r.t());
    (dx, dh_prev)
}

/// Single-vector cell.
pub fn gru_cell(
    x: ArrayView1<f64>,
    h_prev: ArrayView1<f64>,
    p: &GruLayerParams,
) -> Result<Array1<f64>, ModelError> {
    if x.len() != p.input_dim() || h_prev.len() != p.hidden_dim() {
        return Err(ModelError::Shape(format!(
            "gru_cell got x of {} and h of {}, layer expects {} and {}",
            x.len(),
            h_prev.len(),
            p.input_dim(),
            p.hidden_dim()
        )));
    }
    let (h, _) = gru_forward(p, x.insert_axis(Axis(0)), h_prev.insert_axis(Axis(0)));
    Ok(h.index_axis_move(Axis(0), 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, Array};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_parameters_halve_the_state() {
        let p = GruLayerParams::zeros(3, 4);
        let x = arr1(&[0.7, -1.0, 2.0]);
        let h = gru_cell(x.view(), Array1::zeros(4).view(), &p).unwrap();
        assert_eq!(h, Array1::<f64>::zeros(4));
        let h = gru_cell(x.view(), Array1::from_elem(4, 0.6).view(), &p).unwrap();
        assert_eq!(h, Array1::from_elem(4, 0.3));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = GruLayerParams::zeros(3, 4);
        assert!(gru_cell(arr1(&[1.0]).view(), Array1::zeros(4).view(), &p).is_err());
    }

    fn random_layer(rng: &mut ChaCha8Rng, d: usize, h: usize) -> GruLayerParams {
        let mut m = |r, c| Array::from_shape_simple_fn((r, c), || rng.random_range(-0.8..0.8));
        let (w_r, w_u, w_h, u_r, u_u, u_h) = (m(d, h), m(d, h), m(d, h), m(h, h), m(h, h), m(h, h));
        let mut b = || Array::from_shape_simple_fn(h, || rng.random_range(-0.5..0.5));
        GruLayerParams {
            w_r,
            w_u,
            w_h,
            u_r,
            u_u,
            u_h,
            b_r: b(),
            b_u: b(),
            b_h: b(),
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (d, h, b) = (3, 4, 2);
        let p = random_layer(&mut rng, d, h);
        let x = Array::from_shape_simple_fn((b, d), || rng.random_range(-1.0..1.0));
        let h0 = Array::from_shape_simple_fn((b, h), || rng.random_range(-1.0..1.0));
        let w = Array::from_shape_simple_fn((b, h), || rng.random_range(-1.0..1.0));
        // Scalar objective: weighted sum of the new state.
        let f = |p: &GruLayerParams, x: &Array2<f64>, h0: &Array2<f64>| {
            (gru_forward(p, x.view(), h0.view()).0 * &w).sum()
        };
        let (_, cache) = gru_forward(&p, x.view(), h0.view());
        let mut g = GruLayerParams::zeros(d, h);
        let (dx, dh0) = gru_backward(&p, &cache, w.view(), &mut g);
        let eps = 1e-6;
        let check = |a: f64, n: f64| {
            assert!(
                (a - n).abs() <= 1e-4 * a.abs().max(n.abs()).max(1e-6),
                "{a} vs {n}"
            )
        };
        for i in 0..b {
            for j in 0..d {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[[i, j]] += eps;
                xm[[i, j]] -= eps;
                check(
                    dx[[i, j]],
                    (f(&p, &xp, &h0) - f(&p, &xm, &h0)) / (2.0 * eps),
                );
            }
            for j in 0..h {
                let (mut hp, mut hm) = (h0.clone(), h0.clone());
                hp[[i, j]] += eps;
                hm[[i, j]] -= eps;
                check(dh0[[i, j]], (f(&p, &x, &hp) - f(&p, &x, &hm)) / (2.0 * eps));
            }
        }
        type Field = fn(&mut GruLayerParams) -> &mut Array2<f64>;
        let pairs: [(Field, &Array2<f64>); 6] = [
            (|p| &mut p.w_r, &g.w_r),
            (|p| &mut p.w_u, &g.w_u),
            (|p| &mut p.w_h, &g.w_h),
            (|p| &mut p.u_r, &g.u_r),
            (|p| &mut p.u_u, &g.u_u),
            (|p| &mut p.u_h, &g.u_h),
        ];
        for (get, grad) in pairs {
            for idx in [[0, 0], [1, 2], [2, 3]] {
                let (mut pp, mut pm) = (p.clone(), p.clone());
                get(&mut pp)[idx] += eps;
                get(&mut pm)[idx] -= eps;
                check(grad[idx], (f(&pp, &x, &h0) - f(&pm, &x, &h0)) / (2.0 * eps));
            }
        }
        for j in 0..h {
            let (mut pp, mut pm) = (p.clone(), p.clone());
            pp.b_h[j] += eps;
            pm.b_h[j] -= eps;
            check(g.b_h[j], (f(&pp, &x, &h0) - f(&pm, &x, &h0)) / (2.0 * eps));
        }
    }
}

use crate::error::{Error, Result};

use super::{AdamConfig, MlpParams, TrainConfig};

/// Cosine annealing from `lr0` at epoch 0 to `lr_min` at the last epoch.
pub fn cosine_lr(epoch: usize, cfg: &TrainConfig) -> f64 {
    if cfg.epochs <= 1 {
        return cfg.lr0;
    }
    let last = (cfg.epochs - 1) as f64;
    if epoch as f64 >= last {
        return cfg.lr_min;
    }
    let phase = std::f64::consts::PI * epoch as f64 / last;
    cfg.lr_min + 0.5 * (cfg.lr0 - cfg.lr_min) * (1.0 + phase.cos())
}

/// First and second moment buffers, shaped like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: MlpParams,
    pub v: MlpParams,
}

impl AdamState {
    pub fn new(params: &MlpParams) -> Self {
        AdamState { m: params.zeros_like(), v: params.zeros_like() }
    }
}

/// One bias-corrected Adam update at step `t ≥ 1`.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &MlpParams,
    state: &mut AdamState,
    lr: f64,
    cfg: &AdamConfig,
    t: u64,
) -> Result<()> {
    if t == 0 {
        return Err(Error::invalid("Adam step counter starts at 1"));
    }
    if !(params.same_shape(grads) && params.same_shape(&state.m) && params.same_shape(&state.v)) {
        return Err(Error::invalid("Adam parameter, gradient and moment shapes differ"));
    }
    let c1 = 1.0 - cfg.beta1.powf(t as f64);
    let c2 = 1.0 - cfg.beta2.powf(t as f64);
    let tensors = params.tensors_mut().zip(grads.tensors()).zip(state.m.tensors_mut().zip(state.v.tensors_mut()));
    for ((p, g), (m, v)) in tensors {
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            p[i] -= lr * mh / (vh.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(epochs: usize) -> TrainConfig {
        TrainConfig { epochs, ..TrainConfig::default() }
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let c = cfg(101);
        assert_eq!(cosine_lr(0, &c), 1e-3);
        assert_eq!(cosine_lr(100, &c), 0.0);
        assert!((cosine_lr(50, &c) - 5e-4).abs() < 1e-18);
        let mut floor = cfg(11);
        floor.lr_min = 1e-5;
        assert_eq!(cosine_lr(10, &floor), 1e-5);
        assert_eq!(cosine_lr(0, &cfg(1)), 1e-3);
    }

    #[test]
    fn cosine_schedule_is_monotone() {
        let c = cfg(300);
        for e in 1..300 {
            assert!(cosine_lr(e, &c) <= cosine_lr(e - 1, &c));
        }
    }

    fn scalar(v: f64) -> MlpParams {
        let mut p = MlpParams::zeros(&[1, 1]);
        p.layers[0].weights[(0, 0)] = v;
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = scalar(0.7);
        let mut st = AdamState::new(&p);
        st.m.layers[0].weights[(0, 0)] = 0.2;
        st.v.layers[0].weights[(0, 0)] = 0.04;
        let g = p.zeros_like();
        let before = p.clone();
        let mut q = p.clone();
        adam_step(&mut q, &g, &mut st, 1e-3, &AdamConfig::default(), 5).unwrap();
        assert!((st.m.layers[0].weights[(0, 0)] - 0.18).abs() < 1e-15);
        assert!((st.v.layers[0].weights[(0, 0)] - 0.04 * 0.999).abs() < 1e-15);
        // Moments still push the parameter; with fresh moments it stays put.
        let mut fresh = AdamState::new(&p);
        adam_step(&mut p, &g, &mut fresh, 1e-3, &AdamConfig::default(), 1).unwrap();
        assert_eq!(p, before);
        assert_ne!(q, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [3.0, -0.02] {
            let mut p = scalar(1.0);
            let mut st = AdamState::new(&p);
            adam_step(&mut p, &scalar(g), &mut st, 1e-3, &AdamConfig::default(), 1).unwrap();
            let step = p.layers[0].weights[(0, 0)] - 1.0;
            assert!((step + 1e-3 * g.signum()).abs() < 1e-9, "step {step}");
        }
    }

    #[test]
    fn identical_tensors_get_identical_updates() {
        let mut p = MlpParams::zeros(&[2, 2]);
        p.layers[0].weights.fill(0.3);
        let mut g = p.zeros_like();
        g.layers[0].weights.fill(-1.5);
        let mut st = AdamState::new(&p);
        for t in 1..=3 {
            adam_step(&mut p, &g, &mut st, 1e-2, &AdamConfig::default(), t).unwrap();
        }
        let w = &p.layers[0].weights;
        assert!(w.iter().all(|&x| x == w[(0, 0)]));
    }

    #[test]
    fn shape_mismatch_and_zero_step_rejected() {
        let mut p = scalar(1.0);
        let mut st = AdamState::new(&p);
        let wrong = MlpParams::zeros(&[2, 1]);
        assert!(adam_step(&mut p, &wrong, &mut st, 1e-3, &AdamConfig::default(), 1).is_err());
        assert!(adam_step(&mut p, &scalar(1.0), &mut st, 1e-3, &AdamConfig::default(), 0).is_err());
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::potential::Potential;

use super::{adam_step, cosine_lr, param_gradients, AdamState, Checkpoint, EpochSamples, LossBreakdown, TrainConfig};

/// Starting point of a training run.
#[derive(Clone, Debug)]
pub enum Init {
    Fresh,
    /// Continue an interrupted run: same schedule, moments and generator.
    Resume(Checkpoint),
    /// Keep the weights and restart everything else under the new config.
    FineTune(Checkpoint),
}

pub fn train(cfg: &TrainConfig, pot: &Potential, lat: &Lattice, init: Init) -> Result<Checkpoint> {
    train_with(cfg, pot, lat, init, |_| {})
}

/// As [`train`], calling `on_epoch` after every completed epoch.
pub fn train_with(
    cfg: &TrainConfig,
    pot: &Potential,
    lat: &Lattice,
    init: Init,
    on_epoch: impl FnMut(&LossBreakdown),
) -> Result<Checkpoint> {
    train_until(cfg, pot, lat, init, cfg.epochs, on_epoch)
}

/// Runs the schedule of `cfg` but stops once `stop` epochs are complete;
/// the returned checkpoint can be resumed later.
pub fn train_until(
    cfg: &TrainConfig,
    pot: &Potential,
    lat: &Lattice,
    init: Init,
    stop: usize,
    mut on_epoch: impl FnMut(&LossBreakdown),
) -> Result<Checkpoint> {
    cfg.validate()?;
    if let Init::Resume(ck) | Init::FineTune(ck) = &init {
        if !ck.matches_architecture(cfg) {
            return Err(Error::invalid("checkpoint architecture does not match the training config"));
        }
    }
    let mut ck = match init {
        Init::Fresh => Checkpoint::fresh(cfg)?,
        Init::Resume(mut ck) => {
            ck.config = cfg.clone();
            ck
        }
        Init::FineTune(ck) => {
            if cfg.epochs == 0 {
                return Ok(ck);
            }
            Checkpoint {
                config: cfg.clone(),
                bloch_adam: AdamState::new(&ck.bloch),
                energy_adam: AdamState::new(&ck.energy),
                bloch: ck.bloch,
                energy: ck.energy,
                adam_step: 0,
                epoch: 0,
                rng: ChaCha8Rng::seed_from_u64(cfg.seed),
                history: Vec::new(),
            }
        }
    };
    while ck.epoch < cfg.epochs.min(stop) {
        let epoch = ck.epoch;
        let lr = cosine_lr(epoch, cfg);
        let samples = EpochSamples::draw(&mut ck.rng, cfg, lat);
        let (mut loss, grads) = param_gradients(&ck.bloch, &ck.energy, &samples, cfg, pot, lat)?;
        loss.epoch = epoch;
        loss.lr = lr;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, last: loss });
        }
        let t = ck.adam_step + 1;
        adam_step(&mut ck.bloch, &grads.bloch, &mut ck.bloch_adam, lr, &cfg.adam, t)?;
        adam_step(&mut ck.energy, &grads.energy, &mut ck.energy_adam, lr, &cfg.adam, t)?;
        ck.adam_step = t;
        ck.epoch = epoch + 1;
        on_epoch(&loss);
        ck.history.push(loss);
    }
    Ok(ck)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TrainConfig {
        TrainConfig {
            epochs: 12,
            batch_size: 16,
            norm_grid: 6,
            n_norm_k: 2,
            bloch_hidden: 8,
            bloch_layers: 2,
            energy_hidden: 6,
            energy_layers: 1,
            seed: 99,
            ..TrainConfig::default()
        }
    }

    fn setup(cfg: &TrainConfig) -> (Potential, Lattice) {
        let lat = cfg.lattice().unwrap();
        (Potential::three_cosine(&lat, cfg.v0), lat)
    }

    #[test]
    fn zero_epochs_returns_init() {
        let cfg = TrainConfig { epochs: 0, ..tiny() };
        let (pot, lat) = setup(&cfg);
        let fresh = train(&cfg, &pot, &lat, Init::Fresh).unwrap();
        assert_eq!(fresh, Checkpoint::fresh(&cfg).unwrap());
        let trained = train(&tiny(), &pot, &lat, Init::Fresh).unwrap();
        let same = train(&cfg, &pot, &lat, Init::FineTune(trained.clone())).unwrap();
        assert_eq!(same, trained);
    }

    #[test]
    fn runs_are_deterministic_and_record_history() {
        let cfg = tiny();
        let (pot, lat) = setup(&cfg);
        let mut seen = 0;
        let a = train_with(&cfg, &pot, &lat, Init::Fresh, |_| seen += 1).unwrap();
        let b = train(&cfg, &pot, &lat, Init::Fresh).unwrap();
        assert_eq!(seen, 12);
        assert_eq!(a, b);
        assert_eq!(a.epoch, 12);
        assert_eq!(a.adam_step, 12);
        for (i, h) in a.history.iter().enumerate() {
            assert_eq!(h.epoch, i);
            assert_eq!(h.lr, cosine_lr(i, &cfg));
            let total = h.pde + cfg.lambda_norm * h.norm + cfg.lambda_bc * h.bc;
            assert!((h.total - total).abs() <= 1e-12 * total);
        }
        let other = train(&TrainConfig { seed: 100, ..cfg }, &pot, &lat, Init::Fresh).unwrap();
        assert_ne!(other.history, a.history);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let cfg = tiny();
        let (pot, lat) = setup(&cfg);
        let full = train(&cfg, &pot, &lat, Init::Fresh).unwrap();
        let halfway = train_until(&cfg, &pot, &lat, Init::Fresh, 6, |_| {}).unwrap();
        assert_eq!(halfway.epoch, 6);
        let dir = tempfile::tempdir().unwrap();
        halfway.save(dir.path()).unwrap();
        let restored = Checkpoint::load(dir.path()).unwrap();
        assert_eq!(restored, halfway);
        let resumed = train(&cfg, &pot, &lat, Init::Resume(restored)).unwrap();
        assert_eq!(resumed, full);
    }

    #[test]
    fn fine_tune_keeps_weights_and_restarts_schedule() {
        let cfg = tiny();
        let (pot, lat) = setup(&cfg);
        let base = train(&cfg, &pot, &lat, Init::Fresh).unwrap();
        let strong = TrainConfig { v0: 10.0, epochs: 1, ..cfg.clone() };
        let (pot10, _) = setup(&strong);
        let tuned = train(&strong, &pot10, &lat, Init::FineTune(base.clone())).unwrap();
        assert_eq!(tuned.epoch, 1);
        assert_eq!(tuned.adam_step, 1);
        assert_eq!(tuned.history.len(), 1);
        assert_eq!(tuned.history[0].lr, cfg.lr0);
        assert_eq!(tuned.config.v0, 10.0);
        assert_ne!(tuned.bloch, base.bloch);
        let wider = TrainConfig { bloch_hidden: 9, ..cfg };
        assert!(train(&wider, &pot, &lat, Init::FineTune(base)).is_err());
    }

    #[test]
    fn non_finite_loss_aborts() {
        let cfg = tiny();
        let lat = cfg.lattice().unwrap();
        let pot = Potential::three_cosine(&lat, f64::INFINITY);
        match train(&cfg, &pot, &lat, Init::Fresh) {
            Err(Error::Diverged { epoch, last }) => {
                assert_eq!(epoch, 0);
                assert!(!last.total.is_finite());
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}

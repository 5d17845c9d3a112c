//! Self-checks run by the `verify` subcommand: reset-window against
//! full-history equivalence, cost accounting and density-matrix invariants.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, ReservoirKind};
use super::seeds::derive_seed;
use super::sweep::build_model;
use crate::driver::{CompiledReservoir, DriveOptions};
use crate::encode::InitialStateKind;
use crate::error::Result;
use crate::qmath::DEFAULT_TOLERANCES;
use crate::tasks::uniform_input;

/// Longest drive used by the invariant check.
pub const VERIFY_MAX_STEPS: usize = 5000;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

/// Runs all checks for both reservoir kinds (equivalence, costs) and for the
/// configured reservoir (invariants over `min(task length, 5000)` steps).
pub fn run_verify(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let mut rng =
        ChaCha8Rng::seed_from_u64(derive_seed("verify", &[&cfg.master_seed.to_le_bytes()]));
    let seed_index = cfg.sweep.seeds[0];

    for kind in [ReservoirKind::Ising, ReservoirKind::Circuit] {
        let c = ExperimentConfig {
            reservoir: kind,
            ..cfg.clone()
        };
        let res = CompiledReservoir::new(&build_model(&c, seed_index)?);
        let u = uniform_input(30, &mut rng)?;
        let mut opts = DriveOptions::with_washout(0);
        opts.allow_partial_windows = true;
        let (q, _) = res.run_qcqa(&u, InitialStateKind::Up, &opts)?;
        let (l, _) = res.run_lcqa(&u, 30, InitialStateKind::Up, &opts)?;
        let diff = q.max_abs_diff(&l);
        checks.push(check(
            format!("equivalence/{kind:?}").to_lowercase(),
            diff <= 1e-10,
            format!("max |S_lcqa - S_qcqa| = {diff:e} (tolerance 1e-10, M = 30, n = 30)"),
        ));

        for m in [5usize, 10, 100] {
            let u = uniform_input(m, &mut rng)?;
            let (_, qs) = res.run_qcqa(&u, InitialStateKind::Up, &DriveOptions::with_washout(0))?;
            let n = 3;
            let (_, ls) =
                res.run_lcqa(&u, n, InitialStateKind::Up, &DriveOptions::with_washout(n))?;
            let want_q = (m * (m + 1) / 2) as u64;
            let want_l = (n * (m - n)) as u64;
            checks.push(check(
                format!("cost/{kind:?}/M={m}").to_lowercase(),
                qs.physical_unitary_count == want_q && ls.physical_unitary_count == want_l,
                format!(
                    "qcqa {} (want {want_q}), lcqa n={n} {} (want {want_l})",
                    qs.physical_unitary_count, ls.physical_unitary_count
                ),
            ));
        }
    }

    let model = build_model(cfg, seed_index)?;
    let worst = model
        .segments
        .iter()
        .map(|s| s.unitarity_error())
        .fold(0.0, f64::max);
    checks.push(check(
        "segments-unitary",
        worst <= DEFAULT_TOLERANCES.unitary,
        format!(
            "max |U U^† - I| = {worst:e} over {} segments",
            model.segments.len()
        ),
    ));
    let res = CompiledReservoir::new(&model);
    let steps = cfg.lengths().total().min(VERIFY_MAX_STEPS);
    let washout = cfg.washout().min(steps / 5);
    let n = cfg
        .reset_lengths()
        .into_iter()
        .max()
        .unwrap_or(1)
        .min(washout.max(1));
    let u = uniform_input(steps, &mut rng)?;
    let mut opts = DriveOptions::with_washout(washout);
    opts.invariant_check_every = Some(100);
    opts.allow_partial_windows = true;
    let init = super::sweep::init_kind(cfg, &cfg.drive.init_state, seed_index)?;
    for (name, result) in [
        ("invariants/qcqa", res.run_qcqa(&u, init, &opts).map(|_| ())),
        (
            "invariants/lcqa",
            res.run_lcqa(&u, n, init, &opts).map(|_| ()),
        ),
    ] {
        checks.push(match result {
            Ok(()) => check(
                name,
                true,
                format!("{steps} steps, state checked every 100 rows"),
            ),
            Err(e) => check(name, false, e.to_string()),
        });
    }
    Ok(checks)
}

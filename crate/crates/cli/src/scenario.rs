//! Turns a parsed config into runnable objects: grid, wall conditions in the
//! internal (acute-angle) convention, energy model, well-prepared initial
//! data, and the optional reference flow.
//!
//! Obtuse contact angles are realized by the global phase swap `u -> -u`:
//! the solver always sees angles in `(0, pi/2]`, and every report is mapped
//! back to the caller's convention by negating the field first.

use crate::config::{ExperimentConfig, InitialKind, ReferenceKind, WallSpecCfg};
use crate::expr::Expr;
use acmcf_core::calibration::ReferenceFlow;
use acmcf_core::grid::{Grid, WallCondition, WallSpecs};
use acmcf_core::potentials::{BoundaryEnergy, EnergyModel};
use acmcf_core::solver::{PhaseField, Scheme, SolverConfig};
use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub struct Scenario {
    pub grid: Grid,
    /// Wall conditions in the internal convention (angles <= pi/2).
    pub walls: WallSpecs,
    /// Energy model of the (first) contact wall; Neumann model without one.
    pub model: EnergyModel,
    pub swapped: bool,
    /// Initial state in the internal convention.
    pub initial: PhaseField,
    /// Reference flow in the caller's convention.
    pub reference: Option<ReferenceFlow>,
    pub solver: SolverConfig,
    /// Wall angle parameter of the scenario's contact walls (user convention).
    pub contact_alpha: Option<f64>,
}

pub fn build(exp: &ExperimentConfig, seed: u64) -> Result<Scenario> {
    let grid = Grid::build(exp.lx, exp.ly, exp.h).map_err(|e| anyhow::anyhow!("{e}"))?;
    let swapped = exp.swapped();

    let mut contact_alpha = None;
    let mut wall_conds = Vec::with_capacity(4);
    for w in &exp.walls {
        wall_conds.push(match w {
            WallSpecCfg::Neumann => WallCondition::Neumann,
            WallSpecCfg::Contact(alpha) => {
                if contact_alpha.is_none() {
                    contact_alpha = Some(*alpha);
                }
                let internal = if swapped { PI - alpha } else { *alpha };
                WallCondition::Contact(
                    BoundaryEnergy::new(internal).map_err(|e| anyhow::anyhow!("{e}"))?,
                )
            }
        });
    }
    let walls = WallSpecs {
        left: wall_conds[0],
        right: wall_conds[1],
        bottom: wall_conds[2],
        top: wall_conds[3],
    };
    let model = match contact_alpha {
        Some(a) => EnergyModel::new(a).map_err(|e| anyhow::anyhow!("{e}"))?,
        None => EnergyModel::neumann(),
    };

    if exp.initial == InitialKind::TranslatorGraph && swapped {
        bail!("translator_graph requires acute contact angles (the downward mirror is out of scope)");
    }

    // interface perturbation: a Gaussian bump along the interface coordinate
    let amp = exp.perturb_amplitude;
    let bump_center: f64 = if amp != 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.gen_range(0.3..0.7)
    } else {
        0.5
    };
    let bump = move |s: f64, range: f64| -> f64 {
        let w = 0.12 * range;
        let d = (s - bump_center * range) / w;
        amp * (-d * d).exp()
    };

    // signed distance in the caller's convention (positive inside A)
    let (lx, ly, eps) = (exp.lx, exp.ly, exp.eps);
    let sd_user: Box<dyn Fn(f64, f64) -> f64 + Sync> = match exp.initial {
        InitialKind::Chord => {
            let x0 = exp.position;
            Box::new(move |x, y| x0 + bump(y, ly) - x)
        }
        InitialKind::HalfDisk => {
            let (cx, r0) = (exp.center_x, exp.radius);
            Box::new(move |x, y| {
                let phi = y.atan2(x - cx); // [0, pi] on the upper half plane
                r0 + bump(phi, PI) - ((x - cx).powi(2) + y * y).sqrt()
            })
        }
        InitialKind::TranslatorGraph => {
            let alpha = contact_alpha.context("translator needs contact walls")?;
            let flow = ReferenceFlow::strip_translator(lx, ly, alpha, exp.y0, eps)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            Box::new(move |x, y| flow.signed_distance(x, y - bump(x, lx), 0.0))
        }
        InitialKind::Expression => {
            let src = exp.levelset.as_ref().unwrap();
            let e = Expr::parse(src).context("cannot parse [initial] levelset")?;
            Box::new(move |x, y| e.eval(x, y))
        }
    };

    let initial_user = PhaseField::well_prepared(grid, eps, |x, y| sd_user(x, y));
    let initial = if swapped {
        initial_user.negated()
    } else {
        initial_user
    };

    let reference = match exp.reference {
        ReferenceKind::None => None,
        ReferenceKind::StationaryChord => Some(
            ReferenceFlow::stationary_chord(lx, ly, exp.position, eps)
                .map_err(|e| anyhow::anyhow!("{e}"))?,
        ),
        ReferenceKind::ShrinkingHalfDisk => Some(
            ReferenceFlow::shrinking_half_disk(lx, ly, exp.center_x, exp.radius, eps)
                .map_err(|e| anyhow::anyhow!("{e}"))?,
        ),
        ReferenceKind::StripTranslator => {
            if swapped {
                bail!("strip_translator reference requires acute contact angles");
            }
            let alpha = contact_alpha.context("translator reference needs contact walls")?;
            Some(
                ReferenceFlow::strip_translator(lx, ly, alpha, exp.y0, eps)
                    .map_err(|e| anyhow::anyhow!("{e}"))?,
            )
        }
    };
    // The chord/half-disk calibrations assume right-angle (Neumann-like)
    // walls; reject angle mismatches early.
    if matches!(
        exp.reference,
        ReferenceKind::StationaryChord | ReferenceKind::ShrinkingHalfDisk
    ) {
        if let Some(a) = contact_alpha {
            if (a - PI / 2.0).abs() > 1e-9 {
                bail!(
                    "reference {:?} requires walls at pi/2 (Neumann or contact:pi/2), got alpha = {a}",
                    exp.reference
                );
            }
        }
    }

    let solver = SolverConfig {
        tau: exp.tau.unwrap_or(eps * eps / 4.0),
        scheme: if exp.scheme == "stabilized" {
            Scheme::StabilizedSemiImplicit
        } else {
            Scheme::ConvexSplitting
        },
        stabilization: exp.stabilization,
        t_end: exp.t_end,
        snapshot_stride: exp.snapshot_stride,
        cg_tol: exp.cg_tol,
        cg_max_iters: exp.cg_max_iters,
    };

    Ok(Scenario {
        grid,
        walls,
        model,
        swapped,
        initial,
        reference,
        solver,
        contact_alpha,
    })
}

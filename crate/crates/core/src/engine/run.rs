//! The full run loop: iterate, record metrics at a stride, and maintain the
//! ergodic averages online.

use super::{compute_q, Engine, EngineConfig, EngineState};
use crate::diagnostics::{
    ergodic_points, conservation_residual, conservation_scale, mean_vector, snapshot, ErgodicAccumulator,
    MetricsRecord,
};
use crate::error::Result;
use crate::linalg::{dist_sq, norm_sq, pos};
use crate::problem::{FeasibilityReport, ProblemInstance, DEFAULT_FEASIBILITY_TOL};

/// Averages over one window `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicReport {
    pub start: usize,
    pub end: usize,
    pub y_tilde: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub phi_x_tilde: f64,
    pub phi_y_tilde: f64,
    /// `|y_tilde - x_tilde|^2`
    pub mismatch_sq: f64,
    /// `max_k max(0, g_k(y_tilde))`
    pub global_violation_y_tilde: f64,
    /// Mean step size over the window.
    pub gamma_bar: f64,
    /// `Phi(x_tilde) - phi_star` when the optimum is known.
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub records: usize,
    pub final_record: MetricsRecord,
    pub final_feasibility: FeasibilityReport,
    /// Largest conservation residual over every step, divided by `1 + max_i |g_i|_inf`.
    pub conservation_worst_ratio: f64,
    /// Largest excess over the subgradient-norm bound at recorded steps.
    pub q_bound_max_excess: Option<f64>,
    pub lipschitz: Option<f64>,
    /// Largest hard-set distance of any iterate.
    pub max_hard_distance: f64,
    /// Full window first, then one per checkpoint in increasing order; the horizon is always last.
    /// Windows with zero total step weight are left out.
    pub ergodic: Vec<ErgodicReport>,
}

impl RunSummary {
    /// The report for the window ending at `end` that starts at `end / 2`.
    pub fn half_window(&self, end: usize) -> Option<&ErgodicReport> {
        self.ergodic.iter().find(|r| r.end == end && r.start == end / 2)
    }

    /// The report for the window `[0, end]`.
    pub fn full_window(&self) -> Option<&ErgodicReport> {
        self.ergodic.iter().find(|r| r.start == 0)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: EngineState,
    pub records: Vec<MetricsRecord>,
    pub summary: RunSummary,
}

pub fn run(problem: &ProblemInstance, cfg: &EngineConfig) -> Result<RunOutput> {
    run_with(problem, cfg, |_| Ok(()))
}

struct Window {
    end: usize,
    acc: ErgodicAccumulator,
}

/// Runs `cfg.horizon` rounds, handing each metrics record to `on_record` as it
/// is produced.
pub fn run_with<F>(problem: &ProblemInstance, cfg: &EngineConfig, mut on_record: F) -> Result<RunOutput>
where
    F: FnMut(&MetricsRecord) -> Result<()>,
{
    let mut engine = Engine::new(problem, cfg)?;
    let horizon = cfg.horizon;
    let dim = problem.total_dim();
    let lipschitz = problem.lipschitz_constant();
    let k_global = problem.num_global() as f64;
    let mu = problem.mu();

    let mut windows = vec![Window {
        end: horizon,
        acc: ErgodicAccumulator::new(0, dim),
    }];
    let mut ends: Vec<usize> = cfg
        .ergodic_checkpoints
        .iter()
        .copied()
        .filter(|c| *c <= horizon)
        .collect();
    ends.push(horizon);
    ends.sort_unstable();
    ends.dedup();
    for end in ends {
        let start = end / 2;
        if start == 0 {
            continue;
        }
        windows.push(Window {
            end,
            acc: ErgodicAccumulator::new(start, dim),
        });
    }
    windows[1..].sort_by_key(|w| w.end);

    let mut records = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    let mut q_bound_max: Option<f64> = None;
    let mut max_hard_distance: f64 = 0.0;

    for t in 0..=horizon {
        let state = engine.state();
        let gamma = cfg.steps.gamma(t);

        let g: Vec<Vec<f64>> = state.agents.iter().map(|a| a.g_cached.clone()).collect();
        let e = state.estimates();
        worst_ratio = worst_ratio.max(conservation_residual(&e, &g) / conservation_scale(&g));
        for (a, s) in problem.agents().iter().zip(&state.agents) {
            max_hard_distance = max_hard_distance.max(a.hard_set().distance(&s.y)?);
        }

        let record_now = t % cfg.metric_stride == 0 || t == horizon;
        let ergodic_now = t % cfg.ergodic_stride == 0
            && windows.iter().any(|w| w.acc.start <= t && t <= w.end);
        if record_now || ergodic_now {
            let snap = snapshot(problem, state, gamma, cfg.projection_tol)?;
            if ergodic_now {
                for w in windows.iter_mut().filter(|w| w.acc.start <= t && t <= w.end) {
                    w.acc.push(t, gamma, &snap.y, &snap.x);
                }
            }
            if record_now {
                let mut record = snap.record;
                if let Some(l) = lipschitz {
                    let excess = q_bound_excess(problem, state, &e, l, mu, k_global);
                    record.q_bound_excess = Some(excess);
                    q_bound_max = Some(q_bound_max.map_or(excess, |m| m.max(excess)));
                }
                on_record(&record)?;
                records.push(record);
            }
        }

        if t < horizon {
            engine.step()?;
        }
    }

    let state = engine.into_state();
    let final_record = records.last().cloned().expect("the horizon is always recorded");
    let final_feasibility =
        problem.feasibility_report_blocks(&state.y_blocks(), DEFAULT_FEASIBILITY_TOL)?;
    let mut ergodic = Vec::with_capacity(windows.len());
    for w in &windows {
        // Frozen runs put no step weight on any window.
        if !(w.acc.weight() > 0.0) {
            continue;
        }
        ergodic.push(ergodic_report(problem, &w.acc, w.end, cfg.phi_star)?);
    }
    let summary = RunSummary {
        records: records.len(),
        final_record,
        final_feasibility,
        conservation_worst_ratio: worst_ratio,
        q_bound_max_excess: q_bound_max,
        lipschitz,
        max_hard_distance,
        ergodic,
    };
    Ok(RunOutput {
        state,
        records,
        summary,
    })
}

fn ergodic_report(
    p: &ProblemInstance,
    acc: &ErgodicAccumulator,
    end: usize,
    phi_star: Option<f64>,
) -> Result<ErgodicReport> {
    let (y, x) = ergodic_points(acc)?;
    let phi_x = p.penalty_objective(&x)?;
    let viol = p.global_constraint(&y)?.iter().map(|v| pos(*v)).fold(0.0, f64::max);
    Ok(ErgodicReport {
        start: acc.start,
        end,
        phi_y_tilde: p.penalty_objective(&y)?,
        mismatch_sq: dist_sq(&y, &x),
        global_violation_y_tilde: viol,
        gamma_bar: acc.mean_gamma(),
        gap: phi_star.map(|s| phi_x - s),
        phi_x_tilde: phi_x,
        y_tilde: y,
        x_tilde: x,
    })
}

fn q_bound_excess(
    p: &ProblemInstance,
    state: &EngineState,
    e: &[Vec<f64>],
    l: f64,
    mu: f64,
    k: f64,
) -> f64 {
    let e_bar = mean_vector(e);
    p.agents()
        .iter()
        .zip(&state.agents)
        .map(|(a, s)| {
            let q = compute_q(a, &s.y, &s.e, mu);
            norm_sq(&q) - 2.0 * l * l * (1.0 + mu * mu * k * dist_sq(&s.e, &e_bar))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{NoiseModel, StepSizeSchedule};
    use crate::network::WeightSchedule;
    use crate::problem::{Affine, AgentSpec, Quadratic, SimpleSet, SoftConstraintSet};
    use std::sync::Arc;

    fn problem() -> ProblemInstance {
        let agents = [1.0, 4.0]
            .iter()
            .map(|a| {
                AgentSpec::new(
                    Arc::new(Quadratic::squared_distance(&[*a], 1.0).with_lipschitz(20.0)),
                    vec![Arc::new(Affine::new(vec![1.0], -1.0))],
                    SimpleSet::cube(1, 0.0, 5.0).unwrap(),
                    SoftConstraintSet::new(vec![Arc::new(Affine::new(vec![1.0], -3.0))]),
                )
                .unwrap()
            })
            .collect();
        ProblemInstance::new(agents, 1, 2.0).unwrap()
    }

    #[test]
    fn zero_horizon_records_once() {
        let p = problem();
        let mut cfg = EngineConfig::new(&p, WeightSchedule::RingCycle { n: 2 });
        cfg.horizon = 0;
        let out = run(&p, &cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].t, 0);
        assert_eq!(out.state.t, 0);
    }

    #[test]
    fn row_count_and_windows() {
        let p = problem();
        let mut cfg = EngineConfig::new(&p, WeightSchedule::RingCycle { n: 2 });
        cfg.horizon = 250;
        cfg.metric_stride = 100;
        cfg.ergodic_checkpoints = vec![100, 1000];
        let out = run(&p, &cfg).unwrap();
        let ts: Vec<usize> = out.records.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0, 100, 200, 250]);
        let windows: Vec<(usize, usize)> =
            out.summary.ergodic.iter().map(|r| (r.start, r.end)).collect();
        assert_eq!(windows, vec![(0, 250), (50, 100), (125, 250)]);
        assert!(out.summary.conservation_worst_ratio <= 1e-12);
        assert!(out.summary.q_bound_max_excess.unwrap() <= 1e-6);
        assert!(out.summary.max_hard_distance <= 1e-10);
    }

    #[test]
    fn callback_sees_every_record_and_can_abort() {
        let p = problem();
        let mut cfg = EngineConfig::new(&p, WeightSchedule::RingCycle { n: 2 });
        cfg.horizon = 30;
        cfg.metric_stride = 10;
        let mut seen = Vec::new();
        run_with(&p, &cfg, |r| {
            seen.push(r.t);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0, 10, 20, 30]);
        let err = run_with(&p, &cfg, |_| Err(crate::Error::Config("stop".into())));
        assert!(err.is_err());
    }

    #[test]
    fn full_window_weights_match_manual_average() {
        let p = problem();
        let mut cfg = EngineConfig::new(&p, WeightSchedule::RingCycle { n: 2 });
        cfg.horizon = 20;
        cfg.noise = NoiseModel::gaussian(0.3);
        cfg.steps = StepSizeSchedule::Polynomial { gamma0: 0.2, alpha: 0.7 };
        let out = run(&p, &cfg).unwrap();

        let mut engine = Engine::new(&p, &cfg).unwrap();
        let mut sum = vec![0.0; 2];
        let mut weight = 0.0;
        for t in 0..=20 {
            let g = cfg.steps.gamma(t);
            for (s, a) in sum.iter_mut().zip(&engine.state().agents) {
                *s += g * a.y[0];
            }
            weight += g;
            if t < 20 {
                engine.step().unwrap();
            }
        }
        let full = out.summary.full_window().unwrap();
        for (a, b) in full.y_tilde.iter().zip(&sum) {
            assert!((a - b / weight).abs() < 1e-12);
        }
    }
}

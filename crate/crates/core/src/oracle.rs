//! Reference computations used to check the distributed iteration: feasible-set
//! projections, a centralized solver for the penalty surrogate, a brute-force
//! grid cross-check, and sampling tests of the function oracles.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dist, dist_sq, dot, norm, norm_sq, pos};
use crate::problem::{AgentSpec, ConvexFn, Oracle, ProblemInstance, SimpleSet};

pub const DEFAULT_PROJECTION_MAX_ITERS: usize = 100_000;

/// Cycles without progress on a still-infeasible point before giving up.
const STALL_CYCLES: usize = 10;

/// Projection of `x` onto `hard ∩ {c_k <= 0}` to within `tol`.
///
/// Affine soft constraints use Dykstra's algorithm over exact halfspace
/// projections, which converges to the Euclidean projection. Otherwise the
/// constraints are visited cyclically with full Polyak corrections, which
/// yields a feasible point but not necessarily the nearest one. Each cycle ends
/// on the hard-set projection, so the result lies in the hard set exactly.
pub fn exact_project_feasible(agent: &AgentSpec, x: &[f64], tol: f64) -> Result<Vec<f64>> {
    exact_project_feasible_with(agent, x, tol, DEFAULT_PROJECTION_MAX_ITERS)
}

pub fn exact_project_feasible_with(
    agent: &AgentSpec,
    x: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    if x.len() != agent.dim() {
        return Err(Error::dim("feasible projection", agent.dim(), x.len()));
    }
    let hard = agent.hard_set();
    let soft = agent.soft_set();
    if soft.is_empty() {
        return hard.project(x);
    }
    let dykstra = soft.all_affine();
    let m = soft.len();
    let dim = x.len();
    let mut cur = x.to_vec();
    // Dykstra increments; index m is the hard set.
    let mut incr = vec![vec![0.0; dim]; if dykstra { m + 1 } else { 0 }];
    let mut stalled = 0;
    for _ in 0..max_iters {
        let start = cur.clone();
        // Dykstra can sit on the same cycle-end point while its increments
        // are still moving, so those count as progress too.
        let mut incr_moved = 0.0;
        for (k, c) in soft.iter().enumerate() {
            if dykstra {
                let mut y = cur.clone();
                axpy(1.0, &incr[k], &mut y);
                let proj = polyak_correction(c, &y, k)?;
                let next = crate::linalg::sub(&y, &proj);
                incr_moved += dist(&incr[k], &next);
                incr[k] = next;
                cur = proj;
            } else {
                cur = polyak_correction(c, &cur, k)?;
            }
        }
        if dykstra {
            let mut y = cur.clone();
            axpy(1.0, &incr[m], &mut y);
            let mut proj = y.clone();
            hard.project_in_place(&mut proj);
            let next = crate::linalg::sub(&y, &proj);
            incr_moved += dist(&incr[m], &next);
            incr[m] = next;
            cur = proj;
        } else {
            hard.project_in_place(&mut cur);
        }

        let moved = dist(&start, &cur) + incr_moved;
        let violation = soft.max_violation(&cur);
        if moved <= tol {
            if violation <= tol {
                return Ok(cur);
            }
            stalled += 1;
            if stalled >= STALL_CYCLES {
                return Err(Error::Infeasible(format!(
                    "alternating projections stalled with soft violation {violation:e}"
                )));
            }
        } else {
            stalled = 0;
        }
    }
    Err(Error::Infeasible(format!(
        "no feasible point within {tol:e} after {max_iters} projection cycles"
    )))
}

/// `x - max(0, c(x)) / |d|^2 * d`, exact for affine `c`.
fn polyak_correction(c: &Oracle, x: &[f64], k: usize) -> Result<Vec<f64>> {
    let v = c.value(x);
    if v <= 0.0 {
        return Ok(x.to_vec());
    }
    let d = c.subgradient(x);
    let dn = norm_sq(&d);
    if dn == 0.0 {
        return Err(Error::Infeasible(format!(
            "soft constraint {k} is positive ({v:e}) with a zero subgradient"
        )));
    }
    let mut out = x.to_vec();
    axpy(-v / dn, &d, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub tol: f64,
    pub restarts: usize,
    pub gamma0: f64,
    pub max_iters: usize,
    pub min_iters: usize,
    pub check_every: usize,
    pub seed: u64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            restarts: 3,
            gamma0: 1.0,
            max_iters: 1_000_000,
            min_iters: 1_000,
            check_every: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// Length of the last projected step of the best restart.
    pub final_step_norm: f64,
    /// Largest soft-constraint violation or hard-set distance of `y_star`.
    pub feasibility_residual: f64,
    /// `max - min` of the restart optima.
    pub restart_spread: f64,
    pub restart_values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub y_star: Vec<f64>,
    pub phi_star: f64,
    pub certificate: Certificate,
}

struct RestartResult {
    y: Vec<Vec<f64>>,
    phi: f64,
    step_norm: f64,
    iterations: usize,
    converged: bool,
}

/// Centralized noise-free projected subgradient on the surrogate with
/// `gamma_t = gamma0 / sqrt(t + 1)`, from several random starts.
pub fn solve_central(p: &ProblemInstance, settings: &OracleSettings) -> Result<OracleSolution> {
    if settings.restarts == 0 {
        return Err(Error::Config("the oracle needs at least one restart".into()));
    }
    let proj_tol = settings.tol.min(1e-10);
    let mut results = Vec::with_capacity(settings.restarts);
    for r in 0..settings.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(r as u64);
        let start = p
            .agents()
            .iter()
            .map(|a| exact_project_feasible(a, &a.hard_set().sample(&mut rng), proj_tol))
            .collect::<Result<Vec<_>>>()?;
        results.push(descend(p, start, settings, proj_tol)?);
    }
    let values: Vec<f64> = results.iter().map(|r| r.phi).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let limit = 100.0 * settings.tol;
    if spread > limit {
        return Err(Error::UnreliableOracle { spread, limit });
    }
    let best = results
        .into_iter()
        .min_by(|a, b| a.phi.total_cmp(&b.phi))
        .expect("at least one restart");
    let report = p.feasibility_report_blocks(&best.y, f64::INFINITY)?;
    let feasibility_residual = report.max_soft_violation().max(report.max_hard_distance());
    Ok(OracleSolution {
        y_star: p.stack(&best.y),
        phi_star: best.phi,
        certificate: Certificate {
            final_step_norm: best.step_norm,
            feasibility_residual,
            restart_spread: spread,
            restart_values: values,
            iterations: best.iterations,
            converged: best.converged,
        },
    })
}

fn descend(
    p: &ProblemInstance,
    mut y: Vec<Vec<f64>>,
    s: &OracleSettings,
    proj_tol: f64,
) -> Result<RestartResult> {
    let mut best_phi = p.penalty_objective_blocks(&y)?;
    let mut best_y = y.clone();
    let mut prev_check = best_phi;
    let mut window_sum: Vec<Vec<f64>> = y.iter().map(|b| vec![0.0; b.len()]).collect();
    let mut window_weight = 0.0;
    let mut step_norm = 0.0;
    let check_every = s.check_every.max(1);
    for t in 0..s.max_iters {
        let gamma = s.gamma0 / ((t + 1) as f64).sqrt();
        let d = p.penalty_subgradient_blocks(&y)?;
        let mut moved = 0.0;
        for ((yi, di), a) in y.iter_mut().zip(&d).zip(p.agents()) {
            let mut x = yi.clone();
            axpy(-gamma, di, &mut x);
            let next = exact_project_feasible(a, &x, proj_tol)?;
            moved += dist_sq(yi, &next);
            *yi = next;
        }
        step_norm = moved.sqrt();
        for (acc, yi) in window_sum.iter_mut().zip(&y) {
            axpy(gamma, yi, acc);
        }
        window_weight += gamma;

        if (t + 1) % check_every == 0 {
            let phi = p.penalty_objective_blocks(&y)?;
            if phi < best_phi {
                best_phi = phi;
                best_y = y.clone();
            }
            // The weighted average of feasible iterates is feasible.
            let avg: Vec<Vec<f64>> = window_sum
                .iter()
                .map(|v| v.iter().map(|x| x / window_weight).collect())
                .collect();
            let phi_avg = p.penalty_objective_blocks(&avg)?;
            if phi_avg < best_phi {
                best_phi = phi_avg;
                best_y = avg;
            }
            window_sum.iter_mut().for_each(|v| v.fill(0.0));
            window_weight = 0.0;

            let settled = (phi - prev_check).abs() <= s.tol && (phi - best_phi).abs() <= s.tol;
            prev_check = phi;
            if t + 1 >= s.min_iters && settled {
                return Ok(RestartResult {
                    y: best_y,
                    phi: best_phi,
                    step_norm,
                    iterations: t + 1,
                    converged: true,
                });
            }
        }
    }
    Ok(RestartResult {
        y: best_y,
        phi: best_phi,
        step_norm,
        iterations: s.max_iters,
        converged: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub phi: f64,
    pub point: Vec<f64>,
    pub evaluated: usize,
    pub feasible_points: usize,
    /// Grid spacing per coordinate at the final level.
    pub spacing: Vec<f64>,
}

pub const GRID_MAX_DIM: usize = 3;

/// Brute-force minimum of the surrogate over `resolution + 1` evenly spaced
/// values per coordinate of the hard boxes, skipping points that violate a
/// soft constraint. `resolution = 1` visits only the box corners.
pub fn grid_oracle(p: &ProblemInstance, resolution: usize) -> Result<f64> {
    Ok(grid_search(p, resolution, 0)?.phi)
}

/// Grid search followed by `refinements` zoom levels, each re-gridding
/// `±2` cells around the incumbent at the same resolution.
pub fn grid_search(p: &ProblemInstance, resolution: usize, refinements: usize) -> Result<GridResult> {
    if resolution == 0 {
        return Err(Error::Config("grid resolution must be >= 1".into()));
    }
    let dim = p.total_dim();
    if dim > GRID_MAX_DIM {
        return Err(Error::NotApplicable(format!(
            "grid oracle supports total dimension <= {GRID_MAX_DIM}, got {dim}"
        )));
    }
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    for (i, a) in p.agents().iter().enumerate() {
        let (l, h) = box_bounds(a.hard_set()).ok_or_else(|| {
            Error::NotApplicable(format!("agent {i}: hard set is not a bounded box"))
        })?;
        lo.extend(l);
        hi.extend(h);
    }
    let outer_lo = lo.clone();
    let outer_hi = hi.clone();
    let mut best = scan(p, &lo, &hi, resolution)?;
    for _ in 0..refinements {
        for j in 0..dim {
            let h = best.spacing[j];
            lo[j] = (best.point[j] - 2.0 * h).max(outer_lo[j]);
            hi[j] = (best.point[j] + 2.0 * h).min(outer_hi[j]);
        }
        let next = scan(p, &lo, &hi, resolution)?;
        let evaluated = best.evaluated + next.evaluated;
        let feasible = best.feasible_points + next.feasible_points;
        if next.phi <= best.phi {
            best = next;
        } else {
            best.spacing = next.spacing;
        }
        best.evaluated = evaluated;
        best.feasible_points = feasible;
    }
    Ok(best)
}

fn box_bounds(s: &SimpleSet) -> Option<(Vec<f64>, Vec<f64>)> {
    match s {
        SimpleSet::Box { lo, hi } => Some((lo.clone(), hi.clone())),
        SimpleSet::Product(parts) => {
            let mut lo = Vec::new();
            let mut hi = Vec::new();
            for part in parts {
                let (l, h) = box_bounds(part)?;
                lo.extend(l);
                hi.extend(h);
            }
            Some((lo, hi))
        }
        _ => None,
    }
}

fn scan(p: &ProblemInstance, lo: &[f64], hi: &[f64], resolution: usize) -> Result<GridResult> {
    let dim = lo.len();
    let spacing: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| (h - l) / resolution as f64).collect();
    let per_axis = resolution + 1;
    let total = per_axis.pow(dim as u32);
    let mut idx = vec![0usize; dim];
    let mut point = lo.to_vec();
    let mut best_phi = f64::INFINITY;
    let mut best_point = Vec::new();
    let mut feasible_points = 0;
    for _ in 0..total {
        for j in 0..dim {
            point[j] = if idx[j] == resolution {
                hi[j]
            } else {
                lo[j] + idx[j] as f64 * spacing[j]
            };
        }
        let blocks = p.split(&point)?;
        let feasible = p
            .agents()
            .iter()
            .zip(&blocks)
            .all(|(a, b)| a.soft_set().iter().all(|c| c.value(b) <= 0.0));
        if feasible {
            feasible_points += 1;
            let phi = p.penalty_objective_blocks(&blocks)?;
            if phi < best_phi {
                best_phi = phi;
                best_point = point.clone();
            }
        }
        for j in 0..dim {
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
        }
    }
    if feasible_points == 0 {
        return Err(Error::Infeasible(format!(
            "none of the {total} grid points satisfies the soft constraints"
        )));
    }
    Ok(GridResult {
        phi: best_phi,
        point: best_point,
        evaluated: total,
        feasible_points,
        spacing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionRole {
    Objective,
    Coupling(usize),
    Soft(usize),
}

impl FunctionRole {
    /// The standing assumption the function falls under.
    pub fn assumption(&self) -> &'static str {
        match self {
            FunctionRole::Objective | FunctionRole::Coupling(_) => "Assumption 1-b",
            FunctionRole::Soft(_) => "Assumption 1-c",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `f(x) < f(y) + d(y).(x - y)`
    SubgradientInequality,
    /// `|f(x) - f(y)| > L |x - y|`
    Lipschitz,
    /// `|d(y)| > L`
    SubgradientNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleViolation {
    pub agent: usize,
    pub role: FunctionRole,
    pub kind: ViolationKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleValidation {
    pub pairs_checked: usize,
    /// First witness per (agent, function, kind).
    pub violations: Vec<OracleViolation>,
    pub violation_count: usize,
}

impl OracleValidation {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Samples point pairs in each hard set and checks the subgradient inequality
/// and any declared Lipschitz bound for every function of every agent.
pub fn validate_oracles(p: &ProblemInstance, samples: usize, seed: u64) -> OracleValidation {
    let mut report = OracleValidation::default();
    for (i, a) in p.agents().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut functions: Vec<(FunctionRole, &Oracle)> = vec![(FunctionRole::Objective, a.objective())];
        functions.extend(a.coupling().iter().enumerate().map(|(k, g)| (FunctionRole::Coupling(k), g)));
        functions.extend(a.soft_set().iter().enumerate().map(|(k, c)| (FunctionRole::Soft(k), c)));
        for _ in 0..samples {
            let x = a.hard_set().sample(&mut rng);
            let y = a.hard_set().sample(&mut rng);
            report.pairs_checked += 1;
            for (role, f) in &functions {
                for (kind, excess) in check_pair(f.as_ref(), &x, &y) {
                    report.violation_count += 1;
                    let seen = report
                        .violations
                        .iter()
                        .any(|v| v.agent == i && v.role == *role && v.kind == kind);
                    if !seen {
                        report.violations.push(OracleViolation {
                            agent: i,
                            role: *role,
                            kind,
                            x: x.clone(),
                            y: y.clone(),
                            excess,
                        });
                    }
                }
            }
        }
    }
    report
}

fn check_pair(f: &dyn ConvexFn, x: &[f64], y: &[f64]) -> Vec<(ViolationKind, f64)> {
    let mut out = Vec::new();
    let fx = f.value(x);
    let fy = f.value(y);
    let dy = f.subgradient(y);
    let tol = 1e-9 * (1.0 + fx.abs() + fy.abs());
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let linear = fy + dot(&dy, &diff);
    if fx < linear - tol {
        out.push((ViolationKind::SubgradientInequality, linear - fx));
    }
    if let Some(l) = f.lipschitz_bound() {
        let gap = (fx - fy).abs() - l * norm(&diff);
        if gap > tol {
            out.push((ViolationKind::Lipschitz, gap));
        }
        let over = norm(&dy) - l;
        if over > 1e-9 * (1.0 + l) {
            out.push((ViolationKind::SubgradientNorm, over));
        }
    }
    out
}

/// Largest soft violation over an agent's constraints; zero when feasible.
pub fn soft_violation(agent: &AgentSpec, y: &[f64]) -> f64 {
    agent.soft_set().iter().map(|c| pos(c.value(y))).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Affine, FnOracle, Quadratic, SoftConstraintSet, WeightedL1};
    use std::sync::Arc;

    fn agent_with(
        objective: Oracle,
        hard: SimpleSet,
        soft: Vec<Oracle>,
        coupling: Oracle,
    ) -> AgentSpec {
        AgentSpec::new(objective, vec![coupling], hard, SoftConstraintSet::new(soft)).unwrap()
    }

    fn interval_agent(lo: f64, hi: f64, soft: Vec<Oracle>) -> AgentSpec {
        agent_with(
            Arc::new(Quadratic::squared_distance(&[3.0], 1.0)),
            SimpleSet::cube(1, lo, hi).unwrap(),
            soft,
            Arc::new(Affine::new(vec![0.0], -1.0)),
        )
    }

    #[test]
    fn feasible_point_unchanged() {
        let a = interval_agent(0.0, 2.0, vec![Arc::new(Affine::new(vec![1.0], -1.0))]);
        assert_eq!(exact_project_feasible(&a, &[0.5], 1e-10).unwrap(), vec![0.5]);
    }

    #[test]
    fn closed_form_interval() {
        let a = interval_agent(0.0, 2.0, vec![Arc::new(Affine::new(vec![1.0], -1.0))]);
        let p = exact_project_feasible(&a, &[5.0], 1e-10).unwrap();
        assert!((p[0] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn empty_intersection_reported() {
        let a = interval_agent(0.0, 1.0, vec![Arc::new(Affine::new(vec![1.0], 10.0))]);
        assert!(matches!(
            exact_project_feasible(&a, &[0.5], 1e-10),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn dykstra_finds_euclidean_projection_on_polytope() {
        // Unit box intersected with x + y <= 1: projection of (2, 2) is (0.5, 0.5),
        // while plain alternating projections would stop elsewhere for some inputs.
        let a = AgentSpec::new(
            Arc::new(Quadratic::squared_distance(&[0.0, 0.0], 1.0)),
            vec![Arc::new(Affine::new(vec![1.0, 0.0], 0.0))],
            SimpleSet::cube(2, 0.0, 1.0).unwrap(),
            SoftConstraintSet::new(vec![Arc::new(Affine::new(vec![1.0, 1.0], -1.0))]),
        )
        .unwrap();
        let p = exact_project_feasible(&a, &[2.0, 2.0], 1e-12).unwrap();
        assert!(dist(&p, &[0.5, 0.5]) < 1e-9, "{p:?}");
        // (1.5, -0.5): true projection onto the triangle is (1, 0).
        let p = exact_project_feasible(&a, &[1.5, -0.5], 1e-12).unwrap();
        assert!(dist(&p, &[1.0, 0.0]) < 1e-9, "{p:?}");
        // Brute-force check on a fine grid of the triangle.
        let target = [0.9, 0.7];
        let p = exact_project_feasible(&a, &target, 1e-12).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 - i {
                let q = [i as f64 / 400.0, j as f64 / 400.0];
                best = best.min(dist(&q, &target));
            }
        }
        assert!((dist(&p, &target) - best).abs() < 5e-3);
        assert!(dist(&p, &target) <= best + 1e-12);
    }

    #[test]
    fn projection_is_fixed_point() {
        let disc = FnOracle::new(
            2,
            |x| x[0] * x[0] + x[1] * x[1] - 1.0,
            |x| vec![2.0 * x[0], 2.0 * x[1]],
        );
        let a = agent_with(
            Arc::new(Quadratic::squared_distance(&[0.0, 0.0], 1.0)),
            SimpleSet::cube(2, -0.5, 2.0).unwrap(),
            vec![Arc::new(disc), Arc::new(Affine::new(vec![-1.0, 1.0], -0.2))],
            Arc::new(Affine::new(vec![1.0, 0.0], 0.0)),
        );
        for x in [[2.0, 2.0], [-3.0, 1.0], [0.1, 0.1]] {
            let p = exact_project_feasible(&a, &x, 1e-10).unwrap();
            assert!(soft_violation(&a, &p) <= 1e-10);
            let again = exact_project_feasible(&a, &p, 1e-10).unwrap();
            assert!(dist(&p, &again) <= 1e-10);
        }
    }

    #[test]
    fn dykstra_many_halfspaces_reaches_feasibility() {
        // Used to be reported as stalled while the increments were still moving.
        let p = crate::library::make_many_soft_constraints(3, 12, 73).unwrap();
        for a in p.agents() {
            for x in [[5.0, 5.0], [-5.0, 5.0], [5.0, -5.0], [-5.0, -5.0]] {
                let y = exact_project_feasible(a, &x, 1e-10).unwrap();
                assert!(soft_violation(a, &y) <= 1e-10);
                assert_eq!(a.hard_set().distance(&y).unwrap(), 0.0);
            }
        }
    }

    fn single(objective: Oracle, lo: f64, hi: f64, mu: f64) -> ProblemInstance {
        let a = agent_with(
            objective,
            SimpleSet::cube(1, lo, hi).unwrap(),
            vec![],
            Arc::new(Affine::new(vec![0.0], -1.0)),
        );
        ProblemInstance::new(vec![a], 1, mu).unwrap()
    }

    #[test]
    fn central_clamped_minimizer() {
        let p = single(Arc::new(Quadratic::squared_distance(&[3.0], 1.0)), 0.0, 1.0, 1.0);
        let s = solve_central(&p, &OracleSettings::default()).unwrap();
        assert!((s.y_star[0] - 1.0).abs() <= 1e-7);
        assert!((s.phi_star - 4.0).abs() <= 10.0 * 1e-8);
        assert!(s.certificate.converged);
        assert!(s.certificate.restart_spread <= 1e-6);
        assert_eq!(s.certificate.restart_values.len(), 3);
    }

    fn decoupled(mu: f64, budget: f64) -> (ProblemInstance, Vec<f64>) {
        // phi_i = (y - a_i)^2 on [0, 10], soft y <= u_i, coupling y_i - budget/3.
        let a = [6.0, 7.0, 2.0];
        let u = [5.0, 8.0, 9.0];
        let agents = (0..3)
            .map(|i| {
                agent_with(
                    Arc::new(Quadratic::squared_distance(&[a[i]], 1.0)),
                    SimpleSet::cube(1, 0.0, 10.0).unwrap(),
                    vec![Arc::new(Affine::new(vec![1.0], -u[i]))],
                    Arc::new(Affine::new(vec![1.0], -budget / 3.0)),
                )
            })
            .collect();
        let per_agent = (0..3).map(|i| (a[i] as f64).min(u[i])).collect();
        (ProblemInstance::new(agents, 1, mu).unwrap(), per_agent)
    }

    #[test]
    fn inactive_global_constraint_matches_independent_solutions() {
        let (p, expected) = decoupled(10.0, 100.0);
        let s = solve_central(&p, &OracleSettings::default()).unwrap();
        for (y, e) in s.y_star.iter().zip(&expected) {
            assert!((y - e).abs() < 1e-6, "{y} vs {e}");
        }
        // Only the first agent is held below its target, by its cap of 5.
        assert!((s.phi_star - 1.0).abs() < 1e-7);
    }

    #[test]
    fn zero_penalty_decouples() {
        let (p, expected) = decoupled(0.0, 0.0);
        let s = solve_central(&p, &OracleSettings::default()).unwrap();
        let closed: f64 = [6.0, 7.0, 2.0]
            .iter()
            .zip(&expected)
            .map(|(a, y)| (y - a).powi(2))
            .sum();
        assert!((s.phi_star - closed).abs() < 1e-7);
    }

    #[test]
    fn grid_agrees_with_central_in_1d() {
        let p = single(Arc::new(Quadratic::squared_distance(&[0.37], 2.0)), -1.0, 1.0, 1.0);
        let central = solve_central(&p, &OracleSettings::default()).unwrap();
        let grid = grid_oracle(&p, 1_000_000).unwrap();
        assert!((grid - central.phi_star).abs() < 1e-4);
        assert!(grid >= central.phi_star - 1e-9);
    }

    #[test]
    fn grid_resolution_one_visits_corners() {
        let p = single(Arc::new(Quadratic::squared_distance(&[0.4], 1.0)), 0.0, 1.0, 1.0);
        let r = grid_search(&p, 1, 0).unwrap();
        assert_eq!(r.evaluated, 2);
        assert_eq!(r.point, vec![0.0]);
        assert!((r.phi - 0.16).abs() < 1e-15);
    }

    #[test]
    fn grid_errors() {
        let a = interval_agent(0.0, 1.0, vec![Arc::new(Affine::new(vec![1.0], 10.0))]);
        let p = ProblemInstance::new(vec![a], 1, 1.0).unwrap();
        assert!(matches!(grid_oracle(&p, 10), Err(Error::Infeasible(_))));

        let ball = agent_with(
            Arc::new(Quadratic::squared_distance(&[0.0], 1.0)),
            SimpleSet::ball(vec![0.0], 1.0).unwrap(),
            vec![],
            Arc::new(Affine::new(vec![1.0], 0.0)),
        );
        let p = ProblemInstance::new(vec![ball], 1, 1.0).unwrap();
        assert!(matches!(grid_oracle(&p, 10), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn validate_affine_clean() {
        let p = single(Arc::new(Affine::new(vec![2.0], 1.0)), -3.0, 3.0, 1.0);
        let r = validate_oracles(&p, 500, 1);
        assert!(r.passed());
        assert_eq!(r.pairs_checked, 500);
    }

    #[test]
    fn validate_catches_concave_objective() {
        let concave = FnOracle::new(1, |x| -x[0] * x[0], |x| vec![-2.0 * x[0]]);
        let p = single(Arc::new(concave), -3.0, 3.0, 1.0);
        let r = validate_oracles(&p, 200, 1);
        assert!(!r.passed());
        let v = &r.violations[0];
        assert_eq!(v.role, FunctionRole::Objective);
        assert_eq!(v.kind, ViolationKind::SubgradientInequality);
        assert!((v.excess - (v.x[0] - v.y[0]).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn validate_catches_understated_lipschitz() {
        let steep = Affine::new(vec![2.0], 0.0);
        let declared = FnOracle::new(1, move |x| steep.value(x), |_| vec![2.0]).with_lipschitz(1.0);
        let p = single(Arc::new(declared), -3.0, 3.0, 1.0);
        let r = validate_oracles(&p, 50, 2);
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::Lipschitz));
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::SubgradientNorm));
    }

    #[test]
    fn library_functions_satisfy_subgradient_inequality() {
        use crate::problem::MaxAffine;
        let fns: Vec<Oracle> = vec![
            Arc::new(Quadratic::new(vec![2.0, 0.5, 0.5, 1.0], vec![1.0, -1.0], 0.3).unwrap()),
            Arc::new(WeightedL1::new(vec![1.0, 2.0], vec![0.0, 0.5]).unwrap()),
            Arc::new(
                MaxAffine::new(vec![
                    Affine::new(vec![1.0, 0.0], 0.0),
                    Affine::new(vec![0.0, 1.0], 0.0),
                    Affine::new(vec![-1.0, -1.0], 0.5),
                ])
                .unwrap(),
            ),
            Arc::new(Affine::new(vec![3.0, -1.0], 2.0)),
        ];
        for f in fns {
            let a = AgentSpec::new(
                Arc::clone(&f),
                vec![Arc::clone(&f)],
                SimpleSet::cube(2, -2.0, 2.0).unwrap(),
                SoftConstraintSet::new(vec![f]),
            )
            .unwrap();
            let p = ProblemInstance::new(vec![a], 1, 1.0).unwrap();
            let r = validate_oracles(&p, 2000, 5);
            assert!(r.passed(), "{:?}", r.violations);
        }
    }
}

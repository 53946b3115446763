//! Heuristic lower bounds on the quantum value of oblivious games.
//!
//! Each restart alternates two steps.
//!
//! * Measurements: for fixed preparations Bob's POVMs are refined with the
//!   fixed-point map `M_b ← Λ⁻¹ A_b M_b A_b Λ⁻¹`, `Λ = (Σ_b A_b M_b A_b)^{1/2}`,
//!   where `A_b` is the payoff-weighted sum of preparations shifted to be
//!   positive definite. Updates are kept only when they raise the value.
//! * Preparations: projected gradient steps with a quadratic penalty on the
//!   distance to the obliviousness subspace. Iterates are projected onto
//!   {density matrices} ∩ {oblivious families} with Dykstra's alternating
//!   scheme. Before a candidate is scored it is repaired exactly: affine
//!   projection, then mixing with `I/D` just enough to restore positivity.
//!   The mixture stays feasible because `I/D` trivially satisfies every
//!   family constraint.
//!
//! Reported values are values of explicit valid strategies, hence lower
//! bounds on the quantum optimum.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{obliviousness_residual_quantum, ObliviousGame, QuantumStrategy};
use crate::qmath::{ComplexMatrix, DensityMatrix, Povm};

pub const MAX_DIM: usize = 8;

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub dim: usize,
    pub restarts: usize,
    /// Preparation steps per restart.
    pub max_iters: usize,
    pub penalty_start: f64,
    pub penalty_growth: f64,
    /// Preparation steps between penalty increases.
    pub penalty_every: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub step: f64,
    /// Preparation steps between measurement updates.
    pub inner: usize,
    pub dykstra_rounds: usize,
    /// Stop a restart after this many steps without improvement.
    pub patience: usize,
    /// Starting point for restart 0.
    pub warm_start: Option<QuantumStrategy>,
}

impl SearchConfig {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            restarts: 64,
            max_iters: 500,
            penalty_start: 1.0,
            penalty_growth: 2.0,
            penalty_every: 50,
            seed: 0,
            tolerance: 1e-8,
            step: 0.3,
            inner: 10,
            dykstra_rounds: 40,
            patience: 150,
            warm_start: None,
        }
    }

    fn penalty(&self, iter: usize) -> f64 {
        self.penalty_start * self.penalty_growth.powi((iter / self.penalty_every.max(1)) as i32)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub value: f64,
    pub strategy: QuantumStrategy,
    pub feasibility_residual: f64,
    pub iterations_used: usize,
    /// Accepted value after each measurement update of the winning restart.
    pub history: Vec<f64>,
    pub restart: usize,
    pub restart_values: Vec<f64>,
    pub infeasible: bool,
}

/// Real projector onto the null space of the family constraints, acting on
/// the preparation index.
fn oblivious_projector(game: &ObliviousGame) -> Vec<Vec<f64>> {
    let nx = game.alice_inputs();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for family in game.families() {
        let weights = game.set_weights(family);
        let (reference, rest) = weights.split_first().expect("families are nonempty");
        for set in rest {
            let mut row = vec![0.0; nx];
            set.iter().for_each(|&(x, w)| row[x] += w);
            reference.iter().for_each(|&(x, w)| row[x] -= w);
            rows.push(row);
        }
    }
    let mut proj = vec![vec![0.0; nx]; nx];
    (0..nx).for_each(|i| proj[i][i] = 1.0);
    if rows.is_empty() {
        return proj;
    }
    let a = DMatrix::from_fn(rows.len(), nx, |i, j| rows[i][j]);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let top = svd.singular_values.max();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > 1e-10 * top.max(1.0) {
            for i in 0..nx {
                for j in 0..nx {
                    proj[i][j] -= vt[(k, i)] * vt[(k, j)];
                }
            }
        }
    }
    proj
}

fn affine(proj: &[Vec<f64>], preps: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let d = preps[0].rows();
    proj.iter()
        .map(|row| {
            let mut m = ComplexMatrix::zeros(d, d);
            for (w, p) in row.iter().zip(preps) {
                if *w != 0.0 {
                    m.add_scaled(*w, p);
                }
            }
            m
        })
        .collect()
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Nearest density matrix in Frobenius norm.
fn project_density(m: &ComplexMatrix) -> ComplexMatrix {
    let (values, vectors) = m.eigh();
    let clipped = project_simplex(&values);
    vectors.matmul(&ComplexMatrix::diagonal(&clipped)).matmul(&vectors.adjoint())
}

fn add(a: &[ComplexMatrix], b: &[ComplexMatrix], s: f64) -> Vec<ComplexMatrix> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut m = x.clone();
            m.add_scaled(s, y);
            m
        })
        .collect()
}

fn dykstra(proj: &[Vec<f64>], start: &[ComplexMatrix], rounds: usize) -> Vec<ComplexMatrix> {
    let d = start[0].rows();
    let zero = vec![ComplexMatrix::zeros(d, d); start.len()];
    let (mut p, mut q, mut y) = (zero.clone(), zero, start.to_vec());
    for _ in 0..rounds {
        let yp = affine(proj, &add(&y, &p, 1.0));
        p = add(&add(&y, &p, 1.0), &yp, -1.0);
        let target = add(&yp, &q, 1.0);
        y = target.iter().map(project_density).collect();
        q = add(&target, &y, -1.0);
    }
    y
}

/// Exactly feasible density matrices close to `preps`.
fn repair(proj: &[Vec<f64>], preps: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let d = preps[0].rows();
    let fixed: Vec<ComplexMatrix> = affine(proj, preps).iter().map(ComplexMatrix::hermitian_part).collect();
    let lowest = fixed.iter().map(ComplexMatrix::min_eigenvalue).fold(f64::INFINITY, f64::min);
    let floor = 1e-13;
    if lowest >= floor {
        return fixed;
    }
    let inv = 1.0 / d as f64;
    let t = (floor - lowest) / (inv - lowest);
    let mixed = ComplexMatrix::identity(d).scale(inv * t);
    fixed
        .iter()
        .map(|m| {
            let mut out = m.scale(1.0 - t);
            out.add_scaled(1.0, &mixed);
            out
        })
        .collect()
}

struct Problem<'a> {
    game: &'a ObliviousGame,
    proj: Vec<Vec<f64>>,
    dim: usize,
}

impl Problem<'_> {
    fn weight(&self, x: usize, y: usize) -> f64 {
        self.game.p_a()[x] * self.game.p_b()[y]
    }

    fn value(&self, preps: &[ComplexMatrix], meas: &[Vec<ComplexMatrix>]) -> f64 {
        let g = self.game;
        let mut v = 0.0;
        for (x, rho) in preps.iter().enumerate() {
            for (y, povm) in meas.iter().enumerate() {
                for (b, e) in povm.iter().enumerate() {
                    let c = g.payoff(x, y, b);
                    if c != 0.0 {
                        v += self.weight(x, y) * c * rho.trace_product(e).re;
                    }
                }
            }
        }
        v
    }

    /// `Q_b^y = Σ_x p_A p_B C(x,y,b) ρ_x`
    fn effect_targets(&self, preps: &[ComplexMatrix], y: usize) -> Vec<ComplexMatrix> {
        (0..self.game.outcomes())
            .map(|b| {
                let mut q = ComplexMatrix::zeros(self.dim, self.dim);
                for (x, rho) in preps.iter().enumerate() {
                    let c = self.game.payoff(x, y, b);
                    if c != 0.0 {
                        q.add_scaled(self.weight(x, y) * c, rho);
                    }
                }
                q
            })
            .collect()
    }

    fn improve_measurements(&self, preps: &[ComplexMatrix], meas: &mut [Vec<ComplexMatrix>]) {
        for (y, povm) in meas.iter_mut().enumerate() {
            let targets = self.effect_targets(preps, y);
            let score = |p: &[ComplexMatrix]| -> f64 { p.iter().zip(&targets).map(|(m, q)| m.trace_product(q).re).sum() };
            let lowest = targets.iter().map(ComplexMatrix::min_eigenvalue).fold(f64::INFINITY, f64::min);
            let scale = targets.iter().map(ComplexMatrix::max_abs).fold(0.0, f64::max).max(1e-12);
            let shift = (-lowest).max(0.0) + 1e-3 * scale;
            let a: Vec<ComplexMatrix> = targets
                .iter()
                .map(|q| {
                    let mut m = q.clone();
                    m.add_scaled(shift, &ComplexMatrix::identity(self.dim));
                    m
                })
                .collect();
            let mut current = povm.clone();
            for _ in 0..50 {
                let sandwiches: Vec<ComplexMatrix> = a.iter().zip(&current).map(|(ab, m)| ab.matmul(m).matmul(ab)).collect();
                let mut total = ComplexMatrix::zeros(self.dim, self.dim);
                sandwiches.iter().for_each(|s| total.add_scaled(1.0, s));
                let inv_root = total.hermitian_part().map_spectrum(|v| 1.0 / v.max(1e-300).sqrt());
                current = sandwiches.iter().map(|s| inv_root.matmul(s).matmul(&inv_root).hermitian_part()).collect();
            }
            let current = complete(&current);
            if score(&current) > score(povm) {
                *povm = current;
            }
        }
    }

    /// Direction of steepest ascent for every preparation, scaled so the
    /// largest prior weight is one.
    fn gradient(&self, meas: &[Vec<ComplexMatrix>]) -> Vec<ComplexMatrix> {
        let g = self.game;
        let top = (0..g.alice_inputs())
            .flat_map(|x| (0..g.bob_inputs()).map(move |y| (x, y)))
            .map(|(x, y)| self.weight(x, y))
            .fold(0.0, f64::max);
        (0..g.alice_inputs())
            .map(|x| {
                let mut w = ComplexMatrix::zeros(self.dim, self.dim);
                for (y, povm) in meas.iter().enumerate() {
                    for (b, e) in povm.iter().enumerate() {
                        let c = g.payoff(x, y, b);
                        if c != 0.0 {
                            w.add_scaled(self.weight(x, y) * c / top, e);
                        }
                    }
                }
                w
            })
            .collect()
    }
}

/// Re-impose `Σ M_b = I` by congruence with `S^{-1/2}`.
fn complete(elements: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let d = elements[0].rows();
    let mut total = ComplexMatrix::zeros(d, d);
    elements.iter().for_each(|e| total.add_scaled(1.0, e));
    let inv_root = total.hermitian_part().map_spectrum(|v| 1.0 / v.max(1e-300).sqrt());
    elements.iter().map(|e| inv_root.matmul(e).matmul(&inv_root).hermitian_part()).collect()
}

fn random_pure(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let v: Vec<Complex64> = (0..d).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let v: Vec<Complex64> = v.iter().map(|c| c / norm).collect();
    ComplexMatrix::outer(&v, &v)
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix.
fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    let z = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    ComplexMatrix::from_fn(d, d, |i, j| {
        let phase = r[(j, j)] / r[(j, j)].norm().max(1e-300);
        q[(i, j)] * phase
    })
}

fn random_povm(rng: &mut ChaCha8Rng, d: usize, outcomes: usize) -> Vec<ComplexMatrix> {
    let u = random_unitary(rng, d);
    let weights: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            let e: Vec<f64> = (0..outcomes).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        })
        .collect();
    (0..outcomes)
        .map(|b| {
            let diag: Vec<f64> = (0..d).map(|k| weights[k][b]).collect();
            u.matmul(&ComplexMatrix::diagonal(&diag)).matmul(&u.adjoint())
        })
        .collect()
}

struct RestartOutcome {
    value: f64,
    preps: Vec<ComplexMatrix>,
    meas: Vec<Vec<ComplexMatrix>>,
    iterations: usize,
    history: Vec<f64>,
}

fn run_restart(problem: &Problem, cfg: &SearchConfig, index: usize) -> RestartOutcome {
    let g = problem.game;
    let d = problem.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let (mut preps, mut meas): (Vec<ComplexMatrix>, Vec<Vec<ComplexMatrix>>) = match (&cfg.warm_start, index) {
        (Some(s), 0) => (
            s.preparations().iter().map(|r| r.matrix().clone()).collect(),
            s.measurements().iter().map(|m| m.elements().to_vec()).collect(),
        ),
        _ => (
            (0..g.alice_inputs()).map(|_| random_pure(&mut rng, d)).collect(),
            (0..g.bob_inputs()).map(|_| random_povm(&mut rng, d, g.outcomes())).collect(),
        ),
    };

    let mut feasible = repair(&problem.proj, &preps);
    let mut best = RestartOutcome {
        value: problem.value(&feasible, &meas),
        preps: feasible.clone(),
        meas: meas.clone(),
        iterations: 0,
        history: Vec::new(),
    };
    best.history.push(best.value);
    let mut since_improvement = 0;
    let mut iter = 0;
    while iter < cfg.max_iters {
        problem.improve_measurements(&feasible, &mut meas);
        let grad = problem.gradient(&meas);
        for _ in 0..cfg.inner.max(1) {
            let mu = cfg.penalty(iter);
            let off = add(&preps, &affine(&problem.proj, &preps), -1.0);
            let stepped = add(&add(&preps, &grad, cfg.step), &off, -cfg.step * mu.min(1.0 / cfg.step));
            preps = dykstra(&problem.proj, &stepped, cfg.dykstra_rounds);
            iter += 1;
            if iter >= cfg.max_iters {
                break;
            }
        }
        feasible = repair(&problem.proj, &preps);
        let v = problem.value(&feasible, &meas);
        if v > best.value + 1e-12 {
            best.value = v;
            best.preps = feasible.clone();
            best.meas = meas.clone();
            since_improvement = 0;
        } else {
            since_improvement += cfg.inner.max(1);
        }
        best.iterations = iter;
        best.history.push(best.value);
        if since_improvement >= cfg.patience {
            break;
        }
    }
    best
}

fn build_strategy(preps: &[ComplexMatrix], meas: &[Vec<ComplexMatrix>]) -> Result<QuantumStrategy> {
    let preparations = preps.iter().map(|m| DensityMatrix::new(m.clone())).collect::<Result<_>>()?;
    let measurements = meas.iter().map(|m| Povm::new(m.clone())).collect::<Result<_>>()?;
    QuantumStrategy::new(preparations, measurements)
}

pub fn search(game: &ObliviousGame, cfg: &SearchConfig) -> Result<SearchResult> {
    if !(2..=MAX_DIM).contains(&cfg.dim) {
        return Err(Error::invalid("search", format!("dimension {} outside 2..={MAX_DIM}", cfg.dim)));
    }
    if cfg.restarts == 0 {
        return Err(Error::invalid("search", "needs at least one restart"));
    }
    if let Some(s) = &cfg.warm_start {
        if s.dim() != cfg.dim
            || s.preparations().len() != game.alice_inputs()
            || s.measurements().len() != game.bob_inputs()
            || s.measurements().iter().any(|m| m.outcomes() != game.outcomes())
        {
            return Err(Error::Dimension("warm start does not fit the game and dimension".into()));
        }
    }
    let problem = Problem { game, proj: oblivious_projector(game), dim: cfg.dim };
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts).into_par_iter().map(|i| run_restart(&problem, cfg, i)).collect();

    let mut winner = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.value > outcomes[winner].value {
            winner = i;
        }
    }
    let restart_values = outcomes.iter().map(|o| o.value).collect();
    let best = outcomes.into_iter().nth(winner).expect("at least one restart");
    let strategy = build_strategy(&best.preps, &best.meas)?;
    let residual = obliviousness_residual_quantum(game, &strategy)?;
    Ok(SearchResult {
        value: best.value,
        strategy,
        feasibility_residual: residual,
        iterations_used: best.iterations,
        history: best.history,
        restart: winner,
        restart_values,
        infeasible: !(residual < cfg.tolerance),
    })
}

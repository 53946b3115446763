//! Bell functionals, no-signaling boxes and their translation into
//! oblivious communication games.
//!
//! A Bell scenario `p(a,b|X,Y)` becomes a game in which Alice holds
//! `(x0, x) = (a, X)`, drawn with `p_g(x0|x) p_A(x)`, and Bob holds `y = Y`.
//! Alice's inputs are indexed `x * d + x0`. The single partition family groups
//! inputs by `x`, so the obliviousness constraint is exactly one-way
//! no-signaling from Alice to Bob.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{Behavior, ObliviousGame};
use crate::qmath::{born_prob, kron, partial_trace, ComplexMatrix, DensityMatrix, Povm, Subsystem, HERM_TOL, PROB_TOL};

/// Marginals below this are treated as never occurring.
pub const UNUSED_MARGINAL: f64 = 1e-14;

pub type Table4 = Vec<Vec<Vec<Vec<f64>>>>;

fn prior_ok(p: &[f64]) -> bool {
    !p.is_empty() && p.iter().all(|v| v.is_finite() && *v >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= HERM_TOL
}

/// `I_b = Σ C[X][Y][a][b] p_A(X) p_B(Y) p(a,b|X,Y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionalDocument")]
pub struct BellFunctional {
    m_a: usize,
    m_b: usize,
    d: usize,
    coeffs: Table4,
    p_a: Vec<f64>,
    p_b: Vec<f64>,
}

#[derive(Deserialize)]
struct FunctionalDocument {
    coeffs: Table4,
    p_a: Vec<f64>,
    p_b: Vec<f64>,
}

impl TryFrom<FunctionalDocument> for BellFunctional {
    type Error = Error;

    fn try_from(doc: FunctionalDocument) -> Result<Self> {
        BellFunctional::new(doc.coeffs, doc.p_a, doc.p_b)
    }
}

impl BellFunctional {
    pub fn new(coeffs: Table4, p_a: Vec<f64>, p_b: Vec<f64>) -> Result<Self> {
        if !prior_ok(&p_a) || !prior_ok(&p_b) {
            return Err(Error::invalid("bell functional", "priors must be distributions"));
        }
        let (m_a, m_b) = (p_a.len(), p_b.len());
        let d = coeffs.first().and_then(|r| r.first()).map(Vec::len).unwrap_or(0);
        let shape_ok = coeffs.len() == m_a
            && coeffs.iter().all(|r| r.len() == m_b && r.iter().all(|c| c.len() == d && c.iter().all(|row| row.len() == d)));
        if d == 0 || !shape_ok {
            return Err(Error::Dimension(format!("coefficient tensor is not {m_a}x{m_b}xdxd")));
        }
        if coeffs.iter().flatten().flatten().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("bell functional", "non-finite coefficient"));
        }
        Ok(Self { m_a, m_b, d, coeffs, p_a, p_b })
    }

    pub fn zero(m_a: usize, m_b: usize, d: usize) -> Self {
        Self::new(vec![vec![vec![vec![0.0; d]; d]; m_b]; m_a], vec![1.0 / m_a as f64; m_a], vec![1.0 / m_b as f64; m_b])
            .expect("zero functional is valid")
    }

    pub fn m_a(&self) -> usize {
        self.m_a
    }

    pub fn m_b(&self) -> usize {
        self.m_b
    }

    pub fn outcomes(&self) -> usize {
        self.d
    }

    pub fn coeff(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.coeffs[x][y][a][b]
    }

    pub fn coeffs(&self) -> &Table4 {
        &self.coeffs
    }

    pub fn p_a(&self) -> &[f64] {
        &self.p_a
    }

    pub fn p_b(&self) -> &[f64] {
        &self.p_b
    }
}

/// Bipartite correlations `p[X][Y][a][b]`, no-signaling in both directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxDocument")]
pub struct NoSignalingBox {
    table: Table4,
}

#[derive(Deserialize)]
struct BoxDocument {
    table: Table4,
}

impl TryFrom<BoxDocument> for NoSignalingBox {
    type Error = Error;

    fn try_from(doc: BoxDocument) -> Result<Self> {
        NoSignalingBox::new(doc.table)
    }
}

impl NoSignalingBox {
    pub fn new(table: Table4) -> Result<Self> {
        let m_a = table.len();
        let m_b = table.first().map(Vec::len).unwrap_or(0);
        let d = table.first().and_then(|r| r.first()).map(Vec::len).unwrap_or(0);
        let shape_ok = m_a > 0
            && m_b > 0
            && d > 0
            && table.iter().all(|r| r.len() == m_b && r.iter().all(|c| c.len() == d && c.iter().all(|row| row.len() == d)));
        if !shape_ok {
            return Err(Error::Dimension("box table is ragged".into()));
        }
        for (x, r) in table.iter().enumerate() {
            for (y, cell) in r.iter().enumerate() {
                let flat = cell.iter().flatten();
                if flat.clone().any(|p| !p.is_finite() || *p < -PROB_TOL) {
                    return Err(Error::invalid("box", format!("negative probability at ({x},{y})")));
                }
                let total: f64 = flat.sum();
                if (total - 1.0).abs() > PROB_TOL {
                    return Err(Error::invalid("box", format!("cell ({x},{y}) sums to {total}")));
                }
            }
        }
        let b = Self { table };
        let res = b.signaling_residual();
        if res > PROB_TOL {
            return Err(Error::invalid("box", format!("violates no-signaling by {res:e}")));
        }
        Ok(b)
    }

    /// Local deterministic box `a = f(X)`, `b = g(Y)`.
    pub fn deterministic(f: &[usize], g: &[usize], d: usize) -> Result<Self> {
        if f.iter().chain(g).any(|&v| v >= d) {
            return Err(Error::invalid("box", "deterministic response out of range"));
        }
        let table = f
            .iter()
            .map(|&fa| {
                g.iter().map(|&gb| (0..d).map(|a| (0..d).map(|b| f64::from(a == fa && b == gb)).collect()).collect()).collect()
            })
            .collect();
        Self::new(table)
    }

    pub fn uniform(m_a: usize, m_b: usize, d: usize) -> Self {
        let v = 1.0 / (d * d) as f64;
        Self { table: vec![vec![vec![vec![v; d]; d]; m_b]; m_a] }
    }

    /// Convex combination `Σ w_i box_i`.
    pub fn mixture(parts: &[(f64, &NoSignalingBox)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::invalid("box mixture", "no components"));
        };
        let shape = first.shape();
        if parts.iter().any(|(w, b)| b.shape() != shape || *w < 0.0) {
            return Err(Error::invalid("box mixture", "mismatched shapes or negative weight"));
        }
        let (m_a, m_b, d) = shape;
        let mut table = vec![vec![vec![vec![0.0; d]; d]; m_b]; m_a];
        for (w, b) in parts {
            for x in 0..m_a {
                for y in 0..m_b {
                    for a in 0..d {
                        for o in 0..d {
                            table[x][y][a][o] += w * b.table[x][y][a][o];
                        }
                    }
                }
            }
        }
        Self::new(table)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.table.len(), self.table[0].len(), self.table[0][0].len())
    }

    pub fn prob(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.table[x][y][a][b]
    }

    pub fn table(&self) -> &Table4 {
        &self.table
    }

    /// `p(a|X)`, read off at `Y = 0`.
    pub fn alice_marginal(&self, x: usize, a: usize) -> f64 {
        self.table[x][0][a].iter().sum()
    }

    pub fn bob_marginal(&self, y: usize, b: usize) -> f64 {
        self.table[0][y].iter().map(|row| row[b]).sum()
    }

    /// Largest dependence of either party's marginal on the other's input.
    pub fn signaling_residual(&self) -> f64 {
        let (m_a, m_b, d) = self.shape();
        let mut worst = 0.0f64;
        for y in 0..m_b {
            for b in 0..d {
                let m: Vec<f64> = (0..m_a).map(|x| (0..d).map(|a| self.table[x][y][a][b]).sum()).collect();
                worst = worst.max(spread(&m));
            }
        }
        for x in 0..m_a {
            for a in 0..d {
                let m: Vec<f64> = (0..m_b).map(|y| self.table[x][y][a].iter().sum()).collect();
                worst = worst.max(spread(&m));
            }
        }
        worst
    }
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

pub fn bell_value(bell: &BellFunctional, bx: &NoSignalingBox) -> Result<f64> {
    if bx.shape() != (bell.m_a, bell.m_b, bell.d) {
        return Err(Error::Dimension(format!(
            "box shape {:?} does not match functional ({}, {}, {})",
            bx.shape(),
            bell.m_a,
            bell.m_b,
            bell.d
        )));
    }
    let mut total = 0.0;
    for x in 0..bell.m_a {
        for y in 0..bell.m_b {
            let w = bell.p_a[x] * bell.p_b[y];
            let mut inner = 0.0;
            for a in 0..bell.d {
                for b in 0..bell.d {
                    inner += bell.coeffs[x][y][a][b] * bx.table[x][y][a][b];
                }
            }
            total += w * inner;
        }
    }
    Ok(total)
}

/// Three-outcome CGLMP functional with uniform priors; the `1/4` prefactor
/// is carried by `p_A p_B`.
///
/// Positive events: `A0 = B0`, `B0 = A1 + 1`, `A1 = B1`, `B1 = A0`.
/// Negative events: `A0 = B0 - 1`, `B0 = A1`, `A1 = B1 - 1`, `B1 = A0 - 1`.
pub fn cglmp3() -> BellFunctional {
    const D: usize = 3;
    // For each (X, Y): offsets t with b = a + t for the +1 and -1 events.
    let offsets = |x: usize, y: usize| -> (usize, usize) {
        match (x, y) {
            (0, 0) => (0, 1),
            (1, 0) => (1, 0),
            (1, 1) => (0, 1),
            (0, 1) => (0, 2),
            _ => unreachable!(),
        }
    };
    let mut coeffs = vec![vec![vec![vec![0.0; D]; D]; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            let (plus, minus) = offsets(x, y);
            for a in 0..D {
                coeffs[x][y][a][(a + plus) % D] += 1.0;
                coeffs[x][y][a][(a + minus) % D] -= 1.0;
            }
        }
    }
    BellFunctional::new(coeffs, vec![0.5; 2], vec![0.5; 2]).expect("static functional is valid")
}

/// `p[X][Y][a][b] = Tr((A_a^X ⊗ B_b^Y) ρ)`.
pub fn box_from_quantum(state: &DensityMatrix, alice: &[Povm], bob: &[Povm]) -> Result<NoSignalingBox> {
    let (Some(a0), Some(b0)) = (alice.first(), bob.first()) else {
        return Err(Error::invalid("box", "no measurements"));
    };
    let (da, db, d) = (a0.dim(), b0.dim(), a0.outcomes());
    if da * db != state.dim() {
        return Err(Error::Dimension(format!("{da}x{db} measurements on a {}-dimensional state", state.dim())));
    }
    if alice.iter().any(|m| m.dim() != da || m.outcomes() != d) || bob.iter().any(|m| m.dim() != db || m.outcomes() != d) {
        return Err(Error::Dimension("measurement sets disagree in dimension or outcome count".into()));
    }
    let table = alice
        .iter()
        .map(|ma| {
            bob.iter()
                .map(|mb| {
                    ma.elements()
                        .iter()
                        .map(|ea| mb.elements().iter().map(|eb| born_prob(state, &kron(ea, eb))).collect::<Result<Vec<_>>>())
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    NoSignalingBox::new(table)
}

/// Communication game of `bell` with conditional prior `p_g[x][x0]`.
pub fn game_from_bell(bell: &BellFunctional, p_g: &[Vec<f64>]) -> Result<ObliviousGame> {
    let d = bell.d;
    if p_g.len() != bell.m_a || p_g.iter().any(|r| r.len() != d) {
        return Err(Error::Dimension("p_g must be m_A rows of d entries".into()));
    }
    for (x, row) in p_g.iter().enumerate() {
        if !prior_ok(row) {
            return Err(Error::invalid("p_g", format!("row {x} is not a distribution")));
        }
        if bell.p_a[x] == 0.0 {
            return Err(Error::invalid("p_g", format!("input x={x} has zero prior but a p_g row")));
        }
    }
    let n = bell.m_a * d;
    let mut p_a = vec![0.0; n];
    let mut payoff = vec![vec![vec![0.0; d]; bell.m_b]; n];
    for x in 0..bell.m_a {
        for x0 in 0..d {
            let i = x * d + x0;
            p_a[i] = p_g[x][x0] * bell.p_a[x];
            for y in 0..bell.m_b {
                payoff[i][y].copy_from_slice(&bell.coeffs[x][y][x0]);
            }
        }
    }
    let family = (0..bell.m_a).map(|x| (x * d..(x + 1) * d).collect()).collect();
    ObliviousGame::new(p_a, bell.p_b.clone(), payoff, vec![family])
}

/// Alice's marginals as `p_g`, and Bob's conditional statistics as the
/// behavior of the matching game. Rows whose marginal vanishes get a
/// uniform placeholder.
pub fn strategy_from_box(bx: &NoSignalingBox) -> Result<(Vec<Vec<f64>>, Behavior)> {
    let (m_a, m_b, d) = bx.shape();
    let p_g: Vec<Vec<f64>> = (0..m_a).map(|x| (0..d).map(|a| bx.alice_marginal(x, a).max(0.0)).collect()).collect();
    let mut table = Vec::with_capacity(m_a * d);
    for x in 0..m_a {
        for x0 in 0..d {
            let row = (0..m_b)
                .map(|y| {
                    let joint = &bx.table[x][y][x0];
                    let marginal: f64 = joint.iter().sum();
                    if p_g[x][x0] < UNUSED_MARGINAL || marginal <= 0.0 {
                        vec![1.0 / d as f64; d]
                    } else {
                        joint.iter().map(|p| p.max(0.0) / marginal).collect()
                    }
                })
                .collect();
            table.push(row);
        }
    }
    Ok((p_g, Behavior::new(table)?))
}

/// Bob's conditional states after Alice measures her half of `state`.
#[derive(Clone, Debug)]
pub struct SteeredPreparations {
    /// `p_g[X][a] = Tr((A_a^X ⊗ 1) ρ)`
    pub p_g: Vec<Vec<f64>>,
    /// Indexed `X * d + a`; unused entries hold the maximally mixed state.
    pub preparations: Vec<DensityMatrix>,
    pub used: Vec<bool>,
}

pub fn preparations_from_entangled(state: &DensityMatrix, alice: &[Povm]) -> Result<SteeredPreparations> {
    let Some(first) = alice.first() else {
        return Err(Error::invalid("preparations", "no measurements"));
    };
    let (da, d) = (first.dim(), first.outcomes());
    if !state.dim().is_multiple_of(da) || alice.iter().any(|m| m.dim() != da || m.outcomes() != d) {
        return Err(Error::Dimension("alice measurements do not divide the joint space".into()));
    }
    let db = state.dim() / da;
    let id_b = ComplexMatrix::identity(db);
    let mut p_g = Vec::with_capacity(alice.len());
    let mut preparations = Vec::with_capacity(alice.len() * d);
    let mut used = Vec::with_capacity(alice.len() * d);
    for m in alice {
        let mut row = Vec::with_capacity(d);
        for e in m.elements() {
            let op = kron(e, &id_b).matmul(state.matrix());
            let reduced = partial_trace(&op, da, db, Subsystem::A)?.hermitian_part();
            let p = reduced.trace().re;
            row.push(p.max(0.0));
            if p < UNUSED_MARGINAL {
                preparations.push(DensityMatrix::maximally_mixed(db));
                used.push(false);
            } else {
                preparations.push(DensityMatrix::new(reduced.scale(1.0 / p))?);
                used.push(true);
            }
        }
        p_g.push(row);
    }
    Ok(SteeredPreparations { p_g, preparations, used })
}

/// `Tr_A ρ`
pub fn bob_reduced_state(state: &DensityMatrix, dim_a: usize) -> Result<DensityMatrix> {
    if dim_a == 0 || !state.dim().is_multiple_of(dim_a) {
        return Err(Error::Dimension(format!("{dim_a} does not divide {}", state.dim())));
    }
    let reduced = partial_trace(state.matrix(), dim_a, state.dim() / dim_a, Subsystem::A)?;
    DensityMatrix::new(reduced.hermitian_part())
}

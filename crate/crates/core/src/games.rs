//! Oblivious communication games.
//!
//! A game fixes Alice's and Bob's input alphabets with their priors, a payoff
//! tensor `C[x][y][b]`, and one or more partition families. Each family is a
//! collection of disjoint subsets of Alice's inputs; the obliviousness
//! constraint demands that Bob's outcome statistics, averaged over each subset
//! with weights `p_A(x) / q_k`, agree across the subsets of a family.
//!
//! Payoffs are stored unscaled. Every prefactor of the form `1/|I_A||I_B|`
//! comes from the priors, so [`performance`] is the single evaluation formula
//! `Σ C[x][y][b] p_A(x) p_B(y) p(b|x,y)`. With non-uniform priors the raw
//! coefficients are still multiplied by the priors; nothing is renormalized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{born_prob, ComplexMatrix, DensityMatrix, Povm, HERM_TOL, PROB_TOL};

/// Disjoint subsets of Alice's inputs, one obliviousness constraint.
pub type Family = Vec<Vec<usize>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameDocument")]
pub struct ObliviousGame {
    alice_inputs: usize,
    bob_inputs: usize,
    outcomes: usize,
    p_a: Vec<f64>,
    p_b: Vec<f64>,
    payoff: Vec<Vec<Vec<f64>>>,
    families: Vec<Family>,
}

/// Wire form of [`ObliviousGame`]; validated on the way in.
#[derive(Deserialize)]
struct GameDocument {
    alice_inputs: usize,
    bob_inputs: usize,
    outcomes: usize,
    p_a: Vec<f64>,
    p_b: Vec<f64>,
    payoff: Vec<Vec<Vec<f64>>>,
    families: Vec<Family>,
}

impl TryFrom<GameDocument> for ObliviousGame {
    type Error = Error;

    fn try_from(doc: GameDocument) -> Result<Self> {
        let game = ObliviousGame::new(doc.p_a, doc.p_b, doc.payoff, doc.families)?;
        if game.alice_inputs != doc.alice_inputs || game.bob_inputs != doc.bob_inputs || game.outcomes != doc.outcomes {
            return Err(Error::Dimension("declared alphabet sizes disagree with the payoff tensor".into()));
        }
        Ok(game)
    }
}

fn check_distribution(what: &'static str, p: &[f64], tol: f64) -> Result<()> {
    if p.is_empty() {
        return Err(Error::invalid(what, "empty distribution"));
    }
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < -tol) {
        return Err(Error::invalid(what, format!("entry {v} is negative or not finite")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::invalid(what, format!("entries sum to {total}")));
    }
    Ok(())
}

impl ObliviousGame {
    pub fn new(p_a: Vec<f64>, p_b: Vec<f64>, payoff: Vec<Vec<Vec<f64>>>, families: Vec<Family>) -> Result<Self> {
        check_distribution("alice prior", &p_a, HERM_TOL)?;
        check_distribution("bob prior", &p_b, HERM_TOL)?;
        let (na, nb) = (p_a.len(), p_b.len());
        if payoff.len() != na {
            return Err(Error::Dimension(format!("payoff has {} alice rows, prior has {na}", payoff.len())));
        }
        let outcomes = payoff.first().and_then(|row| row.first()).map(Vec::len).unwrap_or(0);
        if outcomes == 0 {
            return Err(Error::invalid("game", "no outcomes"));
        }
        for row in &payoff {
            if row.len() != nb || row.iter().any(|cell| cell.len() != outcomes) {
                return Err(Error::Dimension("payoff tensor is ragged".into()));
            }
            if row.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::invalid("game", "non-finite payoff"));
            }
        }
        if families.is_empty() {
            return Err(Error::invalid("game", "no partition family; obliviousness constraint is empty"));
        }
        for (f, family) in families.iter().enumerate() {
            if family.is_empty() {
                return Err(Error::invalid("game", format!("partition family {f} is empty")));
            }
            let mut seen = vec![false; na];
            for set in family {
                if set.is_empty() {
                    return Err(Error::invalid("game", format!("family {f} contains an empty set")));
                }
                for &x in set {
                    if x >= na {
                        return Err(Error::invalid("game", format!("family {f} references input {x}")));
                    }
                    if seen[x] {
                        return Err(Error::invalid("game", format!("sets of family {f} overlap at input {x}")));
                    }
                    seen[x] = true;
                }
                let q: f64 = set.iter().map(|&x| p_a[x]).sum();
                if q <= 0.0 {
                    return Err(Error::invalid("game", format!("a set of family {f} has zero weight")));
                }
            }
        }
        Ok(Self { alice_inputs: na, bob_inputs: nb, outcomes, p_a, p_b, payoff, families })
    }

    pub fn alice_inputs(&self) -> usize {
        self.alice_inputs
    }

    pub fn bob_inputs(&self) -> usize {
        self.bob_inputs
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn p_a(&self) -> &[f64] {
        &self.p_a
    }

    pub fn p_b(&self) -> &[f64] {
        &self.p_b
    }

    pub fn payoff(&self, x: usize, y: usize, b: usize) -> f64 {
        self.payoff[x][y][b]
    }

    pub fn payoff_tensor(&self) -> &[Vec<Vec<f64>>] {
        &self.payoff
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    /// Mixing weights `p_A(x)/q_k` for every set of `family`.
    pub fn set_weights(&self, family: &Family) -> Vec<Vec<(usize, f64)>> {
        family
            .iter()
            .map(|set| {
                let q: f64 = set.iter().map(|&x| self.p_a[x]).sum();
                set.iter().map(|&x| (x, self.p_a[x] / q)).collect()
            })
            .collect()
    }

    /// Same game with Alice's inputs renamed: input `x` of `self` becomes
    /// input `perm[x]` of the result.
    pub fn relabel_alice(&self, perm: &[usize]) -> Result<Self> {
        let n = self.alice_inputs;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::invalid("relabeling", "not a permutation of alice inputs"));
        }
        let mut p_a = vec![0.0; n];
        let mut payoff = self.payoff.clone();
        for x in 0..n {
            p_a[perm[x]] = self.p_a[x];
            payoff[perm[x]] = self.payoff[x].clone();
        }
        let families =
            self.families.iter().map(|fam| fam.iter().map(|set| set.iter().map(|&x| perm[x]).collect()).collect()).collect();
        Self::new(p_a, self.p_b.clone(), payoff, families)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Conditional outcome table `p[x][y][b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<f64>>>", into = "Vec<Vec<Vec<f64>>>")]
pub struct Behavior {
    table: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<Vec<Vec<Vec<f64>>>> for Behavior {
    type Error = Error;

    fn try_from(table: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        Behavior::new(table)
    }
}

impl From<Behavior> for Vec<Vec<Vec<f64>>> {
    fn from(b: Behavior) -> Self {
        b.table
    }
}

impl Behavior {
    pub fn new(table: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let ny = table.first().map(Vec::len).unwrap_or(0);
        let nb = table.first().and_then(|r| r.first()).map(Vec::len).unwrap_or(0);
        if ny == 0 || nb == 0 {
            return Err(Error::invalid("behavior", "empty table"));
        }
        for (x, row) in table.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::Dimension(format!("behavior row {x} has {} settings", row.len())));
            }
            for (y, dist) in row.iter().enumerate() {
                if dist.len() != nb {
                    return Err(Error::Dimension(format!("behavior cell ({x},{y}) has {} outcomes", dist.len())));
                }
                check_distribution("behavior row", dist, PROB_TOL)
                    .map_err(|e| Error::invalid("behavior", format!("cell ({x},{y}): {e}")))?;
            }
        }
        Ok(Self { table })
    }

    pub fn uniform(alice_inputs: usize, bob_inputs: usize, outcomes: usize) -> Self {
        Self { table: vec![vec![vec![1.0 / outcomes as f64; outcomes]; bob_inputs]; alice_inputs] }
    }

    /// `λ·self + (1-λ)·other`
    pub fn mix(&self, lambda: f64, other: &Behavior) -> Result<Behavior> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension("mixing behaviors of different shape".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid("mixture", format!("weight {lambda} outside [0,1]")));
        }
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(r, s)| {
                r.iter().zip(s).map(|(p, q)| p.iter().zip(q).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect()).collect()
            })
            .collect();
        Behavior::new(table)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.table.len(), self.table[0].len(), self.table[0][0].len())
    }

    pub fn prob(&self, x: usize, y: usize, b: usize) -> f64 {
        self.table[x][y][b]
    }

    pub fn table(&self) -> &[Vec<Vec<f64>>] {
        &self.table
    }

    pub fn max_abs_diff(&self, other: &Behavior) -> f64 {
        self.table
            .iter()
            .flatten()
            .flatten()
            .zip(other.table.iter().flatten().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "StrategyDocument")]
pub struct QuantumStrategy {
    preparations: Vec<DensityMatrix>,
    measurements: Vec<Povm>,
}

#[derive(Deserialize)]
struct StrategyDocument {
    preparations: Vec<DensityMatrix>,
    measurements: Vec<Povm>,
}

impl TryFrom<StrategyDocument> for QuantumStrategy {
    type Error = Error;

    fn try_from(doc: StrategyDocument) -> Result<Self> {
        QuantumStrategy::new(doc.preparations, doc.measurements)
    }
}

impl QuantumStrategy {
    pub fn new(preparations: Vec<DensityMatrix>, measurements: Vec<Povm>) -> Result<Self> {
        let (Some(first), Some(meas)) = (preparations.first(), measurements.first()) else {
            return Err(Error::invalid("strategy", "needs at least one preparation and one measurement"));
        };
        let dim = first.dim();
        let outcomes = meas.outcomes();
        if preparations.iter().any(|p| p.dim() != dim) {
            return Err(Error::Dimension("preparations of different dimension".into()));
        }
        if measurements.iter().any(|m| m.dim() != dim || m.outcomes() != outcomes) {
            return Err(Error::Dimension("measurements disagree in dimension or outcome count".into()));
        }
        Ok(Self { preparations, measurements })
    }

    pub fn dim(&self) -> usize {
        self.preparations[0].dim()
    }

    pub fn preparations(&self) -> &[DensityMatrix] {
        &self.preparations
    }

    pub fn measurements(&self) -> &[Povm] {
        &self.measurements
    }
}

/// Messages drawn from `encoding[x]` and decoded by `decoding[m][y]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalStrategy {
    messages: usize,
    encoding: Vec<Vec<f64>>,
    decoding: Vec<Vec<Vec<f64>>>,
}

impl ClassicalStrategy {
    pub fn new(encoding: Vec<Vec<f64>>, decoding: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let messages = decoding.len();
        if messages == 0 || encoding.is_empty() {
            return Err(Error::invalid("classical strategy", "empty encoding or decoding"));
        }
        for row in &encoding {
            if row.len() != messages {
                return Err(Error::Dimension("encoding row length differs from message count".into()));
            }
            check_distribution("encoding", row, HERM_TOL)?;
        }
        let ny = decoding[0].len();
        let nb = decoding[0].first().map(Vec::len).unwrap_or(0);
        for m in &decoding {
            if m.len() != ny || m.iter().any(|d| d.len() != nb) {
                return Err(Error::Dimension("decoding table is ragged".into()));
            }
            for d in m {
                check_distribution("decoding", d, HERM_TOL)?;
            }
        }
        Ok(Self { messages, encoding, decoding })
    }

    /// Deterministic decoder `g(m, y)` paired with an arbitrary encoding.
    pub fn with_decoder(encoding: Vec<Vec<f64>>, decoder: &[Vec<usize>], outcomes: usize) -> Result<Self> {
        let decoding = decoder
            .iter()
            .map(|row| row.iter().map(|&b| (0..outcomes).map(|o| if o == b { 1.0 } else { 0.0 }).collect()).collect())
            .collect();
        Self::new(encoding, decoding)
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn encoding(&self) -> &[Vec<f64>] {
        &self.encoding
    }

    pub fn behavior(&self) -> Result<Behavior> {
        let ny = self.decoding[0].len();
        let nb = self.decoding[0][0].len();
        let table = self
            .encoding
            .iter()
            .map(|enc| {
                (0..ny)
                    .map(|y| (0..nb).map(|b| (0..self.messages).map(|m| enc[m] * self.decoding[m][y][b]).sum()).collect())
                    .collect()
            })
            .collect();
        Behavior::new(table)
    }
}

fn check_shape(game: &ObliviousGame, behavior: &Behavior) -> Result<()> {
    let want = (game.alice_inputs, game.bob_inputs, game.outcomes);
    if behavior.shape() != want {
        return Err(Error::Dimension(format!("behavior shape {:?} does not match game {want:?}", behavior.shape())));
    }
    Ok(())
}

/// Average payoff `Σ C[x][y][b] p_A(x) p_B(y) p(b|x,y)`.
pub fn performance(game: &ObliviousGame, behavior: &Behavior) -> Result<f64> {
    check_shape(game, behavior)?;
    let mut total = 0.0;
    for (x, row) in behavior.table.iter().enumerate() {
        for (y, dist) in row.iter().enumerate() {
            let w = game.p_a[x] * game.p_b[y];
            let inner: f64 = dist.iter().zip(&game.payoff[x][y]).map(|(p, c)| p * c).sum();
            total += w * inner;
        }
    }
    Ok(total)
}

/// Born-rule statistics `p[x][y][b] = Tr(M_b^y ρ_x)`.
pub fn behavior_from_quantum(s: &QuantumStrategy) -> Result<Behavior> {
    let table = s
        .preparations
        .iter()
        .map(|rho| {
            s.measurements
                .iter()
                .map(|m| m.elements().iter().map(|e| born_prob(rho, e)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Behavior::new(table)
}

/// Largest violation of the obliviousness equalities by the outcome statistics.
pub fn obliviousness_residual_behavior(game: &ObliviousGame, behavior: &Behavior) -> Result<f64> {
    check_shape(game, behavior)?;
    let mut worst = 0.0f64;
    for family in &game.families {
        let weights = game.set_weights(family);
        for y in 0..game.bob_inputs {
            for b in 0..game.outcomes {
                let avgs: Vec<f64> =
                    weights.iter().map(|set| set.iter().map(|&(x, w)| w * behavior.table[x][y][b]).sum()).collect();
                let hi = avgs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = avgs.iter().copied().fold(f64::INFINITY, f64::min);
                worst = worst.max(hi - lo);
            }
        }
    }
    Ok(worst)
}

/// Weighted-average preparation for each set of `family`.
pub fn set_averages(game: &ObliviousGame, preparations: &[DensityMatrix], family: &Family) -> Vec<ComplexMatrix> {
    let dim = preparations[0].dim();
    game.set_weights(family)
        .iter()
        .map(|set| {
            let mut avg = ComplexMatrix::zeros(dim, dim);
            for &(x, w) in set {
                avg.add_scaled(w, preparations[x].matrix());
            }
            avg
        })
        .collect()
}

/// Operator-level obliviousness check: the largest entrywise gap between the
/// weighted-average preparations of two sets in the same family.
pub fn obliviousness_residual_quantum(game: &ObliviousGame, s: &QuantumStrategy) -> Result<f64> {
    if s.preparations.len() != game.alice_inputs {
        return Err(Error::Dimension(format!("{} preparations for {} alice inputs", s.preparations.len(), game.alice_inputs)));
    }
    let mut worst = 0.0f64;
    for family in &game.families {
        let avgs = set_averages(game, &s.preparations, family);
        for i in 0..avgs.len() {
            for j in i + 1..avgs.len() {
                worst = worst.max(avgs[i].max_abs_diff(&avgs[j]));
            }
        }
    }
    Ok(worst)
}

pub fn is_prime(d: usize) -> bool {
    d >= 2 && (2..).take_while(|k| k * k <= d).all(|k| !d.is_multiple_of(k))
}

/// Digits of `index` in base `d`, most significant first, `n` of them.
pub fn digits(mut index: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

/// Parity-oblivious random access code on `n` symbols of `Z_d`.
///
/// Alice's input `x = x_1..x_n` is encoded as the base-`d` integer with `x_1`
/// most significant; Bob's input `y` in `0..n` asks for `x_{y+1}`. One
/// partition family is emitted per weighting string `r` with at least two
/// nonzero entries (at most `n-2` zeros), in lexicographic order of `r`; its
/// sets are `{x : r·x = k mod d}` for `k = 0..d`.
pub fn make_rac_game(n: usize, d: usize) -> Result<ObliviousGame> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    if n < 2 {
        return Err(Error::invalid("rac game", "needs n >= 2 symbols"));
    }
    let size = (d as u64)
        .checked_pow(n as u32)
        .filter(|s| *s <= 1 << 20)
        .ok_or_else(|| Error::GuardExceeded { size: (d as f64).powi(n as i32), limit: (1u64 << 20) as f64 })?
        as usize;
    let strings: Vec<Vec<usize>> = (0..size).map(|i| digits(i, d, n)).collect();
    let payoff =
        strings.iter().map(|x| (0..n).map(|y| (0..d).map(|b| if b == x[y] { 1.0 } else { 0.0 }).collect()).collect()).collect();
    let families = strings
        .iter()
        .filter(|r| r.iter().filter(|&&v| v == 0).count() + 2 <= n)
        .map(|r| {
            let mut sets = vec![Vec::new(); d];
            for (i, x) in strings.iter().enumerate() {
                let dot: usize = r.iter().zip(x).map(|(a, b)| a * b).sum();
                sets[dot % d].push(i);
            }
            sets
        })
        .collect();
    ObliviousGame::new(vec![1.0 / size as f64; size], vec![1.0 / n as f64; n], payoff, families)
}

/// `T_k = x0 - (-1)^(x+y+k) k - x y mod 3`.
pub fn cglmp_target(x0: usize, x: usize, y: usize, k: usize) -> usize {
    let sign: i64 = if (x + y + k).is_multiple_of(2) { 1 } else { -1 };
    (x0 as i64 - sign * k as i64 - (x * y) as i64).rem_euclid(3) as usize
}

/// Alice input index of `(x0, x)` in the CGLMP-derived games.
pub fn cglmp_input(x0: usize, x: usize) -> usize {
    x * 3 + x0
}

/// The communication game built on the three-outcome CGLMP inequality:
/// `A_3 = (1/12) Σ (-1)^k p(b = T_k | x0, x, y)`.
pub fn make_cglmp3_game() -> ObliviousGame {
    let mut payoff = vec![vec![vec![0.0; 3]; 2]; 6];
    for x in 0..2 {
        for x0 in 0..3 {
            for y in 0..2 {
                for k in 0..2 {
                    let b = cglmp_target(x0, x, y, k);
                    payoff[cglmp_input(x0, x)][y][b] += if k == 0 { 1.0 } else { -1.0 };
                }
            }
        }
    }
    let family = vec![vec![0, 1, 2], vec![3, 4, 5]];
    ObliviousGame::new(vec![1.0 / 6.0; 6], vec![0.5; 2], payoff, vec![family]).expect("static game is valid")
}

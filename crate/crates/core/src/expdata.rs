//! Experimental qutrit data: ingestion, label fitting, `A₃` and the
//! secondary-data linear program.
//!
//! Lab labels are kept as published: six preparations `ψ_jk` ordered
//! `ψ11, ψ12, ψ13, ψ21, ψ22, ψ23`, two protocol bases and three projectors.
//! A [`LabelMapping`] translates them into game labels `(x0, x)`, `y`, `b`.

use std::path::Path;

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cglmp::{a3_from_table, closed_form_prob};
use crate::error::{Error, Result};
use crate::games::cglmp_input;
use crate::lp::{solve, LinearProgram, LpStatus};

/// `[state][basis][projector]` in lab order.
pub type LabTable = [[[f64; 3]; 2]; 6];

pub const ROW_SUM_TOL: f64 = 2e-3;
pub const CSV_HEADER: [&str; 6] = ["state_j", "state_k", "basis", "projector", "probability", "sigma"];
pub const STATE_LABELS: [&str; 6] = ["11", "12", "13", "21", "22", "23"];

const PINNED_MAPPING: &str = include_str!("../../../data/mapping.json");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrimaryData {
    /// Row-renormalized probabilities.
    pub probs: LabTable,
    pub sigma: LabTable,
}

impl PrimaryData {
    /// Validates ranges and row sums, then renormalizes each row.
    pub fn new(probs: LabTable, sigma: LabTable) -> Result<Self> {
        let mut out = probs;
        for s in 0..6 {
            for i in 0..2 {
                for j in 0..3 {
                    let (p, e) = (probs[s][i][j], sigma[s][i][j]);
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::Parse(format!(
                            "probability {p} for state {} basis {} projector {} is outside [0, 1]",
                            STATE_LABELS[s],
                            i + 1,
                            j + 1
                        )));
                    }
                    if !(e.is_finite() && e >= 0.0) {
                        return Err(Error::Parse(format!("sigma {e} for state {} must be nonnegative", STATE_LABELS[s])));
                    }
                }
                let total: f64 = probs[s][i].iter().sum();
                if (total - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::Parse(format!("row for state {} basis {} sums to {total}", STATE_LABELS[s], i + 1)));
                }
                out[s][i].iter_mut().for_each(|p| *p /= total);
            }
        }
        Ok(Self { probs: out, sigma })
    }

    /// Table generated by a model `p(x0, x, y, b)` seen through `map`.
    pub fn from_model(map: &LabelMapping, p: impl Fn(usize, usize, usize, usize) -> f64, sigma: f64) -> Result<Self> {
        let mut probs = [[[0.0; 3]; 2]; 6];
        for (s, &(x0, x)) in map.state_map.iter().enumerate() {
            for i in 0..2 {
                for j in 0..3 {
                    probs[s][i][j] = p(x0, x, map.basis_map[i], map.outcome_map[i][j]);
                }
            }
        }
        Self::new(probs, [[[sigma; 3]; 2]; 6])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomographyBasis {
    pub basis: usize,
    /// `[state][projector]`
    pub probs: [[f64; 3]; 6],
    pub sigma: [[f64; 3]; 6],
}

/// Tomographic-basis measurements, stored for diagnostics only.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TomographyData {
    pub bases: Vec<TomographyBasis>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    state_j: usize,
    state_k: usize,
    basis: usize,
    projector: usize,
    probability: f64,
    sigma: f64,
}

struct Entry {
    state: usize,
    basis: usize,
    projector: usize,
    probability: f64,
    sigma: f64,
}

fn read_entries(text: &str, source: &str) -> Result<Vec<Entry>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse(format!("{source}: {e}")))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("{source}: expected header {}", CSV_HEADER.join(","))));
    }
    let mut entries = Vec::new();
    for (n, row) in reader.deserialize::<CsvRow>().enumerate() {
        let line = n + 2;
        let row = row.map_err(|e| Error::Parse(format!("{source} line {line}: {e}")))?;
        if !(1..=2).contains(&row.state_j) || !(1..=3).contains(&row.state_k) {
            return Err(Error::Parse(format!("{source} line {line}: no state psi_{}{}", row.state_j, row.state_k)));
        }
        if !(1..=3).contains(&row.projector) || row.basis == 0 {
            return Err(Error::Parse(format!(
                "{source} line {line}: basis {} projector {} out of range",
                row.basis, row.projector
            )));
        }
        if !(0.0..=1.0).contains(&row.probability) {
            return Err(Error::Parse(format!("{source} line {line}: probability {} is outside [0, 1]", row.probability)));
        }
        if !(row.sigma.is_finite() && row.sigma >= 0.0) {
            return Err(Error::Parse(format!("{source} line {line}: sigma {} is invalid", row.sigma)));
        }
        entries.push(Entry {
            state: (row.state_j - 1) * 3 + row.state_k - 1,
            basis: row.basis,
            projector: row.projector - 1,
            probability: row.probability,
            sigma: row.sigma,
        });
    }
    Ok(entries)
}

/// Parses the protocol table (bases 1 and 2, all 36 cells).
pub fn parse_primary(text: &str, source: &str) -> Result<PrimaryData> {
    let mut probs = [[[f64::NAN; 3]; 2]; 6];
    let mut sigma = [[[0.0; 3]; 2]; 6];
    for e in read_entries(text, source)? {
        if e.basis > 2 {
            return Err(Error::Parse(format!("{source}: basis {} is not a protocol basis", e.basis)));
        }
        let cell = &mut probs[e.state][e.basis - 1][e.projector];
        if !cell.is_nan() {
            return Err(Error::Parse(format!(
                "{source}: duplicate entry for state {} basis {} projector {}",
                STATE_LABELS[e.state],
                e.basis,
                e.projector + 1
            )));
        }
        *cell = e.probability;
        sigma[e.state][e.basis - 1][e.projector] = e.sigma;
    }
    for s in 0..6 {
        for i in 0..2 {
            for j in 0..3 {
                if probs[s][i][j].is_nan() {
                    return Err(Error::Parse(format!(
                        "{source}: missing entry for state {} basis {} projector {}",
                        STATE_LABELS[s],
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
    }
    PrimaryData::new(probs, sigma).map_err(|e| Error::Parse(format!("{source}: {e}")))
}

pub fn load_primary(path: &Path) -> Result<PrimaryData> {
    parse_primary(&std::fs::read_to_string(path)?, &path.display().to_string())
}

/// Reads tomographic tables; every basis present must be complete.
pub fn load_tomography(paths: &[&Path]) -> Result<TomographyData> {
    let mut bases: Vec<TomographyBasis> = Vec::new();
    for path in paths {
        let source = path.display().to_string();
        let mut seen: Vec<(usize, usize, usize)> = Vec::new();
        for e in read_entries(&std::fs::read_to_string(path)?, &source)? {
            if bases.iter().any(|b| b.basis == e.basis) && !seen.iter().any(|s| s.0 == e.basis) {
                return Err(Error::Parse(format!("{source}: basis {} appears in more than one file", e.basis)));
            }
            if seen.contains(&(e.basis, e.state, e.projector)) {
                return Err(Error::Parse(format!("{source}: duplicate entry for basis {}", e.basis)));
            }
            seen.push((e.basis, e.state, e.projector));
            let idx = match bases.iter().position(|b| b.basis == e.basis) {
                Some(i) => i,
                None => {
                    bases.push(TomographyBasis { basis: e.basis, probs: [[0.0; 3]; 6], sigma: [[0.0; 3]; 6] });
                    bases.len() - 1
                }
            };
            bases[idx].probs[e.state][e.projector] = e.probability;
            bases[idx].sigma[e.state][e.projector] = e.sigma;
        }
        for b in bases.iter().filter(|b| seen.iter().any(|s| s.0 == b.basis)) {
            if seen.iter().filter(|s| s.0 == b.basis).count() != 18 {
                return Err(Error::Parse(format!("{source}: basis {} is incomplete", b.basis)));
            }
        }
    }
    bases.sort_by_key(|b| b.basis);
    Ok(TomographyData { bases })
}

/// Lab-to-game label translation. `state_map[s] = (x0, x)`,
/// `basis_map[i] = y`, `outcome_map[i][j] = b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MappingDocument")]
pub struct LabelMapping {
    pub state_map: [(usize, usize); 6],
    pub basis_map: [usize; 2],
    pub outcome_map: [[usize; 3]; 2],
}

#[derive(Deserialize)]
struct MappingDocument {
    state_map: Vec<(usize, usize)>,
    basis_map: Vec<usize>,
    outcome_map: Vec<Vec<usize>>,
}

impl TryFrom<MappingDocument> for LabelMapping {
    type Error = Error;

    fn try_from(doc: MappingDocument) -> Result<Self> {
        let incomplete = |what: &str| Error::invalid("label mapping", format!("{what} has the wrong length"));
        let state_map: [(usize, usize); 6] = doc.state_map.try_into().map_err(|_| incomplete("state_map"))?;
        let basis_map: [usize; 2] = doc.basis_map.try_into().map_err(|_| incomplete("basis_map"))?;
        let rows: Vec<[usize; 3]> = doc
            .outcome_map
            .into_iter()
            .map(|r| r.try_into().map_err(|_| incomplete("outcome_map row")))
            .collect::<Result<_>>()?;
        let outcome_map: [[usize; 3]; 2] = rows.try_into().map_err(|_| incomplete("outcome_map"))?;
        LabelMapping::new(state_map, basis_map, outcome_map)
    }
}

fn is_bijection(values: impl Iterator<Item = usize>, n: usize) -> bool {
    let mut seen = vec![false; n];
    let mut count = 0;
    for v in values {
        if v >= n || seen[v] {
            return false;
        }
        seen[v] = true;
        count += 1;
    }
    count == n
}

impl LabelMapping {
    pub fn new(state_map: [(usize, usize); 6], basis_map: [usize; 2], outcome_map: [[usize; 3]; 2]) -> Result<Self> {
        if state_map.iter().any(|&(x0, x)| x0 >= 3 || x >= 2)
            || !is_bijection(state_map.iter().map(|&(x0, x)| cglmp_input(x0, x)), 6)
        {
            return Err(Error::invalid("label mapping", "state_map is not a bijection onto (x0, x)"));
        }
        if !is_bijection(basis_map.into_iter(), 2) {
            return Err(Error::invalid("label mapping", "basis_map is not a bijection"));
        }
        if outcome_map.iter().any(|row| !is_bijection(row.iter().copied(), 3)) {
            return Err(Error::invalid("label mapping", "outcome_map rows must be permutations"));
        }
        Ok(Self { state_map, basis_map, outcome_map })
    }

    pub fn identity() -> Self {
        let state_map = std::array::from_fn(|s| (s % 3, s / 3));
        Self::new(state_map, [0, 1], [[0, 1, 2]; 2]).expect("identity is bijective")
    }

    /// Mapping fitted to the bundled tables.
    pub fn pinned() -> Self {
        Self::from_json(PINNED_MAPPING).expect("bundled mapping is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Lab table in game layout `[cglmp_input(x0, x)][y][b]`.
    pub fn apply(&self, probs: &LabTable) -> [[[f64; 3]; 2]; 6] {
        let mut game = [[[0.0; 3]; 2]; 6];
        for (s, &(x0, x)) in self.state_map.iter().enumerate() {
            for i in 0..2 {
                for j in 0..3 {
                    game[cglmp_input(x0, x)][self.basis_map[i]][self.outcome_map[i][j]] = probs[s][i][j];
                }
            }
        }
        game
    }

    /// `Σ |P_measured − p_theory|` under this mapping.
    pub fn residual(&self, data: &PrimaryData) -> f64 {
        let mut r = 0.0;
        for (s, &(x0, x)) in self.state_map.iter().enumerate() {
            for i in 0..2 {
                for j in 0..3 {
                    r += (data.probs[s][i][j] - closed_form_prob(x0, x, self.basis_map[i], self.outcome_map[i][j])).abs();
                }
            }
        }
        r
    }
}

/// Exhaustive L1 fit of the label mapping to the closed-form statistics.
/// Candidates are visited in lexicographic order and a later one replaces
/// the incumbent only when strictly better by more than 1e-12.
pub fn fit_label_mapping(data: &PrimaryData) -> (LabelMapping, f64) {
    let states: Vec<(usize, usize)> = (0..6).map(|s| (s % 3, s / 3)).collect();
    // cost[s][t][i][y][j][b]: |P[s][i][j] - p_theory(t, y, b)|
    let cost = |s: usize, t: usize, i: usize, y: usize, j: usize, b: usize| {
        (data.probs[s][i][j] - closed_form_prob(states[t].0, states[t].1, y, b)).abs()
    };
    let outcome_perms: Vec<Vec<usize>> = (0..3).permutations(3).collect();
    let mut best: Option<(f64, LabelMapping)> = None;
    for perm in (0..6).permutations(6) {
        for basis in [[0, 1], [1, 0]] {
            for o0 in &outcome_perms {
                for o1 in &outcome_perms {
                    let outcomes = [o0, o1];
                    let mut r = 0.0;
                    for (s, &t) in perm.iter().enumerate() {
                        for i in 0..2 {
                            for j in 0..3 {
                                r += cost(s, t, i, basis[i], j, outcomes[i][j]);
                            }
                        }
                    }
                    if best.as_ref().is_none_or(|(b, _)| r < b - 1e-12) {
                        let map = LabelMapping::new(
                            std::array::from_fn(|s| states[perm[s]]),
                            basis,
                            [[o0[0], o0[1], o0[2]], [o1[0], o1[1], o1[2]]],
                        )
                        .expect("permutations are bijective");
                        best = Some((r, map));
                    }
                }
            }
        }
    }
    let (r, map) = best.expect("search space is nonempty");
    (map, r)
}

fn a3_of_lab(probs: &LabTable, map: &LabelMapping) -> f64 {
    let game = map.apply(probs);
    a3_from_table(|x0, x, y, b| game[cglmp_input(x0, x)][y][b])
}

pub fn a3_primary(data: &PrimaryData, map: &LabelMapping) -> f64 {
    a3_of_lab(&data.probs, map)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondaryData {
    /// `weights[t][s]`: weight of lab state `s` in the secondary state `t`.
    pub weights: [[f64; 6]; 6],
    pub primed: LabTable,
    /// Average diagonal weight.
    pub s: f64,
    /// Largest violation of the grouped-sum equalities.
    pub constraint_residual: f64,
}

fn group_sums(table: &LabTable) -> [[f64; 3]; 2] {
    let mut diff = [[0.0; 3]; 2];
    for (s, row) in table.iter().enumerate() {
        let sign = if s < 3 { 1.0 } else { -1.0 };
        for i in 0..2 {
            for j in 0..3 {
                diff[i][j] += sign * row[i][j];
            }
        }
    }
    diff
}

/// Closest obliviousness-respecting data: states are grouped by `j`
/// (`ψ1k` against `ψ2k`) and each secondary state mixes the six primary
/// ones so that both groups have the same summed statistics.
pub fn secondary_data(data: &PrimaryData) -> Result<SecondaryData> {
    let var = |t: usize, s: usize| t * 6 + s;
    let mut objective = vec![0.0; 36];
    for t in 0..6 {
        objective[var(t, t)] = 1.0 / 6.0;
    }
    let mut lp = LinearProgram::new(objective);
    for t in 0..6 {
        let mut row = vec![0.0; 36];
        (0..6).for_each(|s| row[var(t, s)] = 1.0);
        lp.add_equality(row, 1.0);
    }
    for i in 0..2 {
        for j in 0..3 {
            let mut row = vec![0.0; 36];
            for t in 0..6 {
                let sign = if t < 3 { 1.0 } else { -1.0 };
                for s in 0..6 {
                    row[var(t, s)] = sign * data.probs[s][i][j];
                }
            }
            lp.add_equality(row, 0.0);
        }
    }
    let sol = solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("secondary-data program ended {:?}", sol.status)));
    }
    let mut weights = [[0.0; 6]; 6];
    for t in 0..6 {
        for s in 0..6 {
            weights[t][s] = sol.values[var(t, s)].max(0.0);
        }
        let total: f64 = weights[t].iter().sum();
        weights[t].iter_mut().for_each(|w| *w /= total);
    }
    let mut primed = [[[0.0; 3]; 2]; 6];
    for t in 0..6 {
        for s in 0..6 {
            for i in 0..2 {
                for j in 0..3 {
                    primed[t][i][j] += weights[t][s] * data.probs[s][i][j];
                }
            }
        }
    }
    let constraint_residual = group_sums(&primed).iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let s = (0..6).map(|t| weights[t][t]).sum::<f64>() / 6.0;
    Ok(SecondaryData { weights, primed, s, constraint_residual })
}

pub fn a3_secondary(secondary: &SecondaryData, map: &LabelMapping) -> f64 {
    a3_of_lab(&secondary.primed, map)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Uncertainty {
    pub sigma_pri: f64,
    pub sigma_sec: f64,
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Monte Carlo spread of `A₃` on primary and secondary data. Sample `i`
/// draws from its own ChaCha stream, so results do not depend on threads.
pub fn mc_uncertainty(data: &PrimaryData, map: &LabelMapping, samples: usize, seed: u64) -> Result<Uncertainty> {
    if samples < 100 {
        return Err(Error::invalid("monte carlo", format!("needs at least 100 samples, got {samples}")));
    }
    let draws: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut probs = data.probs;
            for s in 0..6 {
                for r in 0..2 {
                    for j in 0..3 {
                        let sd = data.sigma[s][r][j];
                        if sd > 0.0 {
                            let noise = Normal::new(0.0, sd).expect("finite sigma").sample(&mut rng);
                            probs[s][r][j] = (probs[s][r][j] + noise).clamp(0.0, 1.0);
                        }
                    }
                    let total: f64 = probs[s][r].iter().sum();
                    if total > 0.0 {
                        probs[s][r].iter_mut().for_each(|p| *p /= total);
                    } else {
                        probs[s][r] = [1.0 / 3.0; 3];
                    }
                }
            }
            let perturbed = PrimaryData { probs, sigma: data.sigma };
            let sec = secondary_data(&perturbed)?;
            Ok((a3_primary(&perturbed, map), a3_secondary(&sec, map)))
        })
        .collect::<Result<_>>()?;
    let (pri, sec): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();
    Ok(Uncertainty { sigma_pri: sample_std(&pri), sigma_sec: sample_std(&sec) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residuals {
    pub fit_l1: f64,
    pub secondary_constraint: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub struct ExperimentReport {
    pub a3_primary: f64,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    pub a3_secondary: Option<f64>,
    pub sigma_pri: Option<f64>,
    pub sigma_sec: Option<f64>,
    pub mapping: LabelMapping,
    pub residuals: Residuals,
}

pub struct AnalysisOptions {
    pub secondary: bool,
    /// `(samples, seed)`
    pub monte_carlo: Option<(usize, u64)>,
}

pub fn analyze(data: &PrimaryData, map: &LabelMapping, opts: &AnalysisOptions) -> Result<ExperimentReport> {
    let secondary = if opts.secondary { Some(secondary_data(data)?) } else { None };
    let mc = match opts.monte_carlo {
        Some((n, seed)) => Some(mc_uncertainty(data, map, n, seed)?),
        None => None,
    };
    Ok(ExperimentReport {
        a3_primary: a3_primary(data, map),
        s: secondary.as_ref().map(|s| s.s),
        a3_secondary: secondary.as_ref().map(|s| a3_secondary(s, map)),
        sigma_pri: mc.map(|u| u.sigma_pri),
        sigma_sec: mc.map(|u| u.sigma_sec),
        mapping: map.clone(),
        residuals: Residuals { fit_l1: map.residual(data), secondary_constraint: secondary.map(|s| s.constraint_residual) },
    })
}

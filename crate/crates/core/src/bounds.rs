//! Preparation-noncontextual and local-realist bounds.
//!
//! * [`rac_pnc_bound`]: closed form `(n + d - 1)/(n d)` for the
//!   parity-oblivious random access codes.
//! * [`local_bound`]: exhaustive search over deterministic local strategies.
//! * [`pnc_bound_lp_oracle`]: for a generic game, enumerate every
//!   deterministic decoder `g(m, y)` and solve the encoding LP for it. The
//!   optimum over classical models is attained at a deterministic decoder
//!   because the objective is linear in the decoder for a fixed encoding.

use rayon::prelude::*;
use serde::Serialize;

use crate::bellmap::BellFunctional;
use crate::error::{Error, Result};
use crate::games::{digits, is_prime, ObliviousGame};
use crate::lp::{solve, LinearProgram, LpStatus};

pub const LOCAL_ENUMERATION_LIMIT: f64 = 1e7;
pub const DECODER_ENUMERATION_LIMIT: f64 = 1e6;

/// Values closer than this are treated as ties.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    Formula,
    Bruteforce,
    LpOracle,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// `a = f[X]`, `b = g[Y]`
    Local { f: Vec<usize>, g: Vec<usize> },
    /// `decoder[m][y]` is Bob's answer; `encoding[x][m] = p(m|x)`.
    Classical { decoder: Vec<Vec<usize>>, encoding: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundResult {
    pub value: f64,
    pub method: BoundMethod,
    pub witness: Option<Witness>,
}

pub fn rac_pnc_bound(n: usize, d: usize) -> Result<f64> {
    if !is_prime(d) {
        return Err(Error::NotPrime(d));
    }
    if n == 0 {
        return Err(Error::invalid("rac bound", "n must be at least 1"));
    }
    Ok((n + d - 1) as f64 / (n * d) as f64)
}

/// Maximum of the functional over deterministic local strategies. Ties keep
/// the lexicographically first `(f, g)`.
pub fn local_bound(bell: &BellFunctional) -> Result<BoundResult> {
    let (m_a, m_b, d) = (bell.m_a(), bell.m_b(), bell.outcomes());
    let size = (d as f64).powi(m_a as i32) * (d as f64).powi(m_b as i32);
    if size > LOCAL_ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded { size, limit: LOCAL_ENUMERATION_LIMIT });
    }
    let (nf, ng) = (d.pow(m_a as u32), d.pow(m_b as u32));
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for fi in 0..nf {
        let f = digits(fi, d, m_a);
        for gi in 0..ng {
            let g = digits(gi, d, m_b);
            let mut v = 0.0;
            for x in 0..m_a {
                for y in 0..m_b {
                    v += bell.coeff(x, y, f[x], g[y]) * bell.p_a()[x] * bell.p_b()[y];
                }
            }
            if v > best.0 + TIE_TOL {
                best = (v, fi, gi);
            }
        }
    }
    Ok(BoundResult {
        value: best.0,
        method: BoundMethod::Bruteforce,
        witness: Some(Witness::Local { f: digits(best.1, d, m_a), g: digits(best.2, d, m_b) }),
    })
}

/// Preparation-noncontextual bound of the game derived from `bell`; it
/// coincides with the local bound of the functional.
pub fn pnc_bound_bellgame(bell: &BellFunctional) -> Result<BoundResult> {
    local_bound(bell)
}

/// Encoding LP for one deterministic decoder. Variables are `p(m|x)` at
/// index `x * messages + m`.
fn encoding_program(game: &ObliviousGame, messages: usize, decoder: &[usize]) -> LinearProgram {
    let (na, nb) = (game.alice_inputs(), game.bob_inputs());
    let mut objective = vec![0.0; na * messages];
    for x in 0..na {
        for m in 0..messages {
            objective[x * messages + m] =
                (0..nb).map(|y| game.p_a()[x] * game.p_b()[y] * game.payoff(x, y, decoder[m * nb + y])).sum();
        }
    }
    let mut lp = LinearProgram::new(objective);
    for x in 0..na {
        let mut row = vec![0.0; na * messages];
        row[x * messages..(x + 1) * messages].iter_mut().for_each(|v| *v = 1.0);
        lp.add_equality(row, 1.0);
    }
    for family in game.families() {
        let weights = game.set_weights(family);
        let (reference, rest) = weights.split_first().expect("families are nonempty");
        for m in 0..messages {
            for set in rest {
                let mut row = vec![0.0; na * messages];
                for &(x, w) in set {
                    row[x * messages + m] += w;
                }
                for &(x, w) in reference {
                    row[x * messages + m] -= w;
                }
                lp.add_equality(row, 0.0);
            }
        }
    }
    lp
}

/// Best classical performance with `messages` possible messages under the
/// game's obliviousness constraints, imposed on `p(m|x)` directly.
pub fn pnc_bound_lp_oracle(game: &ObliviousGame, messages: usize) -> Result<BoundResult> {
    if messages == 0 {
        return Err(Error::invalid("oracle", "needs at least one message"));
    }
    let (na, nb, no) = (game.alice_inputs(), game.bob_inputs(), game.outcomes());
    let slots = messages * nb;
    let size = (no as f64).powi(slots as i32);
    if size > DECODER_ENUMERATION_LIMIT {
        return Err(Error::GuardExceeded { size, limit: DECODER_ENUMERATION_LIMIT });
    }
    if na * messages > crate::lp::MAX_VARIABLES {
        return Err(Error::GuardExceeded { size: (na * messages) as f64, limit: crate::lp::MAX_VARIABLES as f64 });
    }
    let count = no.pow(slots as u32);
    let values: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| {
            let lp = encoding_program(game, messages, &digits(i, no, slots));
            let sol = solve(&lp)?;
            match sol.status {
                LpStatus::Optimal => Ok(sol.objective_value),
                other => Err(Error::Lp(format!("{other:?} encoding program for decoder {i}"))),
            }
        })
        .collect::<Result<_>>()?;

    // Sequential reduction keeps the first maximizer regardless of threads.
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] + TIE_TOL {
            best = i;
        }
    }
    let decoder_flat = digits(best, no, slots);
    let sol = solve(&encoding_program(game, messages, &decoder_flat))?;
    let encoding = (0..na).map(|x| sol.values[x * messages..(x + 1) * messages].to_vec()).collect();
    let decoder = decoder_flat.chunks(nb).map(<[usize]>::to_vec).collect();
    Ok(BoundResult {
        value: values[best],
        method: BoundMethod::LpOracle,
        witness: Some(Witness::Classical { decoder, encoding }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellmap::cglmp3;
    use crate::games::{make_cglmp3_game, make_rac_game, obliviousness_residual_behavior, performance, ClassicalStrategy};
    use approx::assert_abs_diff_eq;

    #[test]
    fn formula_values() {
        assert_abs_diff_eq!(rac_pnc_bound(2, 2).unwrap(), 0.75);
        assert_abs_diff_eq!(rac_pnc_bound(3, 3).unwrap(), 5.0 / 9.0);
        assert_abs_diff_eq!(rac_pnc_bound(2, 3).unwrap(), 2.0 / 3.0);
        assert!(rac_pnc_bound(2, 6).is_err());
    }

    #[test]
    fn cglmp_local_bound() {
        let r = local_bound(&cglmp3()).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.method, BoundMethod::Bruteforce);
        assert_eq!(pnc_bound_bellgame(&cglmp3()).unwrap().value, 0.5);
    }

    #[test]
    fn zero_and_single_coefficient_functionals() {
        let zero = BellFunctional::zero(2, 2, 3);
        assert_eq!(local_bound(&zero).unwrap().value, 0.0);
        assert_eq!(pnc_bound_bellgame(&zero).unwrap().value, 0.0);

        let mut coeffs = zero.coeffs().clone();
        coeffs[0][0][0][0] = 1.0;
        let single = BellFunctional::new(coeffs, vec![0.5; 2], vec![0.5; 2]).unwrap();
        let r = local_bound(&single).unwrap();
        assert_abs_diff_eq!(r.value, 0.25, epsilon = 1e-15);
        let Some(Witness::Local { f, g }) = r.witness else { panic!("missing witness") };
        assert_eq!((f[0], g[0]), (0, 0));
    }

    #[test]
    fn guard_rejects_huge_enumeration() {
        let big = BellFunctional::zero(8, 8, 3);
        assert!(matches!(local_bound(&big), Err(Error::GuardExceeded { .. })));
        let g = make_rac_game(2, 3).unwrap();
        assert!(matches!(pnc_bound_lp_oracle(&g, 9), Err(Error::GuardExceeded { .. })));
    }

    #[test]
    fn oracle_reproduces_rac_formula() {
        let r = pnc_bound_lp_oracle(&make_rac_game(2, 2).unwrap(), 2).unwrap();
        assert_abs_diff_eq!(r.value, 0.75, epsilon = 1e-9);
        let r = pnc_bound_lp_oracle(&make_rac_game(2, 3).unwrap(), 3).unwrap();
        assert_abs_diff_eq!(r.value, 2.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn oracle_witness_is_an_oblivious_strategy() {
        let g = make_rac_game(2, 3).unwrap();
        let r = pnc_bound_lp_oracle(&g, 3).unwrap();
        let Some(Witness::Classical { decoder, encoding }) = r.witness else { panic!("missing witness") };
        let s = ClassicalStrategy::with_decoder(encoding, &decoder, 3).unwrap();
        let b = s.behavior().unwrap();
        assert_abs_diff_eq!(performance(&g, &b).unwrap(), r.value, epsilon = 1e-9);
        assert!(obliviousness_residual_behavior(&g, &b).unwrap() < 1e-9);
    }

    #[test]
    fn single_message_carries_nothing() {
        let g = make_rac_game(2, 3).unwrap();
        assert_abs_diff_eq!(pnc_bound_lp_oracle(&g, 1).unwrap().value, 1.0 / 3.0, epsilon = 1e-12);
        // Every constant answer scores zero on the CGLMP game.
        assert_abs_diff_eq!(pnc_bound_lp_oracle(&make_cglmp3_game(), 1).unwrap().value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_on_cglmp_game_matches_local_bound() {
        let r = pnc_bound_lp_oracle(&make_cglmp3_game(), 3).unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-9);
    }
}

//! Integer packing of configurations and the literal exact-version route.
//!
//! Each element vector is first mapped to its sentinel form: a log-modulus
//! coordinate above `J` becomes `n(J+1)`, which keeps every `alpha` sum of at
//! most `n` elements below `n^2(J+1) + 1` and every `beta` sum at most `K`. With
//! those radices the mixed-radix code of a sum equals the sum of the codes, so
//! "is configuration `a` realizable" becomes "is there a feasible solution of
//! total integer weight exactly `code(a)`". [`literal_configurations`] answers it
//! that way and then folds saturated coordinates back to `J`, giving an
//! independent cross-check of [`super::enumerate_reachable`].

use std::collections::{BTreeSet, HashSet};

use super::{ConfigVector, ElementVector, RoundingParams, OVERFLOW};
use crate::error::{Error, Result};

/// Largest candidate grid [`literal_configurations`] will scan.
pub const LITERAL_GRID_CAP: u128 = 2_000_000;

/// Sentinel form of an element vector.
pub fn sentinel_vector(v: &ElementVector, params: &RoundingParams) -> Vec<u64> {
    let sentinel = params.n as u64 * (params.j + 1);
    v.0.iter()
        .enumerate()
        .map(|(i, &x)| if i % 2 == 0 && (x == OVERFLOW || x > params.j) { sentinel } else { x })
        .collect()
}

fn radices(width: usize, params: &RoundingParams) -> Vec<u128> {
    let n = params.n as u128;
    let alpha = n * n * (params.j as u128 + 1) + 1;
    let beta = params.k as u128 + 1;
    (0..width).map(|i| if i % 2 == 0 { alpha } else { beta }).collect()
}

/// Mixed-radix code with radices `n^2(J+1)+1` for `alpha` and `K+1` for `beta`.
pub fn encode(v: &[u64], params: &RoundingParams) -> Result<u128> {
    let mut code: u128 = 0;
    for (&x, r) in v.iter().zip(radices(v.len(), params)).rev() {
        if x as u128 >= r {
            return Err(Error::param(format!("coordinate {x} exceeds radix {r}")));
        }
        code = code.checked_mul(r).and_then(|c| c.checked_add(x as u128)).ok_or(Error::EncodingOverflow)?;
    }
    Ok(code)
}

pub fn decode(mut code: u128, width: usize, params: &RoundingParams) -> Vec<u64> {
    radices(width, params)
        .into_iter()
        .map(|r| {
            let x = code % r;
            code /= r;
            x as u64
        })
        .collect()
}

/// Realizable configurations via exact integer weights and the two-case rule.
///
/// `feasible` lists every feasible solution. The candidate grid
/// `[0, J]^L x [0, K]^L` is scanned in full, so only tiny parameters are usable.
pub fn literal_configurations(
    feasible: &[Vec<usize>],
    vectors: &[ElementVector],
    params: &RoundingParams,
) -> Result<BTreeSet<ConfigVector>> {
    let width = vectors.first().map_or(2 * params.l, |v| v.0.len());
    let l = width / 2;
    let codes =
        vectors.iter().map(|v| encode(&sentinel_vector(v, params), params)).collect::<Result<Vec<_>>>()?;
    // sigma-bar: exact total weights of feasible solutions
    let mut exact: HashSet<u128> = HashSet::new();
    for s in feasible {
        let mut total: u128 = 0;
        for &e in s {
            total = total.checked_add(codes[e]).ok_or(Error::EncodingOverflow)?;
        }
        exact.insert(total);
    }
    let grid = (params.j as u128 + 1)
        .checked_pow(l as u32)
        .and_then(|a| (params.k as u128 + 1).checked_pow(l as u32).and_then(|b| a.checked_mul(b)))
        .ok_or(Error::EncodingOverflow)?;
    if grid > LITERAL_GRID_CAP {
        return Err(Error::param(format!("literal grid of {grid} candidates exceeds {LITERAL_GRID_CAP}")));
    }
    let alpha_max = params.n as u64 * params.n as u64 * (params.j + 1);
    let mut out = BTreeSet::new();
    let mut cand = vec![0u64; width];
    loop {
        let saturated: Vec<usize> = (0..l).filter(|&k| cand[2 * k] == params.j).collect();
        let hit = if saturated.is_empty() {
            exact.contains(&encode(&cand, params)?)
        } else {
            // some a' with a'_i >= J on saturated coordinates, equal elsewhere
            let mut probe = cand.clone();
            any_lift(&mut probe, &saturated, 0, params.j, alpha_max, &exact, params)?
        };
        if hit {
            out.insert(ConfigVector(cand.clone()));
        }
        if !advance(&mut cand, params) {
            break;
        }
    }
    Ok(out)
}

fn any_lift(
    probe: &mut [u64],
    saturated: &[usize],
    depth: usize,
    lo: u64,
    hi: u64,
    exact: &HashSet<u128>,
    params: &RoundingParams,
) -> Result<bool> {
    if depth == saturated.len() {
        return Ok(exact.contains(&encode(probe, params)?));
    }
    let idx = 2 * saturated[depth];
    for v in lo..=hi {
        probe[idx] = v;
        if any_lift(probe, saturated, depth + 1, lo, hi, exact, params)? {
            return Ok(true);
        }
    }
    Ok(false)
}

fn advance(cand: &mut [u64], params: &RoundingParams) -> bool {
    for (i, x) in cand.iter_mut().enumerate() {
        let max = if i % 2 == 0 { params.j } else { params.k };
        if *x < max {
            *x += 1;
            return true;
        }
        *x = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tests::AllSubsets;
    use crate::config::{derive_params, enumerate_reachable, round_table, MomentTable};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    #[test]
    fn codes_are_additive_and_invertible() {
        let p = derive_params(3, 2, 0.3, 20.0).unwrap();
        let a = vec![1, 2, 0, 5];
        let b = vec![p.j, 1, 3, 0];
        let sum: Vec<u64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let (ca, cb) = (encode(&a, &p).unwrap(), encode(&b, &p).unwrap());
        assert_eq!(encode(&sum, &p).unwrap(), ca + cb);
        assert_eq!(decode(ca, 4, &p), a);
    }

    #[test]
    fn sentinel_replaces_overflow() {
        let p = derive_params(3, 1, 0.3, 20.0).unwrap();
        let v = ElementVector(vec![OVERFLOW, 2]);
        assert_eq!(sentinel_vector(&v, &p), vec![3 * (p.j + 1), 2]);
    }

    #[test]
    fn huge_configurations_overflow() {
        let p = derive_params(50, 40, 0.01, 1.0).unwrap();
        let v = vec![1u64; 80];
        assert_eq!(encode(&v, &p), Err(Error::EncodingOverflow));
    }

    fn all_subsets(n: usize) -> Vec<Vec<usize>> {
        (0..1usize << n).map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect()).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn literal_route_matches_reachable_dp(
            moments in proptest::collection::vec((0.01f64..1.0, 0.0f64..TAU), 1..4),
            scale in 15.0f64..40.0,
        ) {
            let n = moments.len();
            let rows = moments
                .iter()
                .map(|&(r, t)| vec![Complex64::from_polar(r, t)])
                .collect();
            let table = MomentTable::new(rows).unwrap();
            let p = derive_params(n, 1, 0.4, scale).unwrap();
            let vectors = round_table(&table, &p).unwrap();
            let dp: BTreeSet<ConfigVector> =
                enumerate_reachable(&AllSubsets(n), &vectors, &p, 1 << 16)
                    .unwrap()
                    .configs
                    .into_keys()
                    .collect();
            let literal = literal_configurations(&all_subsets(n), &vectors, &p).unwrap();
            prop_assert_eq!(dp, literal);
        }
    }
}

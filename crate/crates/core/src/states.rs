//! Counting the states `psi = (m_0, ..., m_jmax)` compatible with given
//! Betti numbers `b0 = n0`, `b1 = n1`.
//!
//! Two readings of "state" are counted. A coefficient vector forgets which
//! component carries which holes, so it counts partitions of `n1` into at
//! most `n0` parts. Treating components as distinguishable boxes ("stars
//! and bars") counts ordered compositions instead; the closed-form sums
//! below follow that reading.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Largest `n0`, `n1` accepted by the vector enumeration.
pub const VECTOR_GUARD: u64 = 40;
/// Largest `n0`, `n1` accepted by the composition count.
pub const COMPOSITION_GUARD: u64 = 60;

fn non_negative(name: &str, v: i64) -> Result<u64> {
    u64::try_from(v).map_err(|_| Error::Domain(format!("{name} must be >= 0, got {v}")))
}

/// Binomial coefficient `C(n, k)` by the multiplicative formula.
fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Closed-form number of states:
///
/// * `n1 = 0`: 1, every component is a disk;
/// * `n0 = n1 = n`: `n`;
/// * `n0 > n1`: `sum_{k=1}^{n1} C(n1-1, k-1) = 2^(n1-1)`;
/// * `n0 < n1`: `sum_{k=1}^{n0} C(n1-1, k-1)`.
pub fn count_states_formula(n0: i64, n1: i64) -> Result<BigUint> {
    let n0 = non_negative("b0", n0)?;
    let n1 = non_negative("b1", n1)?;
    Ok(if n1 == 0 {
        BigUint::from(1u32)
    } else if n0 == n1 {
        BigUint::from(n0)
    } else if n0 > n1 {
        BigUint::from(1u32) << (n1 - 1)
    } else {
        (1..=n0).map(|k| binomial(n1 - 1, k - 1)).sum()
    })
}

/// A coefficient vector, as the map `j -> m_j` of its non-zero entries.
pub type StateVector = BTreeMap<usize, u64>;

/// Enumerates every non-negative `(m_0, ..., m_jmax)` with
/// `sum m_j = n0` and `sum j m_j = n1`. The vectors are collected only
/// when `list` is set.
pub fn enumerate_vector_states(
    n0: i64,
    n1: i64,
    jmax: i64,
    list: bool,
) -> Result<(BigUint, Option<Vec<StateVector>>)> {
    let n0 = non_negative("b0", n0)?;
    let n1 = non_negative("b1", n1)?;
    let jmax = non_negative("jmax", jmax)?;
    if n0 > VECTOR_GUARD || n1 > VECTOR_GUARD {
        return Err(Error::Size(format!(
            "vector enumeration is limited to b0, b1 <= {VECTOR_GUARD}"
        )));
    }
    // a component cannot carry more than n1 holes
    let jtop = jmax.min(n1) as usize;
    let mut m = vec![0u64; jtop + 1];
    let mut count = 0u64;
    let mut states = list.then(Vec::new);
    walk(jtop, n0, n1, &mut m, &mut count, &mut states);
    Ok((BigUint::from(count), states))
}

/// Chooses `m_j` for `j` down to 1; `m_0` takes the remaining components.
fn walk(
    j: usize,
    comps: u64,
    holes: u64,
    m: &mut [u64],
    count: &mut u64,
    out: &mut Option<Vec<StateVector>>,
) {
    if j == 0 {
        if holes == 0 {
            m[0] = comps;
            *count += 1;
            if let Some(out) = out {
                out.push(
                    m.iter()
                        .enumerate()
                        .filter(|(_, &v)| v > 0)
                        .map(|(j, &v)| (j, v))
                        .collect(),
                );
            }
        }
        return;
    }
    let most = comps.min(holes / j as u64);
    for mj in 0..=most {
        m[j] = mj;
        walk(j - 1, comps - mj, holes - mj * j as u64, m, count, out);
    }
    m[j] = 0;
}

/// Number of ordered compositions of `n1` into at most `n0` positive parts,
/// by dynamic programming over the running sum. `n1 = 0` has the empty
/// composition only.
pub fn enumerate_composition_states(n0: i64, n1: i64) -> Result<BigUint> {
    let n0 = non_negative("b0", n0)?;
    let n1 = non_negative("b1", n1)?;
    if n0 > COMPOSITION_GUARD || n1 > COMPOSITION_GUARD {
        return Err(Error::Size(format!(
            "composition count is limited to b0, b1 <= {COMPOSITION_GUARD}"
        )));
    }
    let (n0, n1) = (n0 as usize, n1 as usize);
    // ways[s] = compositions of s with exactly `parts` parts
    let mut ways = vec![BigUint::ZERO; n1 + 1];
    ways[0] = BigUint::from(1u32);
    let mut total = if n1 == 0 {
        BigUint::from(1u32)
    } else {
        BigUint::ZERO
    };
    for _parts in 1..=n0.min(n1) {
        let mut next = vec![BigUint::ZERO; n1 + 1];
        for (s, w) in ways.iter().enumerate() {
            if *w == BigUint::ZERO {
                continue;
            }
            for part in 1..=n1 - s {
                next[s + part] += w;
            }
        }
        ways = next;
        total += &ways[n1];
    }
    Ok(total)
}

/// All three counts for one `(b0, b1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCount {
    pub n0: u64,
    pub n1: u64,
    pub formula: BigUint,
    /// `None` beyond [`VECTOR_GUARD`].
    pub vector: Option<BigUint>,
    /// `None` beyond [`COMPOSITION_GUARD`].
    pub composition: Option<BigUint>,
    /// Set when the vector count differs from the closed form.
    pub discrepancy: bool,
    pub states: Option<Vec<StateVector>>,
}

pub fn count_states(n0: i64, n1: i64, list: bool) -> Result<StateCount> {
    let formula = count_states_formula(n0, n1)?;
    let (vector, states) = match enumerate_vector_states(n0, n1, n1, list) {
        Ok((c, s)) => (Some(c), s),
        Err(Error::Size(_)) => (None, None),
        Err(e) => return Err(e),
    };
    let composition = match enumerate_composition_states(n0, n1) {
        Ok(c) => Some(c),
        Err(Error::Size(_)) => None,
        Err(e) => return Err(e),
    };
    let discrepancy = vector.as_ref().is_some_and(|v| *v != formula);
    Ok(StateCount {
        n0: n0 as u64,
        n1: n1 as u64,
        formula,
        vector,
        composition,
        discrepancy,
        states,
    })
}

impl StateCount {
    /// JSON with the counts as bare integers, e.g.
    /// `{"b0":2,"b1":2,"formula":2,"vector":2,"composition":2,"discrepancy":false}`.
    pub fn to_json(&self) -> String {
        let opt = |v: &Option<BigUint>| {
            v.as_ref()
                .map_or_else(|| "null".to_string(), |v| v.to_string())
        };
        let mut out = format!(
            "{{\"b0\":{},\"b1\":{},\"formula\":{},\"vector\":{},\"composition\":{},\"discrepancy\":{}",
            self.n0,
            self.n1,
            self.formula,
            opt(&self.vector),
            opt(&self.composition),
            self.discrepancy
        );
        if let Some(states) = &self.states {
            let items: Vec<String> = states
                .iter()
                .map(|s| {
                    let kv: Vec<String> = s.iter().map(|(j, m)| format!("\"{j}\":{m}")).collect();
                    format!("{{{}}}", kv.join(","))
                })
                .collect();
            out.push_str(&format!(",\"states\":[{}]", items.join(",")));
        }
        out.push('}');
        out
    }
}

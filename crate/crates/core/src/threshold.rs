//! Exact small-`n` analysis of boolean functions under product measures.
//!
//! Everything here is computed by full enumeration of `{0,1}^n` (`n ≤ 24`),
//! which is also the oracle the Monte Carlo side is checked against.
//!
//! Total influence uses the resampling definition
//! `I(f) = Σ_i P[f(X) ≠ f(X with X_i replaced by an independent copy)]`,
//! not the pivotality sum found in some texts.

use std::sync::OnceLock;

use bitvec::vec::BitVec;
use num::{BigRational, One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ConfettiError, Result};

pub const MAX_VARS: usize = 24;
pub const MAX_BOOSTER_VARS: usize = 20;
pub const MAX_BOOSTER_SET: usize = 4;

/// Explicit truth table on `n` variables; bit `i` of an input index is `x_i`.
#[derive(Debug, Clone)]
pub struct BooleanFunction {
    n: usize,
    table: BitVec,
    upset: OnceLock<bool>,
}

impl PartialEq for BooleanFunction {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.table == other.table
    }
}

impl BooleanFunction {
    pub fn from_fn(n: usize, f: impl Fn(u32) -> bool) -> Result<Self> {
        check_size(n)?;
        let table = (0..1u32 << n).map(f).collect();
        Ok(BooleanFunction {
            n,
            table,
            upset: OnceLock::new(),
        })
    }

    pub fn from_table(n: usize, table: BitVec) -> Result<Self> {
        check_size(n)?;
        if table.len() != 1 << n {
            return Err(ConfettiError::InvalidParams(format!(
                "truth table has {} entries, expected {}",
                table.len(),
                1usize << n
            )));
        }
        Ok(BooleanFunction {
            n,
            table,
            upset: OnceLock::new(),
        })
    }

    /// Parses a hex truth table: digit `j` holds entries `4j..4j+3`, least
    /// significant bit first. Whitespace is ignored; `n` is inferred.
    pub fn from_hex(text: &str) -> Result<Self> {
        let digits: Vec<u32> = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                c.to_digit(16)
                    .ok_or_else(|| ConfettiError::InvalidParams(format!("bad hex digit '{c}'")))
            })
            .collect::<Result<_>>()?;
        let entries = digits.len() * 4;
        if entries < 4 || !entries.is_power_of_two() {
            return Err(ConfettiError::InvalidParams(format!(
                "hex table must encode 2^n entries with n >= 2, got {entries}"
            )));
        }
        let n = entries.trailing_zeros() as usize;
        let mut table = BitVec::with_capacity(entries);
        for d in digits {
            for b in 0..4 {
                table.push(d >> b & 1 == 1);
            }
        }
        BooleanFunction::from_table(n, table)
    }

    pub fn to_hex(&self) -> String {
        self.table
            .chunks(4)
            .map(|c| {
                let v = c.iter().enumerate().fold(0u32, |acc, (b, bit)| acc | (u32::from(*bit) << b));
                char::from_digit(v, 16).unwrap()
            })
            .collect()
    }

    /// `f(x) = x_i`.
    pub fn dictator(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(ConfettiError::InvalidParams(format!("dictator index {i} >= n = {n}")));
        }
        BooleanFunction::from_fn(n, |x| x >> i & 1 == 1)
    }

    pub fn or(n: usize) -> Result<Self> {
        BooleanFunction::from_fn(n, |x| x != 0)
    }

    pub fn and(n: usize) -> Result<Self> {
        BooleanFunction::from_fn(n, move |x| x == (1u32 << n) - 1)
    }

    /// Strict majority; for even `n` ties evaluate to 0.
    pub fn majority(n: usize) -> Result<Self> {
        BooleanFunction::from_fn(n, move |x| 2 * x.count_ones() as usize > n)
    }

    pub fn parity(n: usize) -> Result<Self> {
        BooleanFunction::from_fn(n, |x| x.count_ones() % 2 == 1)
    }

    pub fn constant(n: usize, value: bool) -> Result<Self> {
        BooleanFunction::from_fn(n, move |_| value)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn eval(&self, x: u32) -> bool {
        self.table[x as usize]
    }

    pub fn table(&self) -> &BitVec {
        &self.table
    }

    /// Whether the function is non-decreasing; cached after the first call.
    pub fn up_set_check(&self) -> bool {
        *self.upset.get_or_init(|| {
            let size = 1u32 << self.n;
            (0..size).all(|x| {
                !self.eval(x) || (0..self.n).all(|i| x >> i & 1 == 1 || self.eval(x | 1 << i))
            })
        })
    }

    fn require_monotone(&self) -> Result<()> {
        if self.up_set_check() {
            Ok(())
        } else {
            Err(ConfettiError::NotMonotone)
        }
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_VARS {
        return Err(ConfettiError::Infeasible(format!(
            "n = {n} outside 1..={MAX_VARS}"
        )));
    }
    Ok(())
}

/// Independent Bernoulli coordinates `X_i ~ Be(p_i)` with `p_i ∈ (0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductMeasure {
    p: Vec<f64>,
}

impl ProductMeasure {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(bad) = p.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(ConfettiError::InvalidParams(format!(
                "probabilities must lie in (0, 1), got {bad}"
            )));
        }
        Ok(ProductMeasure { p })
    }

    pub fn uniform(n: usize, p: f64) -> Result<Self> {
        ProductMeasure::new(vec![p; n])
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    /// Same measure with coordinate `i` replaced.
    pub fn with(&self, i: usize, value: f64) -> Result<Self> {
        let mut p = self.p.clone();
        p[i] = value;
        ProductMeasure::new(p)
    }

    /// The measure repeated `k` times, for powered functions.
    pub fn repeat(&self, k: usize) -> ProductMeasure {
        ProductMeasure {
            p: self.p.iter().copied().cycle().take(self.p.len() * k).collect(),
        }
    }
}

/// `P(X = x)` factored into low-bit and high-bit lookup tables.
struct Weights {
    lo: Vec<f64>,
    hi: Vec<f64>,
    shift: u32,
    mask: u32,
}

impl Weights {
    fn new(p: &[f64]) -> Self {
        let shift = (p.len() / 2) as u32;
        let table = |ps: &[f64]| -> Vec<f64> {
            let mut t = vec![1.0];
            for &pi in ps {
                let mut next = Vec::with_capacity(t.len() * 2);
                next.extend(t.iter().map(|w| w * (1.0 - pi)));
                next.extend(t.iter().map(|w| w * pi));
                t = next;
            }
            t
        };
        Weights {
            lo: table(&p[..shift as usize]),
            hi: table(&p[shift as usize..]),
            shift,
            mask: (1u32 << shift) - 1,
        }
    }

    #[inline]
    fn get(&self, x: u32) -> f64 {
        self.lo[(x & self.mask) as usize] * self.hi[(x >> self.shift) as usize]
    }
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

fn check_dims(f: &BooleanFunction, mu: &ProductMeasure) -> Result<()> {
    if f.n != mu.len() {
        return Err(ConfettiError::DimensionMismatch {
            expected: f.n,
            found: mu.len(),
        });
    }
    Ok(())
}

/// `P[f(X) = 1]` under the product measure.
pub fn prob(f: &BooleanFunction, mu: &ProductMeasure) -> Result<f64> {
    check_dims(f, mu)?;
    let w = Weights::new(&mu.p);
    let mut acc = Kahan::default();
    for x in f.table.iter_ones() {
        acc.add(w.get(x as u32));
    }
    Ok(acc.sum)
}

/// Exact `P[f(X) = 1]` with rational coordinate probabilities.
pub fn prob_rational(f: &BooleanFunction, p: &[BigRational]) -> Result<BigRational> {
    if f.n != p.len() {
        return Err(ConfettiError::DimensionMismatch {
            expected: f.n,
            found: p.len(),
        });
    }
    let one = BigRational::one();
    let mut total = BigRational::zero();
    for x in f.table.iter_ones() {
        let mut w = BigRational::one();
        for (i, pi) in p.iter().enumerate() {
            if x >> i & 1 == 1 {
                w *= pi;
            } else {
                w *= &one - pi;
            }
        }
        total += w;
    }
    Ok(total)
}

/// `P[f(X) ≠ f(X₁, …, Y_i, …, X_n)]` with `Y_i` an independent copy of `X_i`.
pub fn resample_flip_prob(f: &BooleanFunction, mu: &ProductMeasure, i: usize) -> Result<f64> {
    check_dims(f, mu)?;
    if i >= f.n {
        return Err(ConfettiError::InvalidParams(format!("index {i} >= n = {}", f.n)));
    }
    let w = Weights::new(&mu.p);
    let pi = mu.p[i];
    let bit = 1u32 << i;
    let mut acc = Kahan::default();
    for x in 0..1u32 << f.n {
        if x & bit != 0 {
            continue;
        }
        let up = x | bit;
        if f.eval(x) != f.eval(up) {
            // (X_i, Y_i) = (0, 1) or (1, 0)
            acc.add(w.get(x) * pi + w.get(up) * (1.0 - pi));
        }
    }
    Ok(acc.sum)
}

/// `∂/∂p_i P[f = 1]` through the resampling form of the Margulis–Russo formula.
pub fn pivotal_derivative(f: &BooleanFunction, mu: &ProductMeasure, i: usize) -> Result<f64> {
    f.require_monotone()?;
    let flip = resample_flip_prob(f, mu, i)?;
    let pi = mu.p[i];
    Ok(flip / (2.0 * pi * (1.0 - pi)))
}

/// `∂/∂p_i P[f = 1] = E[f | X_i = 1] − E[f | X_i = 0]`, using that the
/// probability is affine in each `p_i`.
pub fn conditional_difference(f: &BooleanFunction, mu: &ProductMeasure, i: usize) -> Result<f64> {
    check_dims(f, mu)?;
    let w = Weights::new(&mu.p);
    let pi = mu.p[i];
    let (mut on, mut off) = (Kahan::default(), Kahan::default());
    for x in f.table.iter_ones() {
        let x = x as u32;
        if x >> i & 1 == 1 {
            on.add(w.get(x));
        } else {
            off.add(w.get(x));
        }
    }
    Ok(on.sum / pi - off.sum / (1.0 - pi))
}

pub fn total_influence(f: &BooleanFunction, mu: &ProductMeasure) -> Result<f64> {
    check_dims(f, mu)?;
    let mut acc = Kahan::default();
    for i in 0..f.n {
        acc.add(resample_flip_prob(f, mu, i)?);
    }
    Ok(acc.sum)
}

/// Both sides of `I(f) = 2 Σ_i p_i (1 − p_i) ∂_i P[f = 1]` for monotone `f`.
///
/// The left side comes from resampling, the right from conditional
/// differences, so the two are computed along independent routes.
pub fn influence_identity_check(f: &BooleanFunction, mu: &ProductMeasure) -> Result<(f64, f64)> {
    f.require_monotone()?;
    let lhs = total_influence(f, mu)?;
    let mut rhs = Kahan::default();
    for i in 0..f.n {
        let pi = mu.p[i];
        rhs.add(2.0 * pi * (1.0 - pi) * conditional_difference(f, mu, i)?);
    }
    Ok((lhs, rhs.sum))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Booster {
    /// Conditioned coordinates, ascending.
    pub set: Vec<usize>,
    /// Values imposed on `set`, in the same order.
    pub assignment: Vec<bool>,
    /// `E[f | X_T = z]`.
    pub conditional: f64,
    /// `conditional − E[f]`.
    pub boost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoosterReport {
    pub mean: f64,
    pub tau: f64,
    pub max_set_size: usize,
    pub boosters: Vec<Booster>,
    /// Largest conditional mean over all-ones conditionings (monotone `f` only).
    pub strongest_all_ones: Option<Booster>,
    /// Smallest conditional mean over all-zeros conditionings (monotone `f` only).
    pub strongest_all_zeros: Option<Booster>,
}

const BOOST_EPS: f64 = 1e-12;

fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if cur.len() == k {
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Conditional means `E[f | X_T = z]` for every `z`, indexed by the packed assignment.
pub fn conditional_means(f: &BooleanFunction, mu: &ProductMeasure, set: &[usize]) -> Result<Vec<f64>> {
    check_dims(f, mu)?;
    let w = Weights::new(&mu.p);
    let m = set.len();
    let pack = |x: u32| -> usize {
        set.iter()
            .enumerate()
            .fold(0usize, |acc, (j, &i)| acc | (((x >> i) & 1) as usize) << j)
    };
    let mut mass = vec![0.0; 1 << m];
    for x in f.table.iter_ones() {
        mass[pack(x as u32)] += w.get(x as u32);
    }
    Ok((0..1usize << m)
        .map(|z| {
            let pz: f64 = set
                .iter()
                .enumerate()
                .map(|(j, &i)| if z >> j & 1 == 1 { mu.p[i] } else { 1.0 - mu.p[i] })
                .product();
            mass[z] / pz
        })
        .collect())
}

/// All `τ`-boosters over coordinate sets of size at most `max_set`.
///
/// For `τ > 0` both directions are reported: conditionings raising the mean by
/// at least `τ` and lowering it by at least `τ`. For `τ < 0` only those with
/// `E[f | X_T = z] ≤ E[f] + τ` are reported.
pub fn find_boosters(f: &BooleanFunction, mu: &ProductMeasure, max_set: usize, tau: f64) -> Result<BoosterReport> {
    check_dims(f, mu)?;
    if f.n > MAX_BOOSTER_VARS || max_set > MAX_BOOSTER_SET || max_set == 0 || max_set > f.n {
        return Err(ConfettiError::Infeasible(format!(
            "booster search needs 1 <= K <= min(n, {MAX_BOOSTER_SET}) and n <= {MAX_BOOSTER_VARS} (n = {}, K = {max_set})",
            f.n
        )));
    }
    let mean = prob(f, mu)?;
    let monotone = f.up_set_check();
    let sets = subsets_up_to(f.n, max_set);
    let per_set: Vec<Vec<Booster>> = sets
        .par_iter()
        .map(|set| {
            let means = conditional_means(f, mu, set).expect("dimensions checked");
            means
                .into_iter()
                .enumerate()
                .map(|(z, conditional)| Booster {
                    set: set.clone(),
                    assignment: (0..set.len()).map(|j| z >> j & 1 == 1).collect(),
                    conditional,
                    boost: conditional - mean,
                })
                .collect()
        })
        .collect();
    let all: Vec<Booster> = per_set.into_iter().flatten().collect();
    let qualifies = |b: &Booster| {
        if tau >= 0.0 {
            b.boost.abs() >= tau - BOOST_EPS
        } else {
            b.boost <= tau + BOOST_EPS
        }
    };
    let boosters: Vec<Booster> = all.iter().filter(|b| qualifies(b)).cloned().collect();
    let (mut ones, mut zeros) = (None::<Booster>, None::<Booster>);
    if monotone {
        for b in &all {
            if b.assignment.iter().all(|&v| v)
                && ones.as_ref().map_or(true, |o| b.conditional > o.conditional + BOOST_EPS)
            {
                ones = Some(b.clone());
            }
            if b.assignment.iter().all(|&v| !v)
                && zeros.as_ref().map_or(true, |o| b.conditional < o.conditional - BOOST_EPS)
            {
                zeros = Some(b.clone());
            }
        }
    }
    Ok(BoosterReport {
        mean,
        tau,
        max_set_size: max_set,
        boosters,
        strongest_all_ones: ones,
        strongest_all_zeros: zeros,
    })
}

/// `g(x_1, …, x_{kn}) = Π_j f(block j)` with blocks of `n` consecutive variables.
pub fn power_product(f: &BooleanFunction, k: usize) -> Result<BooleanFunction> {
    if k == 0 || k * f.n > MAX_VARS {
        return Err(ConfettiError::Infeasible(format!(
            "power {k} of a {}-variable function exceeds {MAX_VARS} variables",
            f.n
        )));
    }
    let n = f.n;
    let mask = (1u32 << n) - 1;
    BooleanFunction::from_fn(k * n, |x| (0..k).all(|j| f.eval((x >> (j * n)) & mask)))
}

//! Exact rational linear algebra for stoichiometric matrices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;
pub type RatMatrix = Vec<Vec<Rat>>;

/// Exact rational value of `x` if it is a terminating decimal with at most
/// nine fractional digits.
pub fn decimal_to_rational(x: f64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    let mut den: i64 = 1;
    for _ in 0..=9 {
        let p = (x * den as f64).round();
        if p.abs() < 9.0e15 && p / den as f64 == x {
            return Some(Rat::new(BigInt::from(p as i64), BigInt::from(den)));
        }
        den *= 10;
    }
    None
}

pub fn to_f64(q: &Rat) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Reduces `m` to reduced row echelon form in place and returns the pivot
/// columns. Zero rows are dropped.
pub fn rref(m: &mut RatMatrix) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in 0..cols {
                    let delta = &factor * &m[r][j];
                    m[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    pivots
}

pub fn rank(m: &RatMatrix) -> usize {
    let mut copy = m.clone();
    rref(&mut copy).len()
}

/// Basis of the right kernel `{x : m x = 0}`, one basis vector per free
/// column, in ascending order of the free column.
pub fn kernel(m: &RatMatrix, cols: usize) -> RatMatrix {
    let mut r = m.clone();
    let pivots = rref(&mut r);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rat::zero(); cols];
            v[f] = Rat::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r[row][f].clone();
            }
            v
        })
        .collect()
}

pub fn transpose(m: &RatMatrix, cols: usize) -> RatMatrix {
    (0..cols)
        .map(|j| m.iter().map(|row| row[j].clone()).collect())
        .collect()
}

fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.abs(), b.abs());
    while !b.is_zero() {
        let t = &a % &b;
        a = b;
        b = t;
    }
    a
}

/// Scales `v` to a primitive integer vector (gcd 1) with the same sign.
pub fn primitive(v: &[Rat]) -> Vec<Rat> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| {
        let d = x.denom();
        &acc / gcd(&acc, d) * d
    });
    let ints: Vec<BigInt> = v.iter().map(|x| (x * &lcm).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| gcd(&acc, x));
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|x| Rat::from_integer(x / &g)).collect()
}

/// Minimal nonnegative vectors `x >= 0` with `x^T a = 0` for an `n x r`
/// matrix `a`, by pairwise elimination of columns.
///
/// Returns `None` when the intermediate row set exceeds `limit`.
pub fn semiflows(a: &RatMatrix, n: usize, r: usize, limit: usize) -> Option<RatMatrix> {
    // each row: (remaining columns of a, combination coefficients)
    let mut rows: Vec<(Vec<Rat>, Vec<Rat>)> = (0..n)
        .map(|i| {
            let mut e = vec![Rat::zero(); n];
            e[i] = Rat::one();
            (a[i].clone(), e)
        })
        .collect();
    for c in 0..r {
        let mut next: Vec<(Vec<Rat>, Vec<Rat>)> = Vec::new();
        let (zero, nonzero): (Vec<_>, Vec<_>) = rows.into_iter().partition(|row| row.0[c].is_zero());
        next.extend(zero);
        let pos: Vec<_> = nonzero.iter().filter(|row| row.0[c].is_positive()).collect();
        let neg: Vec<_> = nonzero.iter().filter(|row| row.0[c].is_negative()).collect();
        for p in &pos {
            for q in &neg {
                let a_p = p.0[c].clone();
                let a_q = -q.0[c].clone();
                let head: Vec<Rat> = p.0.iter().zip(&q.0).map(|(x, y)| x * &a_q + y * &a_p).collect();
                let comb: Vec<Rat> = p.1.iter().zip(&q.1).map(|(x, y)| x * &a_q + y * &a_p).collect();
                // rescale both halves alike so head stays comb^T a
                let reduced = primitive(&comb);
                let k = comb.iter().position(|x| !x.is_zero()).expect("nonnegative combination is nonzero");
                let factor = &reduced[k] / &comb[k];
                let head = head.iter().map(|x| x * &factor).collect();
                next.push((head, reduced));
            }
        }
        // keep support-minimal rows only
        let supports: Vec<Vec<bool>> = next
            .iter()
            .map(|row| row.1.iter().map(|x| !x.is_zero()).collect())
            .collect();
        let mut keep = vec![true; next.len()];
        for i in 0..next.len() {
            for j in 0..next.len() {
                if i == j || !keep[j] {
                    continue;
                }
                let sub = supports[j].iter().zip(&supports[i]).all(|(&sj, &si)| !sj || si);
                if sub && (supports[i] != supports[j] || j < i) {
                    keep[i] = false;
                    break;
                }
            }
        }
        rows = next
            .into_iter()
            .zip(keep)
            .filter_map(|(row, k)| k.then_some(row))
            .collect();
        if rows.len() > limit {
            return None;
        }
    }
    Some(rows.into_iter().map(|row| primitive(&row.1)).collect())
}

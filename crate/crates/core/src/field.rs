//! Finite fields F_q and reduced row echelon forms over them.
//!
//! Elements are encoded as integers 0..q. For q = p^k an element is the
//! polynomial whose base-p digits are its coefficients, reduced modulo a
//! fixed monic irreducible of degree k.

use crate::error::{HdxError, Result};

#[derive(Clone, Debug)]
pub struct GaloisField {
    q: usize,
    p: usize,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
    modulus: Vec<usize>,
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Returns (p, k) with q = p^k, or None.
pub fn prime_power(q: usize) -> Option<(usize, usize)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let (mut r, mut k) = (q, 0);
    while r % p == 0 {
        r /= p;
        k += 1;
    }
    (r == 1 && is_prime(p)).then_some((p, k))
}

fn poly_mulmod(a: &[usize], b: &[usize], modulus: &[usize], p: usize) -> Vec<usize> {
    let k = modulus.len() - 1;
    let mut prod = vec![0; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    for deg in (k..prod.len()).rev() {
        let c = prod[deg];
        if c == 0 {
            continue;
        }
        for (t, &mc) in modulus.iter().enumerate() {
            let idx = deg - k + t;
            prod[idx] = (prod[idx] + p * p - c * mc % p) % p;
        }
    }
    prod.truncate(k);
    prod.resize(k, 0);
    prod
}

fn poly_has_factor(f: &[usize], p: usize) -> bool {
    // trial division by every monic polynomial of degree 1..=deg/2
    let n = f.len() - 1;
    for deg in 1..=n / 2 {
        for code in 0..p.pow(deg as u32) {
            let mut g: Vec<usize> = (0..deg).map(|i| code / p.pow(i as u32) % p).collect();
            g.push(1);
            let mut r = f.to_vec();
            for top in (deg..=n).rev() {
                let c = r[top];
                if c == 0 {
                    continue;
                }
                for (t, &gc) in g.iter().enumerate() {
                    let idx = top - deg + t;
                    r[idx] = (r[idx] + p * p - c * gc % p) % p;
                }
            }
            if r[..deg].iter().all(|&c| c == 0) {
                return true;
            }
        }
    }
    false
}

/// First monic irreducible of degree k over F_p, in increasing order of the
/// base-p code of its lower coefficients. Coefficients are listed constant first.
pub fn default_modulus(p: usize, k: usize) -> Vec<usize> {
    for code in 0..p.pow(k as u32) {
        let mut f: Vec<usize> = (0..k).map(|i| code / p.pow(i as u32) % p).collect();
        f.push(1);
        if k == 1 || (f[0] != 0 && !poly_has_factor(&f, p)) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

impl GaloisField {
    pub fn new(q: usize) -> Result<Self> {
        let (p, k) = prime_power(q).ok_or_else(|| HdxError::BadArgs(format!("q = {q} is not a prime power")))?;
        Self::with_modulus(q, default_modulus(p, k))
    }

    /// `modulus` is monic of degree k, coefficients constant first.
    pub fn with_modulus(q: usize, modulus: Vec<usize>) -> Result<Self> {
        let (p, k) = prime_power(q).ok_or_else(|| HdxError::BadArgs(format!("q = {q} is not a prime power")))?;
        if q > 256 {
            return Err(HdxError::BadArgs(format!("q = {q} exceeds 256")));
        }
        if modulus.len() != k + 1 || modulus[k] != 1 || (k > 1 && poly_has_factor(&modulus, p)) {
            return Err(HdxError::BadArgs("modulus is not a monic irreducible of the right degree".into()));
        }
        let digits = |x: usize| -> Vec<usize> { (0..k).map(|i| x / p.pow(i as u32) % p).collect() };
        let undigits = |v: &[usize]| -> usize { v.iter().enumerate().map(|(i, &c)| c * p.pow(i as u32)).sum() };
        let mut add = vec![0u8; q * q];
        let mut mul = vec![0u8; q * q];
        for a in 0..q {
            let da = digits(a);
            for b in 0..q {
                let db = digits(b);
                let s: Vec<usize> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[a * q + b] = undigits(&s) as u8;
                mul[a * q + b] = undigits(&poly_mulmod(&da, &db, &modulus, p)) as u8;
            }
        }
        let neg = (0..q).map(|a| (0..q).find(|&b| add[a * q + b] == 0).unwrap() as u8).collect();
        let inv = (0..q)
            .map(|a| if a == 0 { 0 } else { (1..q).find(|&b| mul[a * q + b] == 1).unwrap() as u8 })
            .collect();
        Ok(GaloisField { q, p, add, mul, neg, inv, modulus })
    }

    pub fn q(&self) -> usize {
        self.q
    }
    pub fn characteristic(&self) -> usize {
        self.p
    }
    pub fn modulus(&self) -> &[usize] {
        &self.modulus
    }
    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.add[a as usize * self.q + b as usize]
    }
    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul[a as usize * self.q + b as usize]
    }
    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.neg[a as usize]
    }
    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        self.inv[a as usize]
    }
    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg(b))
    }

    /// Reduced row echelon form of the row-major `rows × cols` matrix;
    /// zero rows are dropped.
    pub fn rref(&self, mat: &[u8], rows: usize, cols: usize) -> Vec<u8> {
        let mut a = mat.to_vec();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(piv) = (r..rows).find(|&i| a[i * cols + c] != 0) else { continue };
            if piv != r {
                for j in 0..cols {
                    a.swap(piv * cols + j, r * cols + j);
                }
            }
            let s = self.inv(a[r * cols + c]);
            for j in 0..cols {
                a[r * cols + j] = self.mul(a[r * cols + j], s);
            }
            for i in 0..rows {
                if i == r {
                    continue;
                }
                let f = a[i * cols + c];
                if f == 0 {
                    continue;
                }
                for j in 0..cols {
                    let t = self.mul(f, a[r * cols + j]);
                    a[i * cols + j] = self.sub(a[i * cols + j], t);
                }
            }
            r += 1;
        }
        a.truncate(r * cols);
        a
    }

    /// Row-major product of `a` (r × k) and `b` (k × c).
    pub fn matmul(&self, a: &[u8], b: &[u8], r: usize, k: usize, c: usize) -> Vec<u8> {
        let mut out = vec![0u8; r * c];
        for i in 0..r {
            for t in 0..k {
                let x = a[i * k + t];
                if x == 0 {
                    continue;
                }
                for j in 0..c {
                    out[i * c + j] = self.add(out[i * c + j], self.mul(x, b[t * c + j]));
                }
            }
        }
        out
    }

    /// Every k-dimensional subspace of F_q^n as a k × n RREF, row-major.
    /// Ordered by pivot set (lexicographic) then free entries.
    pub fn subspaces(&self, n: usize, k: usize) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        if k > n {
            return out;
        }
        let mut pivots: Vec<usize> = (0..k).collect();
        loop {
            let mut free = Vec::new();
            for (i, &pc) in pivots.iter().enumerate() {
                for j in (pc + 1)..n {
                    if !pivots.contains(&j) {
                        free.push(i * n + j);
                    }
                }
            }
            let mut base = vec![0u8; k * n];
            for (i, &pc) in pivots.iter().enumerate() {
                base[i * n + pc] = 1;
            }
            let mut counter = vec![0usize; free.len()];
            loop {
                let mut m = base.clone();
                for (slot, &v) in free.iter().zip(&counter) {
                    m[*slot] = v as u8;
                }
                out.push(m);
                let mut t = 0;
                while t < counter.len() {
                    counter[t] += 1;
                    if counter[t] < self.q {
                        break;
                    }
                    counter[t] = 0;
                    t += 1;
                }
                if t == counter.len() {
                    break;
                }
            }
            // next pivot combination
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if pivots[i] < n - k + i {
                    pivots[i] += 1;
                    for j in (i + 1)..k {
                        pivots[j] = pivots[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Codimension-one subspaces of the span of the k × n RREF `basis`, as RREFs.
    pub fn hyperplanes(&self, basis: &[u8], k: usize, n: usize) -> Vec<Vec<u8>> {
        if k == 0 {
            return Vec::new();
        }
        self.subspaces(k, k - 1)
            .into_iter()
            .map(|coef| {
                let m = self.matmul(&coef, basis, k - 1, k, n);
                self.rref(&m, k - 1, n)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_powers() {
        assert_eq!(prime_power(8), Some((2, 3)));
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(6), None);
        assert_eq!(prime_power(1), None);
    }

    #[test]
    fn field_axioms_small() {
        for q in [2, 3, 4, 5, 8, 9] {
            let f = GaloisField::new(q).unwrap();
            for a in 0..q as u8 {
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a)), 1, "q={q} a={a}");
                }
                assert_eq!(f.add(a, f.neg(a)), 0);
                for b in 0..q as u8 {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in 0..q as u8 {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                        assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
                    }
                }
            }
        }
    }

    #[test]
    fn f4_modulus_is_x2_x_1() {
        assert_eq!(default_modulus(2, 2), vec![1, 1, 1]);
        assert_eq!(default_modulus(2, 3), vec![1, 1, 0, 1]);
    }

    #[test]
    fn subspace_counts_f2() {
        let f = GaloisField::new(2).unwrap();
        assert_eq!(f.subspaces(4, 2).len(), 35);
        assert_eq!(f.subspaces(3, 1).len(), 7);
        assert_eq!(f.subspaces(3, 0).len(), 1);
        let plane = &f.subspaces(3, 2)[0];
        assert_eq!(f.hyperplanes(plane, 2, 3).len(), 3);
    }
}
